#pragma once

#include "certrom/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace certrom {

struct Rectangle {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

/// Tensor-product quadrilateral mesh. Nodes are numbered lexicographically by (y, x):
/// node(i, j) = j * (nx + 1) + i. Cells likewise: cell(i, j) = j * nx + i.
class StructuredGrid {
 public:
  StructuredGrid(Rectangle domain, Index nx, Index ny);

  const Rectangle& domain() const { return domain_; }
  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  double hx() const { return (domain_.x1 - domain_.x0) / static_cast<double>(nx_); }
  double hy() const { return (domain_.y1 - domain_.y0) / static_cast<double>(ny_); }
  Index node_count() const { return (nx_ + 1) * (ny_ + 1); }
  Index cell_count() const { return nx_ * ny_; }

  Index node(Index i, Index j) const { return j * (nx_ + 1) + i; }
  Index cell(Index i, Index j) const { return j * nx_ + i; }
  std::array<double, 2> node_coords(Index n) const;
  std::array<double, 2> cell_center(Index c) const;
  /// Local order (0,0), (1,0), (0,1), (1,1).
  std::array<Index, 4> cell_nodes(Index c) const;
  /// Cells whose centers lie inside r.
  std::vector<Index> cells_in(const Rectangle& r) const;

 private:
  Rectangle domain_;
  Index nx_;
  Index ny_;
};

StructuredGrid build_grid(Rectangle domain, Index nx, Index ny);

/// Cellwise-constant scalar field.
struct FieldRaster {
  Index nx = 0;
  Index ny = 0;
  std::vector<double> values;  // cell-indexed, same order as StructuredGrid::cell

  double at(Index c) const { return values[static_cast<std::size_t>(c)]; }
  static FieldRaster constant(Index nx, Index ny, double value);
};

/// Loads a CSV raster with ny rows of nx values, first row = top of the domain, and
/// rescales its values linearly onto [lo, hi].
FieldRaster load_raster_csv(const std::string& path, Index nx, Index ny, double lo, double hi);
/// Same as load_raster_csv, from an in-memory CSV text.
FieldRaster parse_raster_csv(const std::string& text, Index nx, Index ny, double lo, double hi);
/// Seeded layered log-uniform field, rescaled onto [lo, hi].
FieldRaster synthetic_layered_raster(Index nx, Index ny, std::uint64_t seed, double lo, double hi);

/// Cellwise-constant velocity.
struct VelocityField {
  std::vector<double> vx;
  std::vector<double> vy;
};

/// Element matrices on one rectangular cell, computed by 2x2 Gauss quadrature.
struct ElementMatrices {
  Eigen::Matrix4d mass;
  Eigen::Matrix4d stiffness;
  Eigen::Matrix4d advection_x;  // int (d/dx phi_j) phi_i
  Eigen::Matrix4d advection_y;  // int (d/dy phi_j) phi_i
};
ElementMatrices element_matrices(double hx, double hy);

SparseMatrix assemble_mass(const StructuredGrid& grid);
SparseMatrix assemble_diffusion(const StructuredGrid& grid, const FieldRaster& kappa);
/// Diffusion restricted to the masked cells.
SparseMatrix assemble_diffusion(const StructuredGrid& grid, const FieldRaster& kappa, const std::vector<bool>& mask);
SparseMatrix assemble_advection(const StructuredGrid& grid, const VelocityField& velocity);
SparseMatrix assemble_reaction(const StructuredGrid& grid, const std::vector<bool>& mask);
/// Averaging functional over a cell set.
Vector assemble_cell_average(const StructuredGrid& grid, const std::vector<Index>& cells);
/// Averaging functional over boundary edges; each edge is a pair of adjacent boundary nodes.
Vector assemble_boundary_average(const StructuredGrid& grid, const std::vector<std::array<Index, 2>>& edges);
/// Load vector int f phi_i with f = 1 on the given cells.
Vector assemble_cell_load(const StructuredGrid& grid, const std::vector<Index>& cells);

struct OperatorComponent {
  std::string name;
  ParameterFunction theta;
  SparseMatrix matrix;
  bool symmetric = true;
  /// theta > 0 on the whole parameter domain and matrix positive semidefinite: the
  /// component takes part in the energy product and in the min-theta bound.
  bool coercive = true;
};

/// a(.,.; mu) = sum_q theta_q(mu) a_q.
class AffineOperator {
 public:
  AffineOperator() = default;
  explicit AffineOperator(std::vector<OperatorComponent> components);

  const std::vector<OperatorComponent>& components() const { return components_; }
  std::vector<OperatorComponent>& components() { return components_; }
  Index dim() const;
  Vector coefficients(const Parameter& mu) const;
  SparseMatrix assemble(const Parameter& mu) const;
  bool all_symmetric() const;

 private:
  std::vector<OperatorComponent> components_;
};

struct FunctionalComponent {
  std::string name;
  ParameterFunction theta;
  Vector vector;
  /// Multiplied by the functional's time ramp.
  bool ramped = true;
};

/// l(v; mu; t) = sum_q theta_q(mu) r_q(t) l_q(v), r_q = ramp for ramped components, 1 otherwise.
class AffineFunctional {
 public:
  AffineFunctional() = default;
  AffineFunctional(std::vector<FunctionalComponent> components, std::function<double(double)> ramp = {});

  const std::vector<FunctionalComponent>& components() const { return components_; }
  std::vector<FunctionalComponent>& components() { return components_; }
  Index dim() const;
  double ramp(double t) const { return ramp_ ? ramp_(t) : 1.0; }
  bool has_ramp() const { return static_cast<bool>(ramp_); }
  const std::function<double(double)>& ramp_function() const { return ramp_; }
  /// theta_q(mu) times the ramp factor at t for each component.
  Vector coefficients(const Parameter& mu, double t) const;
  Vector evaluate(const Parameter& mu, double t) const;

 private:
  std::vector<FunctionalComponent> components_;
  std::function<double(double)> ramp_;
};

/// Essential boundary data: the constrained DoFs and the DoF vector of an extension g~.
struct DirichletLifting {
  std::vector<Index> constrained;
  Vector values;

  bool is_zero() const { return values.size() == 0 || values.isZero(0.0); }
};

/// Zeroes constrained rows/columns; puts `diagonal` on the constrained diagonal entries.
SparseMatrix constrain_matrix(const SparseMatrix& a, const std::vector<Index>& constrained, double diagonal);
/// Zeroes the constrained entries of a vector.
Vector constrain_vector(Vector v, const std::vector<Index>& constrained);

struct ShiftedSystem {
  AffineOperator op;
  AffineFunctional rhs;
};

/// Moves the problem from the affine space {u = g on the constrained DoFs} to the linear one:
/// rhs gains -theta_q a_q(g~, .) per operator component (skipped for zero lifting), constrained
/// rows and columns are eliminated with unit diagonal in symmetric components and zero diagonal
/// in non-symmetric ones.
ShiftedSystem apply_dirichlet_shift(const AffineOperator& op, const AffineFunctional& rhs,
                                    const DirichletLifting& lifting);

/// Gram matrix of (u, v)_V := a_s(u, v; mu_bar), summing the coercive symmetric components.
/// Throws NumericalError("energy product not SPD") if a Cholesky factorization fails.
SparseMatrix energy_product(const AffineOperator& op, const Parameter& mu_bar);

}  // namespace certrom
