#include "certrom/fem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace certrom {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(Index n, const Triplets& t) {
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

// Summation order differs between (i, j) and (j, i); averaging makes the result exactly symmetric.
SparseMatrix symmetric_from_triplets(Index n, const Triplets& t) {
  SparseMatrix a = from_triplets(n, t);
  SparseMatrix at = a.transpose();
  SparseMatrix s = 0.5 * (a + at);
  s.makeCompressed();
  return s;
}

void scatter(const StructuredGrid& grid, Index cell, const Eigen::Matrix4d& local, Triplets& out) {
  auto nodes = grid.cell_nodes(cell);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (local(a, b) != 0.0) out.emplace_back(nodes[a], nodes[b], local(a, b));
}

FieldRaster rescale(FieldRaster f, double lo, double hi) {
  auto [mn, mx] = std::minmax_element(f.values.begin(), f.values.end());
  double vmin = *mn, vmax = *mx;
  for (double& v : f.values) v = vmax > vmin ? lo + (v - vmin) / (vmax - vmin) * (hi - lo) : hi;
  return f;
}

}  // namespace

StructuredGrid::StructuredGrid(Rectangle domain, Index nx, Index ny) : domain_(domain), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("grid needs at least one cell per axis");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) throw InvalidArgument("degenerate rectangle");
}

std::array<double, 2> StructuredGrid::node_coords(Index n) const {
  Index i = n % (nx_ + 1), j = n / (nx_ + 1);
  return {domain_.x0 + static_cast<double>(i) * hx(), domain_.y0 + static_cast<double>(j) * hy()};
}

std::array<double, 2> StructuredGrid::cell_center(Index c) const {
  Index i = c % nx_, j = c / nx_;
  return {domain_.x0 + (static_cast<double>(i) + 0.5) * hx(), domain_.y0 + (static_cast<double>(j) + 0.5) * hy()};
}

std::array<Index, 4> StructuredGrid::cell_nodes(Index c) const {
  Index i = c % nx_, j = c / nx_;
  return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
}

std::vector<Index> StructuredGrid::cells_in(const Rectangle& r) const {
  std::vector<Index> cells;
  for (Index c = 0; c < cell_count(); ++c) {
    auto [x, y] = cell_center(c);
    if (r.contains(x, y)) cells.push_back(c);
  }
  return cells;
}

StructuredGrid build_grid(Rectangle domain, Index nx, Index ny) { return StructuredGrid(domain, nx, ny); }

FieldRaster FieldRaster::constant(Index nx, Index ny, double value) {
  return FieldRaster{nx, ny, std::vector<double>(static_cast<std::size_t>(nx * ny), value)};
}

FieldRaster parse_raster_csv(const std::string& text, Index nx, Index ny, double lo, double hi) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("raster: malformed value '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (static_cast<Index>(rows.size()) != ny) throw InvalidArgument("raster: expected " + std::to_string(ny) + " rows");
  FieldRaster f{nx, ny, std::vector<double>(static_cast<std::size_t>(nx * ny))};
  for (Index r = 0; r < ny; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Index>(row.size()) != nx)
      throw InvalidArgument("raster: expected " + std::to_string(nx) + " columns in row " + std::to_string(r + 1));
    Index j = ny - 1 - r;
    for (Index i = 0; i < nx; ++i) f.values[static_cast<std::size_t>(j * nx + i)] = row[static_cast<std::size_t>(i)];
  }
  return rescale(std::move(f), lo, hi);
}

FieldRaster load_raster_csv(const std::string& path, Index nx, Index ny, double lo, double hi) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("raster: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_raster_csv(buf.str(), nx, ny, lo, hi);
}

FieldRaster synthetic_layered_raster(Index nx, Index ny, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> decades(-3.0, 0.0);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  FieldRaster f{nx, ny, std::vector<double>(static_cast<std::size_t>(nx * ny))};
  for (Index j = 0; j < ny; ++j) {
    double layer = decades(rng);
    for (Index i = 0; i < nx; ++i) f.values[static_cast<std::size_t>(j * nx + i)] = std::pow(10.0, layer + jitter(rng));
  }
  return rescale(std::move(f), lo, hi);
}

ElementMatrices element_matrices(double hx, double hy) {
  const double g = 0.5 / std::sqrt(3.0);
  const double pts[2] = {0.5 - g, 0.5 + g};
  const double w = 0.25 * hx * hy;
  ElementMatrices e;
  e.mass.setZero();
  e.stiffness.setZero();
  e.advection_x.setZero();
  e.advection_y.setZero();
  for (double xi : pts) {
    for (double eta : pts) {
      Eigen::Vector4d phi(( 1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta);
      Eigen::Vector4d dx = Eigen::Vector4d(-(1 - eta), 1 - eta, -eta, eta) / hx;
      Eigen::Vector4d dy = Eigen::Vector4d(-(1 - xi), -xi, 1 - xi, xi) / hy;
      e.mass += w * phi * phi.transpose();
      e.stiffness += w * (dx * dx.transpose() + dy * dy.transpose());
      e.advection_x += w * phi * dx.transpose();
      e.advection_y += w * phi * dy.transpose();
    }
  }
  return e;
}

SparseMatrix assemble_mass(const StructuredGrid& grid) {
  std::vector<bool> all(static_cast<std::size_t>(grid.cell_count()), true);
  return assemble_reaction(grid, all);
}

SparseMatrix assemble_diffusion(const StructuredGrid& grid, const FieldRaster& kappa) {
  return assemble_diffusion(grid, kappa, std::vector<bool>(static_cast<std::size_t>(grid.cell_count()), true));
}

SparseMatrix assemble_diffusion(const StructuredGrid& grid, const FieldRaster& kappa, const std::vector<bool>& mask) {
  if (static_cast<Index>(kappa.values.size()) != grid.cell_count())
    throw InvalidArgument("diffusion field size does not match the grid");
  if (static_cast<Index>(mask.size()) != grid.cell_count()) throw InvalidArgument("cell mask size does not match the grid");
  auto e = element_matrices(grid.hx(), grid.hy());
  Triplets t;
  for (Index c = 0; c < grid.cell_count(); ++c) {
    if (!mask[static_cast<std::size_t>(c)]) continue;
    double k = kappa.at(c);
    if (!(k > 0.0)) throw InvalidArgument("nonpositive diffusion");
    scatter(grid, c, k * e.stiffness, t);
  }
  return symmetric_from_triplets(grid.node_count(), t);
}

SparseMatrix assemble_advection(const StructuredGrid& grid, const VelocityField& velocity) {
  if (static_cast<Index>(velocity.vx.size()) != grid.cell_count() ||
      static_cast<Index>(velocity.vy.size()) != grid.cell_count())
    throw InvalidArgument("velocity field size does not match the grid");
  auto e = element_matrices(grid.hx(), grid.hy());
  Triplets t;
  for (Index c = 0; c < grid.cell_count(); ++c) {
    double vx = velocity.vx[static_cast<std::size_t>(c)], vy = velocity.vy[static_cast<std::size_t>(c)];
    if (vx == 0.0 && vy == 0.0) continue;
    scatter(grid, c, vx * e.advection_x + vy * e.advection_y, t);
  }
  return from_triplets(grid.node_count(), t);
}

SparseMatrix assemble_reaction(const StructuredGrid& grid, const std::vector<bool>& mask) {
  if (static_cast<Index>(mask.size()) != grid.cell_count()) throw InvalidArgument("cell mask size does not match the grid");
  auto e = element_matrices(grid.hx(), grid.hy());
  Triplets t;
  for (Index c = 0; c < grid.cell_count(); ++c)
    if (mask[static_cast<std::size_t>(c)]) scatter(grid, c, e.mass, t);
  return symmetric_from_triplets(grid.node_count(), t);
}

Vector assemble_cell_load(const StructuredGrid& grid, const std::vector<Index>& cells) {
  Vector b = Vector::Zero(grid.node_count());
  const double quarter = 0.25 * grid.hx() * grid.hy();
  for (Index c : cells) {
    if (c < 0 || c >= grid.cell_count()) throw InvalidArgument("cell index out of range");
    for (Index n : grid.cell_nodes(c)) b[n] += quarter;
  }
  return b;
}

Vector assemble_cell_average(const StructuredGrid& grid, const std::vector<Index>& cells) {
  if (cells.empty()) throw InvalidArgument("output region is empty");
  return assemble_cell_load(grid, cells) / (static_cast<double>(cells.size()) * grid.hx() * grid.hy());
}

Vector assemble_boundary_average(const StructuredGrid& grid, const std::vector<std::array<Index, 2>>& edges) {
  if (edges.empty()) throw InvalidArgument("output region is empty");
  Vector s = Vector::Zero(grid.node_count());
  double length = 0.0;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= grid.node_count() || b >= grid.node_count())
      throw InvalidArgument("edge node index out of range");
    auto pa = grid.node_coords(a), pb = grid.node_coords(b);
    double len = std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
    s[a] += 0.5 * len;
    s[b] += 0.5 * len;
    length += len;
  }
  return s / length;
}

AffineOperator::AffineOperator(std::vector<OperatorComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("affine operator needs at least one component");
  const Index n = components_.front().matrix.rows();
  for (const auto& c : components_)
    if (c.matrix.rows() != n || c.matrix.cols() != n)
      throw InvalidArgument("affine operator components must share their dimension");
}

Index AffineOperator::dim() const { return components_.empty() ? 0 : components_.front().matrix.rows(); }

Vector AffineOperator::coefficients(const Parameter& mu) const {
  Vector theta(static_cast<Index>(components_.size()));
  for (std::size_t q = 0; q < components_.size(); ++q) theta[static_cast<Index>(q)] = components_[q].theta(mu);
  return theta;
}

SparseMatrix AffineOperator::assemble(const Parameter& mu) const {
  SparseMatrix a(dim(), dim());
  for (const auto& c : components_) a += c.theta(mu) * c.matrix;
  return a;
}

bool AffineOperator::all_symmetric() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.symmetric; });
}

AffineFunctional::AffineFunctional(std::vector<FunctionalComponent> components, std::function<double(double)> ramp)
    : components_(std::move(components)), ramp_(std::move(ramp)) {
  for (const auto& c : components_)
    if (c.vector.size() != components_.front().vector.size())
      throw InvalidArgument("affine functional components must share their length");
}

Index AffineFunctional::dim() const { return components_.empty() ? 0 : components_.front().vector.size(); }

Vector AffineFunctional::coefficients(const Parameter& mu, double t) const {
  Vector theta(static_cast<Index>(components_.size()));
  const double r = ramp(t);
  for (std::size_t q = 0; q < components_.size(); ++q)
    theta[static_cast<Index>(q)] = components_[q].theta(mu) * (components_[q].ramped ? r : 1.0);
  return theta;
}

Vector AffineFunctional::evaluate(const Parameter& mu, double t) const {
  Vector theta = coefficients(mu, t);
  Vector b = Vector::Zero(dim());
  for (std::size_t q = 0; q < components_.size(); ++q) b += theta[static_cast<Index>(q)] * components_[q].vector;
  return b;
}

namespace {

std::vector<bool> constraint_mask(Index n, const std::vector<Index>& constrained) {
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (Index i : constrained) {
    if (i < 0 || i >= n) throw InvalidArgument("constrained DoF index out of range");
    mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

}  // namespace

SparseMatrix constrain_matrix(const SparseMatrix& a, const std::vector<Index>& constrained, double diagonal) {
  auto mask = constraint_mask(a.rows(), constrained);
  Triplets t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (Index col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it)
      if (!mask[static_cast<std::size_t>(it.row())] && !mask[static_cast<std::size_t>(it.col())])
        t.emplace_back(it.row(), it.col(), it.value());
  if (diagonal != 0.0)
    for (Index i = 0; i < a.rows(); ++i)
      if (mask[static_cast<std::size_t>(i)]) t.emplace_back(i, i, diagonal);
  return from_triplets(a.rows(), t);
}

Vector constrain_vector(Vector v, const std::vector<Index>& constrained) {
  auto mask = constraint_mask(v.size(), constrained);
  for (Index i = 0; i < v.size(); ++i)
    if (mask[static_cast<std::size_t>(i)]) v[i] = 0.0;
  return v;
}

ShiftedSystem apply_dirichlet_shift(const AffineOperator& op, const AffineFunctional& rhs,
                                    const DirichletLifting& lifting) {
  const Index n = op.dim();
  if (lifting.values.size() != 0 && lifting.values.size() != n)
    throw InvalidArgument("lifting length does not match the operator dimension");
  constraint_mask(n, lifting.constrained);

  std::vector<OperatorComponent> ops;
  for (const auto& c : op.components()) {
    OperatorComponent shifted = c;
    shifted.matrix = constrain_matrix(c.matrix, lifting.constrained, c.symmetric ? 1.0 : 0.0);
    ops.push_back(std::move(shifted));
  }

  std::vector<FunctionalComponent> funcs;
  for (const auto& c : rhs.components()) {
    FunctionalComponent shifted = c;
    shifted.vector = constrain_vector(c.vector, lifting.constrained);
    funcs.push_back(std::move(shifted));
  }
  if (!lifting.is_zero()) {
    for (const auto& c : op.components()) {
      Vector lifted = -(c.matrix * lifting.values);
      funcs.push_back({"lifting:" + c.name, c.theta, constrain_vector(std::move(lifted), lifting.constrained), false});
    }
  }
  return {AffineOperator(std::move(ops)), AffineFunctional(std::move(funcs), rhs.ramp_function())};
}

SparseMatrix energy_product(const AffineOperator& op, const Parameter& mu_bar) {
  SparseMatrix g(op.dim(), op.dim());
  bool any = false;
  for (const auto& c : op.components()) {
    if (!c.symmetric || !c.coercive) continue;
    g += c.theta(mu_bar) * c.matrix;
    any = true;
  }
  if (!any) throw NumericalError("energy product not SPD");
  g.makeCompressed();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(g);
  const double scale = g.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-12 * scale))
    throw NumericalError("energy product not SPD");
  return g;
}

}  // namespace certrom
