#include <doctest.h>

#include "certrom/fem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace certrom;

namespace {

Matrix dense(const SparseMatrix& a) { return Matrix(a); }

// Bilinear shape functions factor as X_a(x) Y_a(y); local a = ax + 2 ay.
double integral_xx(int a, int b) { return (a % 2) == (b % 2) ? 1.0 / 3.0 : 1.0 / 6.0; }
double integral_yy(int a, int b) { return (a / 2) == (b / 2) ? 1.0 / 3.0 : 1.0 / 6.0; }
double slope_x(int a) { return a % 2 == 0 ? -1.0 : 1.0; }
double slope_y(int a) { return a / 2 == 0 ? -1.0 : 1.0; }

Eigen::Matrix4d mass_oracle(double hx, double hy) {
  Eigen::Matrix4d m;
  m << 4, 2, 2, 1, 2, 4, 1, 2, 2, 1, 4, 2, 1, 2, 2, 4;
  return hx * hy / 36.0 * m;
}

Eigen::Matrix4d stiffness_oracle(double hx, double hy) {
  Eigen::Matrix4d k;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double dxdx = slope_x(a) * slope_x(b) / hx * (a / 2 == b / 2 ? hy / 3.0 : hy / 6.0);
      double dydy = slope_y(a) * slope_y(b) / hy * (a % 2 == b % 2 ? hx / 3.0 : hx / 6.0);
      k(a, b) = dxdx + dydy;
    }
  return k;
}

// int phi_a d/dx phi_b over a hx x hy cell
Eigen::Matrix4d advection_x_oracle(double, double hy) {
  Eigen::Matrix4d c;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) c(a, b) = 0.5 * slope_x(b) * hy * integral_yy(a, b);
  return c;
}

Eigen::Matrix4d advection_y_oracle(double hx, double) {
  Eigen::Matrix4d c;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) c(a, b) = 0.5 * slope_y(b) * hx * integral_xx(a, b);
  return c;
}

Matrix monolithic(const StructuredGrid& g, const std::vector<double>& kappa, double vx, double vy,
                  const std::vector<bool>& mask, double diffusion, double advection, double reaction) {
  Matrix a = Matrix::Zero(g.node_count(), g.node_count());
  for (Index c = 0; c < g.cell_count(); ++c) {
    Eigen::Matrix4d local = diffusion * kappa[static_cast<std::size_t>(c)] * stiffness_oracle(g.hx(), g.hy()) +
                            advection * (vx * advection_x_oracle(g.hx(), g.hy()) + vy * advection_y_oracle(g.hx(), g.hy()));
    if (mask[static_cast<std::size_t>(c)]) local += reaction * mass_oracle(g.hx(), g.hy());
    auto nodes = g.cell_nodes(c);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(nodes[i], nodes[j]) += local(i, j);
  }
  return a;
}

double max_asym(const SparseMatrix& a) {
  Matrix d = dense(a);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("grid construction") {
  auto g1 = build_grid({0, 1, 0, 1}, 1, 1);
  CHECK(g1.node_count() == 4);
  CHECK(g1.cell_count() == 1);
  CHECK(build_grid({0, 5, 0, 1}, 50, 10).node_count() == 561);

  auto g = build_grid({0, 2, 0, 1}, 2, 2);
  const double expected[9][2] = {{0, 0}, {1, 0}, {2, 0}, {0, 0.5}, {1, 0.5}, {2, 0.5}, {0, 1}, {1, 1}, {2, 1}};
  for (Index n = 0; n < 9; ++n) {
    auto xy = g.node_coords(n);
    CHECK(xy[0] == doctest::Approx(expected[n][0]));
    CHECK(xy[1] == doctest::Approx(expected[n][1]));
  }
  auto nodes = g.cell_nodes(3);
  CHECK(nodes == std::array<Index, 4>{4, 5, 7, 8});

  CHECK_THROWS_WITH_AS(build_grid({0, 0, 0, 1}, 2, 2), "degenerate rectangle", InvalidArgument);
  CHECK_THROWS_AS(build_grid({0, 1, 0, 1}, 0, 2), InvalidArgument);
}

TEST_CASE("element matrices match analytic integration") {
  for (auto [hx, hy] : {std::pair{1.0, 1.0}, std::pair{0.25, 0.5}}) {
    auto e = element_matrices(hx, hy);
    CHECK((e.mass - mass_oracle(hx, hy)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((e.stiffness - stiffness_oracle(hx, hy)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((e.advection_x - advection_x_oracle(hx, hy)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((e.advection_y - advection_y_oracle(hx, hy)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("mass matrix") {
  auto unit = build_grid({0, 1, 0, 1}, 1, 1);
  Eigen::Matrix4d m;
  m << 4, 2, 2, 1, 2, 4, 1, 2, 2, 1, 4, 2, 1, 2, 2, 4;
  CHECK((dense(assemble_mass(unit)) - m / 36.0).cwiseAbs().maxCoeff() < 1e-15);

  auto g = build_grid({0, 5, 0, 1}, 13, 7);
  SparseMatrix mass = assemble_mass(g);
  CHECK(dense(mass).sum() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(max_asym(mass) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dense(mass));
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("diffusion matrix") {
  auto unit = build_grid({0, 1, 0, 1}, 1, 1);
  Eigen::Matrix4d k;
  k << 4, -1, -1, -2, -1, 4, -2, -1, -1, -2, 4, -1, -2, -1, -1, 4;
  CHECK((dense(assemble_diffusion(unit, FieldRaster::constant(1, 1, 1.0))) - k / 6.0).cwiseAbs().maxCoeff() < 1e-14);

  auto g = build_grid({0, 2, 0, 1}, 6, 5);
  FieldRaster kappa = synthetic_layered_raster(6, 5, 11, 0.001, 1.0);
  SparseMatrix a = assemble_diffusion(g, kappa);
  CHECK((a * Vector::Ones(g.node_count())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(max_asym(a) <= 1e-13 * dense(a).cwiseAbs().maxCoeff());

  FieldRaster twice = kappa;
  for (double& v : twice.values) v *= 2.0;
  CHECK((dense(assemble_diffusion(g, twice)) - 2.0 * dense(a)).cwiseAbs().maxCoeff() < 1e-13);

  kappa.values[4] = 0.0;
  CHECK_THROWS_WITH_AS(assemble_diffusion(g, kappa), "nonpositive diffusion", InvalidArgument);
}

TEST_CASE("advection matrix") {
  auto g = build_grid({0, 1, 0, 1}, 4, 4);
  VelocityField zero{std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
  CHECK(assemble_advection(g, zero).nonZeros() == 0);

  VelocityField constant{std::vector<double>(16, 0.7), std::vector<double>(16, -0.3)};
  Vector row_sums = assemble_advection(g, constant) * Vector::Ones(g.node_count());
  for (Index j = 1; j < 4; ++j)
    for (Index i = 1; i < 4; ++i) CHECK(std::abs(row_sums[g.node(i, j)]) < 1e-14);

  auto unit = build_grid({0, 1, 0, 1}, 1, 1);
  VelocityField right{{1.0}, {0.0}};
  CHECK((dense(assemble_advection(unit, right)) - advection_x_oracle(1.0, 1.0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("reaction matrix") {
  auto g = build_grid({0, 2, 0, 1}, 4, 4);
  CHECK(assemble_reaction(g, std::vector<bool>(16, false)).nonZeros() == 0);
  CHECK((dense(assemble_reaction(g, std::vector<bool>(16, true))) - dense(assemble_mass(g))).cwiseAbs().maxCoeff() == 0.0);
  std::vector<bool> lower(16, false);
  for (Index c = 0; c < 8; ++c) lower[static_cast<std::size_t>(c)] = true;
  CHECK(dense(assemble_reaction(g, lower)).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("output functionals") {
  auto g = build_grid({0, 5, 0, 1}, 10, 4);
  std::vector<std::array<Index, 2>> outflow;
  for (Index j = 0; j < 4; ++j) outflow.push_back({g.node(10, j), g.node(10, j + 1)});
  Vector s = assemble_boundary_average(g, outflow);
  CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-12));
  Vector x(g.node_count());
  for (Index n = 0; n < g.node_count(); ++n) x[n] = g.node_coords(n)[0];
  CHECK(s.dot(x) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(assemble_boundary_average(g, {}), InvalidArgument);

  auto small = build_grid({0, 1, 0, 1}, 2, 2);
  std::vector<Index> room{0, 1};
  Vector avg = assemble_cell_average(small, room);
  CHECK(avg.sum() == doctest::Approx(1.0).epsilon(1e-12));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector field(9);
  for (Index n = 0; n < 9; ++n) field[n] = u(rng);
  // a bilinear field's cell mean is the mean of its four nodal values
  double oracle = 0.0;
  for (Index c : room) {
    double cell = 0.0;
    for (Index n : small.cell_nodes(c)) cell += field[n];
    oracle += cell / 4.0;
  }
  oracle /= 2.0;
  CHECK(avg.dot(field) == doctest::Approx(oracle).epsilon(1e-13));
  CHECK_THROWS_AS(assemble_cell_average(small, {}), InvalidArgument);
}

TEST_CASE("cells by center inclusion") {
  auto g = build_grid({0, 2, 0, 1}, 16, 8);
  auto cells = g.cells_in({0.75, 1.25, 0.0, 0.375});
  CHECK(cells.size() == 12);
}

TEST_CASE("raster files") {
  const std::string text = "1,2,3\n4,5,6\n";
  FieldRaster f = parse_raster_csv(text, 3, 2, 0.0, 1.0);
  // first CSV row is the top of the domain
  CHECK(f.values[3] == doctest::Approx(0.0));
  CHECK(f.values[0] == doctest::Approx(0.6));
  CHECK(f.values[2] == doctest::Approx(1.0));
  FieldRaster g = parse_raster_csv(text, 3, 2, 0.001, 1.0);
  CHECK(*std::min_element(g.values.begin(), g.values.end()) == doctest::Approx(0.001));
  CHECK_THROWS_AS(parse_raster_csv("1,2\n3,4\n", 3, 2, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(parse_raster_csv("1,2,3\n", 3, 2, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(parse_raster_csv("1,a,3\n4,5,6\n", 3, 2, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(load_raster_csv("/nonexistent/raster.csv", 3, 2, 0, 1), InvalidArgument);

  FieldRaster s1 = synthetic_layered_raster(20, 10, 42, 0.001, 1.0);
  FieldRaster s2 = synthetic_layered_raster(20, 10, 42, 0.001, 1.0);
  CHECK(s1.values == s2.values);
  CHECK(*std::min_element(s1.values.begin(), s1.values.end()) == doctest::Approx(0.001));
  CHECK(*std::max_element(s1.values.begin(), s1.values.end()) == doctest::Approx(1.0));
}

namespace {

struct SmallProblem {
  StructuredGrid grid = build_grid({0, 1, 0, 1}, 4, 4);
  std::vector<double> kappa;
  std::vector<bool> mask;
  AffineOperator op;
  AffineFunctional rhs;
  DirichletLifting inflow;

  SmallProblem() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    FieldRaster k{4, 4, {}};
    for (int c = 0; c < 16; ++c) k.values.push_back(u(rng));
    kappa = k.values;
    mask.assign(16, false);
    for (Index c = 0; c < 8; ++c) mask[static_cast<std::size_t>(c)] = true;
    VelocityField v{std::vector<double>(16, 1.0), std::vector<double>(16, 0.0)};
    op = AffineOperator({
        {"diffusion", [](const Parameter&) { return 1.0; }, assemble_diffusion(grid, k), true, true},
        {"advection", [](const Parameter& mu) { return mu[1]; }, assemble_advection(grid, v), false, false},
        {"reaction", [](const Parameter& mu) { return mu[0]; }, assemble_reaction(grid, mask), true, true},
    });
    std::vector<Index> all_cells(16);
    for (Index c = 0; c < 16; ++c) all_cells[static_cast<std::size_t>(c)] = c;
    rhs = AffineFunctional({{"source", [](const Parameter&) { return 1.0; }, assemble_cell_load(grid, all_cells), true}});
    Vector g = Vector::Zero(grid.node_count());
    for (Index j = 0; j <= 4; ++j) {
      inflow.constrained.push_back(grid.node(0, j));
      g[grid.node(0, j)] = 1.0;
    }
    inflow.values = g;
  }
};

}  // namespace

TEST_CASE("affine operator equals monolithic assembly") {
  SmallProblem p;
  Parameter mu{0.3, 2.5};
  Matrix direct = monolithic(p.grid, p.kappa, 1.0, 0.0, p.mask, 1.0, 2.5, 0.3);
  CHECK((dense(p.op.assemble(mu)) - direct).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(p.op.coefficients(mu) == Vector{{1.0, 2.5, 0.3}});
  for (const auto& c : p.op.components())
    if (c.symmetric) CHECK(max_asym(c.matrix) <= 1e-13 * dense(c.matrix).cwiseAbs().maxCoeff());
}

TEST_CASE("dirichlet shift with zero lifting") {
  SmallProblem p;
  DirichletLifting zero{p.inflow.constrained, Vector::Zero(p.grid.node_count())};
  auto shifted = apply_dirichlet_shift(p.op, p.rhs, zero);
  CHECK(shifted.rhs.components().size() == 1);
  Vector b0 = constrain_vector(p.rhs.components()[0].vector, zero.constrained);
  CHECK(shifted.rhs.components()[0].vector == b0);
  Matrix d = dense(shifted.op.components()[0].matrix);
  for (Index i : zero.constrained) {
    CHECK(d(i, i) == 1.0);
    CHECK(d.row(i).cwiseAbs().sum() == 1.0);
    CHECK(d.col(i).cwiseAbs().sum() == 1.0);
  }
  Matrix adv = dense(shifted.op.components()[1].matrix);
  for (Index i : zero.constrained) CHECK(adv.row(i).cwiseAbs().sum() == 0.0);
}

TEST_CASE("dirichlet shift reproduces the constrained solve") {
  SmallProblem p;
  Parameter mu{0.8, 3.0};
  auto shifted = apply_dirichlet_shift(p.op, p.rhs, p.inflow);
  CHECK(shifted.rhs.components().size() == p.rhs.components().size() + p.op.components().size());

  Matrix a = dense(shifted.op.assemble(mu));
  Vector w = a.partialPivLu().solve(shifted.rhs.evaluate(mu, 0.0));

  // oracle: unshifted system with Dirichlet rows replaced by identity rows
  Matrix full = monolithic(p.grid, p.kappa, 1.0, 0.0, p.mask, 1.0, 3.0, 0.8);
  Vector b = p.rhs.components()[0].vector;
  for (Index i : p.inflow.constrained) {
    full.row(i).setZero();
    full(i, i) = 1.0;
    b[i] = 1.0;
  }
  Vector u = full.partialPivLu().solve(b);
  CHECK((w + p.inflow.values - u).cwiseAbs().maxCoeff() < 1e-12);

  DirichletLifting bad{{100}, Vector::Zero(p.grid.node_count())};
  CHECK_THROWS_AS(apply_dirichlet_shift(p.op, p.rhs, bad), InvalidArgument);
}

TEST_CASE("energy product") {
  auto g = build_grid({0, 1, 0, 1}, 3, 3);
  SparseMatrix mass = assemble_mass(g);
  AffineOperator only_mass({{"mass", [](const Parameter&) { return 1.0; }, mass, true, true}});
  CHECK((dense(energy_product(only_mass, Parameter{0.0})) - dense(mass)).cwiseAbs().maxCoeff() == 0.0);

  SmallProblem p;
  auto shifted = apply_dirichlet_shift(p.op, p.rhs, p.inflow);
  Parameter mu_bar{5.0, 10.0};
  SparseMatrix gram = energy_product(shifted.op, mu_bar);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Vector v(gram.rows());
  for (Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  Vector expected = shifted.op.components()[0].matrix * v + 5.0 * (shifted.op.components()[2].matrix * v);
  CHECK((gram * v - expected).cwiseAbs().maxCoeff() < 1e-13);

  Eigen::Matrix3d spd;
  spd << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  AffineOperator three({{"a", [](const Parameter&) { return 2.0; }, Matrix(spd).sparseView(), true, true}});
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dense(energy_product(three, Parameter{1.0})));
  CHECK(eig.eigenvalues().minCoeff() > 0.0);

  // constants are in the kernel of the unconstrained stiffness
  AffineOperator stiff({{"d", [](const Parameter&) { return 1.0; }, assemble_diffusion(g, FieldRaster::constant(3, 3, 1.0)), true, true}});
  CHECK_THROWS_WITH_AS(energy_product(stiff, Parameter{1.0}), "energy product not SPD", NumericalError);
}

TEST_CASE("affine functional with ramp") {
  Vector a = Vector::Ones(3), b = Vector::Constant(3, 2.0);
  AffineFunctional f({{"ramped", [](const Parameter& mu) { return mu[0]; }, a, true},
                      {"steady", [](const Parameter&) { return 1.0; }, b, false}},
                     [](double t) { return std::min(2.0 * t, 1.0); });
  Parameter mu{3.0};
  CHECK(f.evaluate(mu, 0.25) == Vector::Constant(3, 1.5 + 2.0));
  CHECK(f.evaluate(mu, 0.9) == Vector::Constant(3, 3.0 + 2.0));
  CHECK(f.coefficients(mu, 0.0) == Vector{{0.0, 1.0}});
}
