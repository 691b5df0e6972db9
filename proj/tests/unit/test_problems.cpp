#include <doctest.h>

#include "certrom/problems.hpp"
#include "certrom/time_norms.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace certrom;

namespace {

// element-by-element assembly of sum_c coef_c * E, with E one of the reference element matrices
Matrix assemble_cellwise(const StructuredGrid& grid, const std::vector<double>& coef, const Eigen::Matrix4d& e) {
  Matrix a = Matrix::Zero(grid.node_count(), grid.node_count());
  for (Index c = 0; c < grid.cell_count(); ++c) {
    auto nodes = grid.cell_nodes(c);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(nodes[i], nodes[j]) += coef[static_cast<std::size_t>(c)] * e(i, j);
  }
  return a;
}

Vector cellwise_load(const StructuredGrid& grid, const std::vector<double>& f) {
  Vector b = Vector::Zero(grid.node_count());
  const double quarter = 0.25 * grid.hx() * grid.hy();
  for (Index c = 0; c < grid.cell_count(); ++c)
    for (Index n : grid.cell_nodes(c)) b[n] += f[static_cast<std::size_t>(c)] * quarter;
  return b;
}

bool in_rect(const Rectangle& r, std::array<double, 2> p) { return r.contains(p[0], p[1]); }

ReactiveFlowConfig small_flow() {
  ReactiveFlowConfig cfg;
  cfg.nx = 20;
  cfg.ny = 10;
  cfg.steps = 101;
  return cfg;
}

struct Monolithic {
  Matrix op;
  Vector load;
};

Monolithic building_monolithic(const BuildingConfig& cfg, const Parameter& mu, const StructuredGrid& grid) {
  auto e = element_matrices(grid.hx(), grid.hy());
  std::vector<double> kappa(static_cast<std::size_t>(grid.cell_count()), cfg.background), f(kappa.size(), 0.0);
  Index k = 0;
  for (const auto* list : {&cfg.walls, &cfg.doors})
    for (const auto& r : *list) {
      const double value = r.fixed ? *r.fixed : mu[k++];
      for (Index c = 0; c < grid.cell_count(); ++c)
        if (in_rect(r.rect, grid.cell_center(c))) kappa[static_cast<std::size_t>(c)] = value;
    }
  for (const auto& r : cfg.heaters) {
    const double value = mu[k++];
    for (Index c = 0; c < grid.cell_count(); ++c)
      if (in_rect(r.rect, grid.cell_center(c))) f[static_cast<std::size_t>(c)] += value;
  }
  return {assemble_cellwise(grid, kappa, e.stiffness), cellwise_load(grid, f)};
}

Parameter random_in(const ParameterBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dim());
  for (Index i = 0; i < x.size(); ++i) x[i] = u(rng);
  return Parameter(box.from_unit(x));
}

}  // namespace

TEST_CASE("reactive flow: affine terms equal the monolithic assembly") {
  auto cfg = small_flow();
  ProblemData d = reactive_flow_data(cfg);
  const auto& grid = *d.grid;
  auto e = element_matrices(grid.hx(), grid.hy());
  FieldRaster kappa = reactive_flow_permeability(cfg);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter mu = random_in(d.box, rng);
    std::vector<double> diff(static_cast<std::size_t>(grid.cell_count())), adv(diff.size()), react(diff.size());
    for (Index c = 0; c < grid.cell_count(); ++c) {
      const bool wash = grid.cell_center(c)[1] < cfg.washcoat;
      diff[static_cast<std::size_t>(c)] = kappa.at(c);
      adv[static_cast<std::size_t>(c)] = wash ? 0.0 : mu[1];
      react[static_cast<std::size_t>(c)] = wash ? mu[0] : 0.0;
    }
    Matrix mono = assemble_cellwise(grid, diff, e.stiffness) + assemble_cellwise(grid, adv, e.advection_x) +
                  assemble_cellwise(grid, react, e.mass);
    Matrix affine = Matrix(d.op.assemble(mu));
    CHECK((mono - affine).cwiseAbs().maxCoeff() <= 1e-12 * mono.cwiseAbs().maxCoeff());
  }
  CHECK(d.op.coefficients(Parameter{1.0, 1.0}) == Vector::Ones(3));
}

TEST_CASE("reactive flow: boundary data and output functional") {
  auto cfg = small_flow();
  ProblemData d = reactive_flow_data(cfg);
  const auto& grid = *d.grid;
  // every constrained node is on the boundary and not on the outflow
  for (Index n : d.lifting.constrained) {
    auto [x, y] = grid.node_coords(n);
    CHECK((x == 0.0 || y == 0.0 || y == 1.0 || x == 5.0));
    CHECK_FALSE((x == 5.0 && y >= cfg.washcoat));
    CHECK(d.lifting.values[n] == ((x == 0.0 && y >= cfg.washcoat) ? 1.0 : 0.0));
  }
  CHECK(d.output.sum() == doctest::Approx(1.0));
  CHECK(d.output.minCoeff() >= 0.0);

  auto p = build_reactive_flow(cfg);
  CHECK(p->initial.isZero(0.0));
  CHECK(p->op.components().size() == 3);
}

TEST_CASE("reactive flow: raster size mismatch") {
  auto cfg = small_flow();
  const std::string path = "/tmp/certrom_raster_bad.csv";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("1,2,3\n4,5,6\n", f);
    std::fclose(f);
  }
  cfg.raster_path = path;
  CHECK_THROWS_AS(build_reactive_flow(cfg), InvalidArgument);
  cfg.raster_nx = 3;
  cfg.raster_ny = 2;
  CHECK_NOTHROW(build_reactive_flow(cfg));
}

TEST_CASE("reactive flow: outflow concentration stays in [0, 1]") {
  auto p = build_reactive_flow(small_flow());
  Fom fom(p);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    Parameter mu = random_in(p->box, rng);
    OutputSignal f = fom.eval_output(mu);
    MESSAGE("mu = (" << mu[0] << ", " << mu[1] << "): output range [" << f.values.minCoeff() << ", "
                     << f.values.maxCoeff() << "]");
    CHECK(f.values.minCoeff() >= -1e-2);
    CHECK(f.values.maxCoeff() <= 1.0 + 1e-2);
  }
}

TEST_CASE("reactive flow: pure diffusion limit settles at the stationary output") {
  auto cfg = small_flow();
  cfg.lower = Vector{{0.0, 0.0}};
  cfg.upper = Vector{{1.0, 1.0}};
  cfg.mu_bar = Parameter{0.5, 0.5};
  cfg.t_end = 40.0;
  cfg.steps = 401;
  ProblemData d = reactive_flow_data(cfg);
  auto p = std::make_shared<const FomProblem>(make_fom_problem(d));
  OutputSignal f = Fom(p).eval_output(Parameter{0.0, 0.0});

  // stationary solve of the unshifted system: diffusion rows, identity on constrained rows
  Matrix a = Matrix(d.op.assemble(Parameter{0.0, 0.0}));
  Vector b = Vector::Zero(a.rows());
  for (Index n : d.lifting.constrained) {
    a.row(n).setZero();
    a(n, n) = 1.0;
    b[n] = d.lifting.values[n];
  }
  Vector u = a.partialPivLu().solve(b);
  const double steady = d.output.dot(u);
  MESSAGE("stationary outflow value " << steady << ", final " << f.values[f.values.size() - 1]);
  CHECK(std::abs(f.values[f.values.size() - 1] - steady) <= 1e-3);
  CHECK(steady > 0.0);
  CHECK(steady < 1.0);
}

TEST_CASE("building: default plan") {
  auto cfg = BuildingConfig::default_plan();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.parameter_count() == 28);
  CHECK(cfg.walls.size() == 10);
  CHECK(cfg.doors.size() == 10);
  CHECK(cfg.heaters.size() == 12);
  auto p = build_building(cfg);
  CHECK(p->box.dim() == 28);
  CHECK(p->op.components().size() == 17);
  CHECK(p->rhs.ramp(0.25) == doctest::Approx(0.5));
  CHECK(p->rhs.ramp(0.75) == 1.0);
  CHECK(p->initial.isZero(0.0));
}

TEST_CASE("building: affine terms equal the monolithic assembly") {
  auto cfg = BuildingConfig::default_plan();
  ProblemData d = building_data(cfg);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Parameter mu = random_in(d.box, rng);
    Monolithic m = building_monolithic(cfg, mu, *d.grid);
    Matrix affine = Matrix(d.op.assemble(mu));
    CHECK((m.op - affine).cwiseAbs().maxCoeff() <= 1e-12 * m.op.cwiseAbs().maxCoeff());
    Vector l = d.rhs.evaluate(mu, 0.8);
    CHECK((m.load - l).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.load.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("building: single heater output matches a monolithic solve") {
  auto cfg = BuildingConfig::default_plan();
  auto p = build_building(cfg);
  ProblemData d = building_data(cfg);
  const auto& grid = *d.grid;
  Vector v = d.box.center().values();
  for (Index i = 16; i < 28; ++i) v[i] = 0.0;
  v[16 + 3] = 150.0;
  Parameter mu(v);

  Monolithic m = building_monolithic(cfg, mu, grid);
  auto e = element_matrices(grid.hx(), grid.hy());
  Matrix mass = assemble_cellwise(grid, std::vector<double>(static_cast<std::size_t>(grid.cell_count()), 1.0), e.mass);
  const double dt = p->time.dt();
  Matrix sys = mass + dt * m.op;
  std::vector<bool> fixed(static_cast<std::size_t>(grid.node_count()), false);
  for (Index n : d.lifting.constrained) fixed[static_cast<std::size_t>(n)] = true;
  for (Index n = 0; n < sys.rows(); ++n)
    if (fixed[static_cast<std::size_t>(n)]) sys.row(n).setZero(), sys(n, n) = 1.0;
  Eigen::PartialPivLU<Matrix> lu(sys);
  Vector u = Vector::Zero(grid.node_count());
  Vector expect(p->time.size());
  expect[0] = d.output.dot(u);
  for (Index k = 1; k < p->time.size(); ++k) {
    Vector b = mass * u + dt * std::min(2.0 * p->time.node(k), 1.0) * m.load;
    for (Index n = 0; n < b.size(); ++n)
      if (fixed[static_cast<std::size_t>(n)]) b[n] = 0.0;
    u = lu.solve(b);
    expect[k] = d.output.dot(u);
  }
  OutputSignal got = Fom(p).eval_output(mu);
  CHECK((got.values - expect).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + expect.cwiseAbs().maxCoeff()));
  CHECK(expect.maxCoeff() > 0.0);
}

TEST_CASE("building: heaters drive the output linearly") {
  auto p = build_building(BuildingConfig::default_plan());
  Fom fom(p);
  Parameter mu(p->box.center());
  Vector off = mu.values(), half = mu.values();
  for (Index i = 16; i < 28; ++i) off[i] = 0.0, half[i] = 0.5 * mu[i];
  CHECK(fom.eval_output(Parameter(off)).values.cwiseAbs().maxCoeff() == 0.0);
  Vector a = fom.eval_output(Parameter(half)).values, b = fom.eval_output(mu).values;
  CHECK((2.0 * a - b).cwiseAbs().maxCoeff() <= 1e-10 * b.cwiseAbs().maxCoeff());
  MESSAGE("room average at the box center: final value " << b[b.size() - 1]);
}

TEST_CASE("building: invalid plans") {
  auto cfg = BuildingConfig::default_plan();
  SUBCASE("heater over a wall") {
    cfg.heaters[0].rect = cfg.walls[0].rect;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("overlap"), InvalidArgument);
  }
  SUBCASE("wrong parameter count") {
    cfg.heaters.pop_back();
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("outside the domain") {
    cfg.walls[0].rect.x1 = 2.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("region without cells on a coarse grid") {
    cfg.nx = 4;
    cfg.ny = 2;
    CHECK_THROWS_AS(build_building(cfg), InvalidArgument);
  }
}
