#include <doctest.h>

#include "certrom/hapod.hpp"
#include "certrom/vkoga.hpp"
#include "test_support.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace certrom;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m(i) = d(rng);
  return m;
}

Matrix gaussian_matrix(const Matrix& a, const Matrix& b, double gamma) {
  Matrix k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
  return k;
}

struct Trained {
  std::shared_ptr<const FomProblem> problem;
  RbGenerator gen;
  std::shared_ptr<const RbRom> rom;

  explicit Trained(Index extends = 2) : problem(testing::heat_problem(8, 50)), gen(problem, 1e-3) {
    auto mus = testing::random_parameters(problem->box, static_cast<int>(extends), 99);
    for (const auto& mu : mus) gen.extend(mu);
    rom = std::make_shared<const RbRom>(gen.precompute());
  }
};

}  // namespace

TEST_CASE("gaussian kernel") {
  Vector x{{0.3, -0.2}}, e1{{1.0, 0.0}};
  CHECK(kernel_eval(x, x, 0.7) == 1.0);
  CHECK(kernel_eval(Vector::Zero(2), e1, 1.0) == doctest::Approx(std::exp(-1.0)));
  Matrix r = random_matrix(20, 3, 1);
  for (Index i = 0; i + 1 < 20; ++i) CHECK(kernel_eval(r.row(i), r.row(i + 1), 2.0) == kernel_eval(r.row(i + 1), r.row(i), 2.0));
}

TEST_CASE("single sample") {
  Matrix x{{0.2, 0.4}};
  Matrix y{{1.0, -2.0, 3.0}};
  KernelModel m = vkoga_fit(x, y, {});
  CHECK(m.center_count() == 1);
  CHECK((m.predict(x.row(0).transpose()) - y.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("interpolation matches the dense kernel system") {
  Matrix x = random_matrix(30, 2, 2, 0.0, 1.0);
  Matrix y = random_matrix(30, 5, 3);
  KernelConfig cfg;
  cfg.gamma = 4.0;
  KernelGreedy greedy(cfg, 2);
  greedy.add_points(x, y);
  greedy.run();
  REQUIRE(greedy.center_count() == 30);
  KernelModel m = greedy.model();
  double scale = y.cwiseAbs().maxCoeff();
  for (Index i = 0; i < 30; ++i) CHECK((m.predict(x.row(i).transpose()) - y.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale);

  Matrix alpha = gaussian_matrix(x, x, 4.0).ldlt().solve(y);
  Matrix probe = random_matrix(10, 2, 4, 0.0, 1.0);
  Matrix oracle = gaussian_matrix(probe, x, 4.0) * alpha;
  for (Index i = 0; i < 10; ++i) CHECK((m.predict(probe.row(i).transpose()) - oracle.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-7);

  // The pointwise max residual of f-greedy interpolation may grow on noisy data; what does
  // decrease is the native-space distance to the final interpolant, sum_{j>n} |c_j|^2 with
  // c_j the Newton coefficients. Check the energy identity |s|_H^2 = alpha^T K alpha = sum |c_j|^2.
  const Matrix& nc = greedy.newton_coefficients();
  double energy = (alpha.transpose() * gaussian_matrix(x, x, 4.0) * alpha).trace();
  CHECK(nc.squaredNorm() == doctest::Approx(energy).epsilon(1e-6));
  const auto& h = greedy.native_residual_history();
  REQUIRE(h.size() == 31);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] <= h[k - 1]);
  CHECK(h.back() == 0.0);
}

TEST_CASE("regularized fit matches the regularized kernel system") {
  Matrix x = random_matrix(15, 3, 5, 0.0, 1.0);
  Matrix y = random_matrix(15, 2, 6);
  KernelConfig cfg;
  cfg.lambda = 1e-2;
  KernelModel m = vkoga_fit(x, y, cfg);
  REQUIRE(m.center_count() == 15);
  const double gamma = 1.0 / 3.0;
  Matrix alpha = (gaussian_matrix(x, x, gamma) + 1e-2 * Matrix::Identity(15, 15)).ldlt().solve(y);
  Matrix probe = random_matrix(5, 3, 7, 0.0, 1.0);
  Matrix oracle = gaussian_matrix(probe, x, gamma) * alpha;
  for (Index i = 0; i < 5; ++i) CHECK((m.predict(probe.row(i).transpose()) - oracle.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("incremental append equals a fresh fit") {
  Matrix x = random_matrix(25, 2, 8, 0.0, 1.0);
  Matrix y = random_matrix(25, 4, 9);
  KernelConfig cfg;
  cfg.gamma = 3.0;
  KernelGreedy inc(cfg, 2);
  inc.add_points(x.topRows(10), y.topRows(10));
  inc.run();
  inc.add_points(x.bottomRows(15), y.bottomRows(15));
  inc.run();
  KernelModel a = inc.model(), b = vkoga_fit(x, y, cfg);
  Matrix probe = random_matrix(10, 2, 10, 0.0, 1.0);
  for (Index i = 0; i < 10; ++i) CHECK((a.predict(probe.row(i).transpose()) - b.predict(probe.row(i).transpose())).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("greedy limits and errors") {
  Matrix x = random_matrix(20, 2, 11, 0.0, 1.0);
  Matrix y = random_matrix(20, 1, 12);
  KernelConfig cfg;
  cfg.max_centers = 5;
  CHECK(vkoga_fit(x, y, cfg).center_count() == 5);
  Matrix dup(2, 2);
  dup << 0.1, 0.2, 0.1, 0.2;
  CHECK_THROWS_WITH_AS(vkoga_fit(dup, Matrix::Ones(2, 1), {}), "coincident training inputs", InvalidArgument);
  CHECK_THROWS_AS(vkoga_fit(Matrix(0, 2), Matrix(0, 1), {}), InvalidArgument);
  // power floor stops the greedy before an ill-conditioned pivot
  Matrix close(2, 1);
  close << 0.5, 0.5 + 1e-9;
  CHECK(vkoga_fit(close, Matrix::Ones(2, 1) + Matrix{{0.0}, {1e-3}}, {}).center_count() == 1);
}

TEST_CASE("trajectory flattening is row-major by time") {
  Matrix c{{1, 2}, {3, 4}, {5, 6}};
  Vector f = flatten_trajectory(c);
  CHECK(f == Vector{{1, 2, 3, 4, 5, 6}});
  CHECK(unflatten_trajectory(f, 3, 2) == c);
}

TEST_CASE("kernel generator") {
  Trained t;
  VkogaGenerator gen(t.rom);
  CHECK_THROWS_WITH_AS(gen.precompute(), "empty training set", InvalidArgument);
  CHECK_FALSE(gen.current().trained());
  CHECK(std::isinf(gen.current().est_output(Parameter{0.5, 0.5, 1.0})));

  auto mus = testing::random_parameters(t.problem->box, 6, 5);
  for (const auto& mu : mus) gen.extend(mu);
  gen.extend(mus[0]);
  CHECK(gen.sample_count() == 6);
  CHECK(flatten_trajectory(gen.samples()[0].coeffs).size() == 50 * t.rom->dim());

  MlRom ml = gen.precompute();
  CHECK(gen.model_size() == 6);
  for (const auto& mu : mus) {
    Trajectory pred = ml.eval_state(mu);
    Trajectory rb = t.rom->eval_state(mu);
    CHECK((pred.coeffs - rb.coeffs).cwiseAbs().maxCoeff() <= 1e-8 * rb.coeffs.cwiseAbs().maxCoeff());
    // certified at the training inputs whenever the RB model is
    if (t.rom->est_output(rb, mu) <= 1e-3) CHECK(ml.est_output(mu) <= 1e-3 * (1 + 1e-6));
  }
  for (const auto& mu : testing::random_parameters(t.problem->box, 5, 6)) CHECK(std::isfinite(ml.est_output(mu)));

  MlRom again = gen.precompute();
  Parameter probe{0.33, 0.44, 1.1};
  CHECK(again.eval_state(probe).coeffs == ml.eval_state(probe).coeffs);
}

TEST_CASE("zero kernel coefficients give the initial row only") {
  Vector initial{{1.0, 2.0}};
  KernelModel zero(Matrix::Zero(1, 1), Matrix::Zero(1, 6), 1.0);
  VkogaPredictor pred(zero, ParameterBox(Vector{{0.0}}, Vector{{1.0}}), TimeGrid(1.0, 3), 2, initial);
  Trajectory u = pred.predict(Parameter{0.5});
  CHECK(u.coeffs.row(0) == initial.transpose());
  CHECK(u.coeffs.bottomRows(2).isZero(0.0));
}

TEST_CASE("prolongation") {
  Trajectory dummy(TimeGrid(1.0, 2), Matrix::Zero(2, 0));
  Trained t(1);
  VkogaGenerator gen(t.rom);
  auto mus = testing::random_parameters(t.problem->box, 4, 15);
  for (const auto& mu : mus) gen.extend(mu);
  MlRom before = gen.precompute();

  gen.prolong(t.rom);
  CHECK(gen.samples()[0].coeffs.cols() == t.rom->dim());

  const Index old_dim = t.rom->dim();
  t.gen.extend(Parameter{0.95, 0.12, 1.9});
  auto bigger = std::make_shared<const RbRom>(t.gen.precompute());
  REQUIRE(bigger->dim() > old_dim);
  Matrix old_coeffs = gen.samples()[1].coeffs;
  gen.prolong(bigger);
  CHECK(gen.samples()[1].coeffs.leftCols(old_dim) == old_coeffs);
  CHECK(gen.samples()[1].coeffs.rightCols(bigger->dim() - old_dim).isZero(0.0));

  MlRom after = gen.precompute();
  for (const auto& mu : mus) {
    Matrix a = before.rom().reconstruct(before.eval_state(mu)).coeffs;
    Matrix b = after.rom().reconstruct(after.eval_state(mu)).coeffs;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + a.cwiseAbs().maxCoeff()));
  }

  Trained other(1);
  RbGenerator unrelated(other.problem, 1e-3);
  unrelated.extend(Parameter{0.2, 0.2, 0.7});
  unrelated.extend(Parameter{0.9, 0.9, 1.7});
  unrelated.extend(Parameter{0.1, 0.9, 1.2});
  auto foreign = std::make_shared<const RbRom>(unrelated.precompute());
  if (foreign->dim() >= bigger->dim()) CHECK_THROWS_AS(gen.prolong(foreign), InvalidArgument);
}
