#include <doctest.h>

#include "certrom/time_norms.hpp"
#include "certrom/types.hpp"

#include <cmath>
#include <random>

using namespace certrom;

TEST_CASE("time grid") {
  TimeGrid g(1.0, 11);
  CHECK(g.dt() == doctest::Approx(0.1));
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(10) == doctest::Approx(1.0));
  for (Index k = 1; k < g.size(); ++k) CHECK(g.node(k) > g.node(k - 1));
  CHECK_THROWS_AS(TimeGrid(1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(TimeGrid(0.0, 5), InvalidArgument);
}

TEST_CASE("parameter box") {
  ParameterBox box(Vector::Constant(2, 0.0), Vector::Constant(2, 2.0));
  CHECK(box.center() == Parameter{1.0, 1.0});
  CHECK(box.contains(Parameter{0.0, 2.0}));
  CHECK_FALSE(box.contains(Parameter{-0.1, 1.0}));
  CHECK_THROWS_AS(box.check(Parameter{3.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(box.check(Parameter{1.0}), InvalidArgument);
  CHECK_THROWS_AS(ParameterBox(Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)), InvalidArgument);
  Vector u = box.to_unit(Parameter{0.5, 1.5});
  CHECK(u[0] == doctest::Approx(0.25));
  CHECK(box.from_unit(u) == Parameter{0.5, 1.5});
}

TEST_CASE("trajectory and signal shapes are checked") {
  TimeGrid g(1.0, 4);
  CHECK_THROWS_AS(Trajectory(g, Matrix::Zero(3, 2)), InvalidArgument);
  CHECK_THROWS_AS(OutputSignal(g, Vector::Zero(5)), InvalidArgument);
  CHECK_THROWS_AS(OutputSignal(g, Vector::Zero(4)) - OutputSignal(TimeGrid(2.0, 4), Vector::Zero(4)), InvalidArgument);
}

TEST_CASE("l2 time norm") {
  CHECK(l2_time_norm(OutputSignal(TimeGrid(1.0, 11), Vector::Zero(11))) == 0.0);
  CHECK(l2_time_norm(OutputSignal(TimeGrid(1.0, 11), Vector::Ones(11))) == doctest::Approx(1.0).epsilon(1e-14));

  TimeGrid g(1.0, 101);
  OutputSignal s(g, g.nodes());
  double sum = 0.0;
  for (int k = 0; k < 100; ++k) sum += 0.01 * (k * 0.01) * (k * 0.01);
  CHECK(l2_time_norm(s) == doctest::Approx(std::sqrt(sum)).epsilon(1e-14));

  // the last node carries no weight
  Vector last = Vector::Zero(101);
  last[100] = 5.0;
  CHECK(l2_time_norm(OutputSignal(g, last)) == 0.0);
}

TEST_CASE("l2 time norm triangle inequality") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  TimeGrid g(2.0, 50);
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(50), b(50);
    for (Index k = 0; k < 50; ++k) {
      a[k] = n(rng);
      b[k] = n(rng);
    }
    double lhs = l2_time_norm(OutputSignal(g, a + b));
    double rhs = l2_time_norm(OutputSignal(g, a)) + l2_time_norm(OutputSignal(g, b));
    CHECK(lhs <= rhs * (1.0 + 1e-12));
    CHECK(l2_time_norm(OutputSignal(g, a)) > 0.0);
  }
}

TEST_CASE("linf time norm") {
  TimeGrid g(1.0, 3);
  CHECK(linf_time_norm(OutputSignal(g, Vector::Zero(3))) == 0.0);
  CHECK(linf_time_norm(OutputSignal(g, Vector{{-3.0, 1.0, 2.0}})) == 3.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  TimeGrid g2(1.0, 1000);
  Vector v(1000);
  for (Index k = 0; k < 1000; ++k) v[k] = u(rng);
  double scan = 0.0;
  for (Index k = 0; k < 1000; ++k) scan = std::max(scan, std::abs(v[k]));
  CHECK(linf_time_norm(OutputSignal(g2, v)) == scan);
}

TEST_CASE("time average") {
  TimeGrid g(1.0, 1000);
  CHECK(time_average(OutputSignal(g, Vector::Constant(1000, 3.5)), {0.2, 0.3}) == doctest::Approx(3.5));

  Vector v = g.nodes().array().square();
  CHECK(time_average(OutputSignal(g, v), {0.0, 1.0}) == doctest::Approx(v.mean()).epsilon(1e-14));

  double sum = 0.0;
  int count = 0;
  for (int k = 0; k < 1000; ++k) {
    double t = k / 999.0;
    if (t >= 0.9 - 1e-12 && t <= 1.0 + 1e-12) {
      sum += v[k];
      ++count;
    }
  }
  CHECK(count == 100);
  CHECK(time_average(OutputSignal(g, v), {0.9, 1.0}) == doctest::Approx(sum / count).epsilon(1e-14));

  CHECK_THROWS_WITH_AS(time_average(OutputSignal(TimeGrid(1.0, 3), Vector::Zero(3)), {0.1, 0.2}), "empty time window",
                       InvalidArgument);
  CHECK_THROWS_AS(time_average(OutputSignal(g, v), {0.5, 1.5}), InvalidArgument);
}
