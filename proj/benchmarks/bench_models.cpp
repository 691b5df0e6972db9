#include "certrom/app.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace certrom;

namespace {

std::shared_ptr<const FomProblem> heat() {
  static auto p = build_heat(HeatConfig{});
  return p;
}

std::shared_ptr<const FomProblem> coarse_flow() {
  static auto p = build_reactive_flow(ReactiveFlowConfig{});
  return p;
}

void BM_FomSolveHeat(benchmark::State& state) {
  Fom fom(heat());
  const Parameter mu{0.4, 0.7, 1.1};
  for (auto _ : state) benchmark::DoNotOptimize(fom.eval_output(mu));
}
BENCHMARK(BM_FomSolveHeat)->Unit(benchmark::kMillisecond);

void BM_FomSolveReactiveFlow(benchmark::State& state) {
  Fom fom(coarse_flow());
  const Parameter mu{5.005, 10.0};
  for (auto _ : state) benchmark::DoNotOptimize(fom.eval_output(mu));
}
BENCHMARK(BM_FomSolveReactiveFlow)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_RbEvalEstimate(benchmark::State& state) {
  auto p = coarse_flow();
  RbGenerator gen(p, 1e-3);
  gen.extend(Parameter{1.0, 9.5});
  gen.extend(Parameter{8.0, 10.5});
  const RbRom rom = gen.precompute();
  const Parameter mu{5.005, 10.0};
  state.counters["basis_dim"] = static_cast<double>(rom.dim());
  for (auto _ : state) {
    Trajectory u = rom.eval_state(mu);
    benchmark::DoNotOptimize(rom.est_output(u, mu));
  }
}
BENCHMARK(BM_RbEvalEstimate)->Unit(benchmark::kMillisecond);

void BM_VkogaPredict(benchmark::State& state) {
  const Index points = state.range(0);
  const Index outputs = 1001 * 20;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(points, 2), y(points, outputs);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  for (Index i = 0; i < y.size(); ++i) y.data()[i] = u(rng);
  const KernelModel model = vkoga_fit(x, y, KernelConfig{});
  const Vector q{{0.3, 0.6}};
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(q));
}
BENCHMARK(BM_VkogaPredict)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_MlpForward(benchmark::State& state) {
  const MlpParams params = MlpParams::random({{3, 128, 128, 128, 128, 20}}, 2);
  const Vector x{{0.1, -0.4, 0.7}};
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward(params, x));
}
BENCHMARK(BM_MlpForward)->Unit(benchmark::kMicrosecond);

void BM_MlpForwardBatch(benchmark::State& state) {
  const MlpParams params = MlpParams::random({{3, 128, 128, 128, 128, 20}}, 2);
  Matrix x = Matrix::Random(state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward_batch(params, x));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(1001)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
