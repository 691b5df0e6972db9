#pragma once

#include "certrom/adaptive.hpp"
#include "certrom/mlp.hpp"
#include "certrom/optimize.hpp"
#include "certrom/problems.hpp"
#include "certrom/vkoga.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace certrom {

enum class ProblemKind { heat, reactive_flow, building };
enum class MlBackend { vkoga, mlp };

std::string problem_name(ProblemKind kind);
std::string backend_name(MlBackend backend);

struct AdaptiveSettings {
  /// Fixed tolerance. Ignored by `optimize` when stagnation is set (eps0 = |f_ref|_L2 there).
  double eps = 1e-2;
  std::optional<StagnationConfig> stagnation;
  MlBackend backend = MlBackend::vkoga;
  /// Unset: per-extend for `optimize`, batch for `mc` and the rest.
  std::optional<RetrainPolicy> policy;
  std::size_t batch_threshold = 200;
  HapodConfig hapod;
  KernelConfig vkoga;
  DnnGenerator::Options mlp;
};

struct OptimizeSettings {
  std::optional<Vector> initial;
  /// Parameter whose FOM output is the target; default: box center.
  std::optional<Vector> target;
  double scale = 0.05;
  double xtol = 1e-4;
  double ftol = 1e-7;
  Index max_evals = 1000;
};

struct McSettings {
  Index samples = 300;
  /// Averaging window; default: the building config window, or [0, T].
  std::optional<std::pair<double, double>> window;
  /// Additional pure-FOM run with the same draws for comparison.
  bool fom_reference = false;
};

struct ValidateSettings {
  Index training = 5;
  Index samples = 20;
};

struct RunConfig {
  ProblemKind problem = ProblemKind::heat;
  HeatConfig heat;
  ReactiveFlowConfig reactive_flow;
  BuildingConfig building = BuildingConfig::default_plan();
  AdaptiveSettings adaptive;
  OptimizeSettings optimize;
  McSettings mc;
  ValidateSettings validate;
  std::uint64_t seed = 0;
  std::string out = "out";
};

/// Parses a JSON run config. Missing keys keep their defaults; malformed entries raise
/// InvalidArgument("config <json-pointer>: <reason>"), unknown keys included.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
/// Full config with every default filled in, as pretty-printed JSON.
std::string run_config_json(const RunConfig& cfg);

std::shared_ptr<const FomProblem> build_problem(const RunConfig& cfg);
MlGeneratorFactory make_ml_factory(const AdaptiveSettings& settings, std::uint64_t seed);
AdaptiveOptions make_adaptive_options(const AdaptiveSettings& settings, double eps, RetrainPolicy fallback);

}  // namespace certrom
