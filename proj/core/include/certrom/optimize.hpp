#pragma once

#include "certrom/adaptive.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace certrom {

struct NelderMeadConfig {
  Vector initial;
  /// Initial simplex edge: scale * box width per coordinate with a box, otherwise
  /// scale * |x_i| (0.00025 for zero coordinates).
  double scale = 0.05;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double xtol = 1e-4;
  double ftol = 1e-7;
  Index max_evals = 1000;
  /// Candidates are clipped componentwise into the box.
  std::optional<ParameterBox> box;

  void validate() const;
};

struct ToleranceEvent {
  /// Number of evaluations done when the drop was applied.
  Index evaluation = 0;
  double old_eps = 0.0;
  double new_eps = 0.0;
};

struct OptimizeReport {
  Vector x;
  double value = 0.0;
  Index evaluations = 0;
  bool converged = false;
  /// Every evaluated point and its objective value, in call order.
  std::vector<Vector> points;
  std::vector<double> values;
  /// Filled by optimize_misfit only.
  std::vector<EvalRecord> records;
  std::vector<ToleranceEvent> events;
};

using Objective = std::function<double(const Vector&)>;

/// `invalidated` is polled before every iteration; when it returns true the objective has
/// changed (e.g. a tolerance drop) and the simplex vertices are re-evaluated in place.
OptimizeReport nelder_mead(const Objective& objective, const NelderMeadConfig& cfg,
                           const std::function<bool()>& invalidated = {});

/// Minimizes the L-infinity misfit between `reference` and the adaptive model output over the
/// model's parameter box. With a stagnation config the tolerance is lowered on stagnation and
/// the simplex continues.
OptimizeReport optimize_misfit(AdaptiveModel& model, const OutputSignal& reference, NelderMeadConfig cfg,
                               std::optional<StagnationConfig> stagnation = std::nullopt);

double relative_error(const Vector& estimate, const Vector& truth);

}  // namespace certrom
