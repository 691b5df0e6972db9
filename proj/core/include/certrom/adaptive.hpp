#pragma once

#include "certrom/hapod.hpp"
#include "certrom/ml_rom.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace certrom {

/// Which model answered a query. `fom` is only used by the reference mode (eps = 0).
enum class Tier { ml, rb, fom_enriched, fom };

std::string tier_name(Tier tier);

struct PhaseTimes {
  double ml_est = 0.0;
  double ml_eval = 0.0;
  double rb_est = 0.0;
  double rb_eval = 0.0;
  double fom_solve = 0.0;
  double rb_build = 0.0;
  double ml_build = 0.0;

  double total() const { return ml_est + ml_eval + rb_est + rb_eval + fom_solve + rb_build + ml_build; }
};

struct EvalRecord {
  Parameter mu;
  Tier tier = Tier::fom_enriched;
  double delta_ml = 0.0;  // +inf when the ML model was untrained
  double delta_rb = 0.0;  // NaN when the RB tier was not reached
  double eps = 0.0;
  PhaseTimes times;
  Index basis_dim = 0;
  Index ml_size = 0;
  bool ml_retrained = false;
  /// Objective or QoI value, filled in by the drivers.
  double value = 0.0;
};

enum class RetrainPolicy { per_extend, batch };

struct AdaptiveOptions {
  double eps = 1e-2;
  RetrainPolicy policy = RetrainPolicy::per_extend;
  /// Pending ML samples that trigger a refit under the batch policy.
  std::size_t batch_threshold = 200;
  HapodConfig hapod;
};

using MlGeneratorFactory = std::function<std::unique_ptr<MlGenerator>(std::shared_ptr<const RbRom>)>;

/// Certified model hierarchy ML -> RB -> FOM with on-the-fly enrichment: every returned output
/// is within eps of the FOM output in the discrete L2(0,T) norm.
class AdaptiveModel {
 public:
  AdaptiveModel(std::shared_ptr<const FomProblem> problem, MlGeneratorFactory ml_factory, AdaptiveOptions options);

  const FomProblem& problem() const { return *problem_; }
  double tolerance() const { return options_.eps; }
  const AdaptiveOptions& options() const { return options_; }
  /// eps == 0: every query is a plain FOM solve, surrogates are never built.
  bool reference_mode() const { return options_.eps == 0.0; }
  const RbRom& rb() const { return *rom_; }
  std::shared_ptr<const RbRom> rb_ptr() const { return rom_; }
  const RbGenerator& rb_generator() const { return *rb_gen_; }
  const MlGenerator& ml_generator() const { return *ml_gen_; }
  const MlRom& ml() const { return ml_; }
  const std::vector<EvalRecord>& records() const { return records_; }
  Index fom_solves() const { return fom_solves_; }

  OutputSignal eval_output(const Parameter& mu);
  /// Same cascade certified with the state estimator. Returns V_0 states (without lifting): the
  /// reduced reconstruction for surrogate tiers.
  Trajectory eval_state(const Parameter& mu);

  /// Lowers eps, drops ML samples whose stored trajectory no longer certifies, refits the rest.
  void apply_tolerance_drop(double new_eps);

  /// Sets EvalRecord::value of the latest record.
  void annotate_last(double value);

 private:
  /// Refits the ML model when the retrain policy says so. Under the batch policy this also
  /// holds after an FOM enrichment; the prolonged (zero-padded) ML model stays in use meanwhile.
  void refit_ml(EvalRecord& rec);
  /// FOM solve, RB rebuild and ML prolongation for mu.
  void enrich(const Parameter& mu, EvalRecord& rec);

  std::shared_ptr<const FomProblem> problem_;
  AdaptiveOptions options_;
  std::unique_ptr<RbGenerator> rb_gen_;
  std::shared_ptr<const RbRom> rom_;
  std::unique_ptr<MlGenerator> ml_gen_;
  MlRom ml_;
  std::vector<EvalRecord> records_;
  Index fom_solves_ = 0;
};

struct StagnationConfig {
  /// Running-average width; 0 selects 2 * parameter dimension.
  Index n_av = 0;
  Index n_stag = 10;
  /// Thresholds on the descent rate -dJ/dn and on the descent rate divided by J/J_0.
  double eps_slope = -1e-15;
  double eps_slope_rel = 5e-5;
  double divisor = 10.0;
  double eps0 = 1.0;

  void validate() const;
};

/// Watches the objective history of a minimization and lowers the tolerance on stagnation.
class StagnationController {
 public:
  StagnationController(StagnationConfig config, Index parameter_dim);

  const StagnationConfig& config() const { return config_; }
  double tolerance() const { return eps_; }
  Index counter() const { return counter_; }
  /// Descent rate of the latest update (NaN before the window is full).
  double last_rate() const { return rate_; }
  /// Call after every model evaluation with the whole history J_0..J_n; returns the new
  /// tolerance on stagnation.
  std::optional<double> update(const std::vector<double>& history);

 private:
  StagnationConfig config_;
  double eps_;
  Index counter_ = 0;
  double rate_ = 0.0;
};

/// Least-squares slope of values[i] against i.
double regression_slope(const std::vector<double>& values);

}  // namespace certrom
