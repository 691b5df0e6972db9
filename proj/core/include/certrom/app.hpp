#pragma once

#include "certrom/config.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace certrom {

/// One-pass mean and unbiased variance (Welford).
class RunningMoments {
 public:
  void add(double x);
  Index count() const { return n_; }
  double mean() const { return mean_; }
  /// NaN for fewer than two samples.
  double variance() const;

 private:
  Index n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Record counts per tier, indexed by static_cast<int>(Tier).
struct TierCounts {
  std::array<Index, 4> counts{};

  Index total() const;
  Index of(Tier tier) const { return counts[static_cast<std::size_t>(tier)]; }
  /// 0 for an empty range.
  double fraction(Tier tier) const;
};

TierCounts count_tiers(const std::vector<EvalRecord>& records, std::size_t first, std::size_t last);

/// Records [first, last) answered by one trained ML model: a window ends at every record whose
/// evaluation retrained the ML model.
struct TrainingWindow {
  std::size_t first = 0;
  std::size_t last = 0;
  TierCounts tiers;
};

std::vector<TrainingWindow> training_windows(const std::vector<EvalRecord>& records);

struct McReport {
  Index n_mc = 0;
  double mean = 0.0;
  double variance = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  std::uint64_t seed = 0;
  std::vector<double> values;
  std::vector<EvalRecord> records;
  std::vector<TrainingWindow> windows;
};

/// count parameters drawn uniformly from the box with mt19937_64(seed).
std::vector<Parameter> uniform_samples(const ParameterBox& box, Index count, std::uint64_t seed);

/// Monte Carlo estimate of the time-averaged output over uniform draws. A model in reference
/// mode gives the pure-FOM estimate for the same draws.
McReport monte_carlo(AdaptiveModel& model, Index n_mc, std::pair<double, double> window, std::uint64_t seed);

/// Writes `evals.csv` and `summary.json` into dir (created if missing). parameter_dim fixes the
/// mu columns so an empty record list still yields the full header.
void export_telemetry(const std::vector<EvalRecord>& records, const std::vector<ToleranceEvent>& events,
                      Index parameter_dim, const std::string& dir);
std::string telemetry_header(Index parameter_dim);

struct GreedyReport {
  std::vector<Parameter> selected;
  /// Largest output estimate over the training set before each extension, plus the final one.
  std::vector<double> max_estimates;
  bool converged = false;
};

/// Goal-oriented offline greedy: extends at the training parameter with the largest output
/// estimate until all estimates are at most eps.
GreedyReport greedy_train(RbGenerator& generator, const std::vector<Parameter>& training, double eps,
                          Index max_extensions);

struct EffectivityRow {
  Parameter mu;
  double output_error = 0.0;
  double output_estimate = 0.0;
  double state_error = 0.0;
  double state_estimate = 0.0;
};

/// Errors are measured against fresh FOM solves; the state error uses the energy product.
std::vector<EffectivityRow> effectivity_study(const RbRom& rom, const std::vector<Parameter>& samples);

void write_output_csv(const OutputSignal& signal, const std::string& path);
void write_effectivity_csv(const std::vector<EffectivityRow>& rows, const std::string& path);

// Drivers behind the CLI subcommands. Each writes its files into cfg.out.

struct SolveResult {
  OutputSignal output;
  /// NaN for the FOM.
  double bound = 0.0;
  std::string tier;
};
SolveResult run_solve(const RunConfig& cfg, const Parameter& mu, bool adaptive);

/// Default start: (2, 10.5) for the reactive flow, otherwise the box point at 1/4 of each range.
Vector default_initial(const RunConfig& cfg, const ParameterBox& box);
OptimizeReport run_optimize(const RunConfig& cfg);
McReport run_mc(const RunConfig& cfg);
std::vector<EffectivityRow> run_validate(const RunConfig& cfg);

}  // namespace certrom
