#pragma once

#include "certrom/ml_rom.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace certrom {

/// Layer sizes N_0 ... N_L; rectifier on hidden layers, identity on the last one.
struct MlpArchitecture {
  std::vector<Index> sizes;

  Index layer_count() const { return static_cast<Index>(sizes.size()) - 1; }
  Index input_dim() const { return sizes.front(); }
  Index output_dim() const { return sizes.back(); }
  void validate() const;
  bool operator==(const MlpArchitecture&) const = default;
};

struct MlpParams {
  std::vector<Matrix> weights;  // N_i x N_{i-1}
  std::vector<Vector> biases;   // N_i

  static MlpParams zeros(const MlpArchitecture& arch);
  /// Weights and biases uniform in (-s, s), s = sqrt(1 / fan_in).
  static MlpParams random(const MlpArchitecture& arch, std::uint64_t seed);

  MlpArchitecture architecture() const;
  Index parameter_count() const;
  /// Throws InvalidArgument unless the shapes chain up.
  void validate() const;
  bool operator==(const MlpParams& other) const;
};

Vector mlp_forward(const MlpParams& params, const Vector& x);
/// One sample per row.
Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x);

struct LossGradient {
  double loss = 0.0;
  MlpParams gradient;
};

/// Mean over the rows of the squared Euclidean output error, with its gradient by
/// backpropagation. The rectifier's derivative at 0 is taken as 0.
LossGradient mlp_loss_grad(const MlpParams& params, const Matrix& x, const Matrix& y);
double mlp_loss(const MlpParams& params, const Matrix& x, const Matrix& y);

struct AdamState {
  MlpParams first;
  MlpParams second;
  long step = 0;

  static AdamState init(const MlpParams& params);
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

void adam_step(MlpParams& params, const MlpParams& grad, AdamState& state, double lr);

/// Stops once the monitored loss has not improved for more than `patience` epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience) : patience_(patience) {}

  /// Records the loss of the next epoch; true means stop.
  bool update(double loss);
  Index best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  bool improved() const { return epoch_ == best_epoch_; }

 private:
  Index patience_;
  Index epoch_ = -1;
  Index best_epoch_ = -1;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
  double learning_rate = 5e-3;
  Index batch_size = 128;
  Index max_epochs = 100;
  double decay = 0.7;
  Index decay_every = 10;
  Index patience = 10;
  double validation_fraction = 0.05;
  Index restarts = 1;
  std::uint64_t seed = 0;

  void validate() const;
  double rate(Index epoch) const;
};

struct TrainResult {
  MlpParams params;
  double validation_loss = 0.0;
  Index epochs = 0;  // epochs run by the winning restart
  std::vector<double> validation_history;
};

/// Mini-batch Adam with a step learning-rate schedule and early stopping on a seeded
/// validation split; returns the best-validation parameters over all restarts. With `warm`
/// the first restart starts from it. Throws InvalidArgument("insufficient training data")
/// when fewer than two samples are given.
TrainResult mlp_train(const Matrix& x, const Matrix& y, const MlpArchitecture& arch, const TrainConfig& config,
                      const MlpParams* warm = nullptr);

/// (mu, t) -> reduced coefficients; inputs scaled affinely onto [-1, 1]^{p+1}.
class DnnPredictor : public ReducedStatePredictor {
 public:
  DnnPredictor(MlpParams params, ParameterBox box, TimeGrid time, Vector initial);

  const MlpParams& params() const { return params_; }
  /// Network inputs for all time nodes, one row per node.
  Matrix inputs(const Parameter& mu) const;
  Trajectory predict(const Parameter& mu) const override;

 private:
  MlpParams params_;
  ParameterBox box_;
  TimeGrid time_;
  Vector initial_;
};

/// Neural ML-ROM generator: one training pair per (mu, t_k).
class DnnGenerator : public MlGenerator {
 public:
  struct Options {
    std::vector<Index> hidden{128, 128, 128, 128};
    TrainConfig train;
    /// Pending RB solves that trigger a batch retrain.
    std::size_t batch_threshold = 200;
  };

  DnnGenerator(std::shared_ptr<const RbRom> rom, Options options);
  explicit DnnGenerator(std::shared_ptr<const RbRom> rom) : DnnGenerator(std::move(rom), Options{}) {}

  const Options& options() const { return options_; }
  MlpArchitecture architecture() const;
  bool has_params() const { return !params_.weights.empty(); }
  const MlpParams& params() const { return params_; }
  const TrainResult& last_training() const { return last_; }
  Index model_size() const override { return has_params() ? params_.parameter_count() : 0; }
  /// Predictor with the current weights, without training.
  std::shared_ptr<const DnnPredictor> predictor() const;

 protected:
  std::shared_ptr<const ReducedStatePredictor> fit(bool appended_only) override;
  void on_prolong(Index old_dim, Index new_dim) override;
  void on_reset() override { params_ = MlpParams{}; }

 private:
  Options options_;
  MlpParams params_;
  TrainResult last_;
  std::uint64_t fits_ = 0;
};

}  // namespace certrom
