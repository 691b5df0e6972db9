#pragma once

#include "certrom/model.hpp"
#include "certrom/rb.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace certrom {

/// Predicts a reduced trajectory (first row = exact reduced initial datum).
class ReducedStatePredictor {
 public:
  virtual ~ReducedStatePredictor() = default;
  virtual Trajectory predict(const Parameter& mu) const = 0;
};

/// Certified ML-ROM: ML predictions of RB coefficients, checked by the RB residual estimator.
/// Without a predictor the model is untrained and its estimate is +infinity.
class MlRom : public CertifiedModel {
 public:
  MlRom() = default;
  MlRom(std::shared_ptr<const RbRom> rom, std::shared_ptr<const ReducedStatePredictor> predictor);

  bool trained() const { return rom_ && predictor_; }
  const RbRom& rom() const { return *rom_; }
  std::shared_ptr<const ReducedStatePredictor> predictor() const { return predictor_; }

  Trajectory eval_state(const Parameter& mu) const override;
  OutputSignal output(const Trajectory& state) const override;
  double est_output(const Parameter& mu) const override;
  double est_output(const Trajectory& state, const Parameter& mu) const;

 private:
  std::shared_ptr<const RbRom> rom_;
  std::shared_ptr<const ReducedStatePredictor> predictor_;
};

/// Common bookkeeping of the ML generators: one stored RB trajectory per training parameter.
class MlGenerator {
 public:
  struct Sample {
    Parameter mu;
    Matrix coeffs;  // K x N_rb
  };

  explicit MlGenerator(std::shared_ptr<const RbRom> rom);
  virtual ~MlGenerator() = default;

  const RbRom& rom() const { return *rom_; }
  std::shared_ptr<const RbRom> rom_ptr() const { return rom_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t sample_count() const { return samples_.size(); }
  /// Samples added since the last precompute.
  std::size_t pending() const { return pending_; }

  /// Stores the RB trajectory for mu; an existing sample for mu is replaced.
  void extend(const Parameter& mu, const Trajectory& rb_state);
  void extend(const Parameter& mu);
  /// Keeps only the samples for which keep(sample) holds.
  void retain(const std::function<bool(const Sample&)>& keep);
  /// Switches to a reduced model whose basis extends the current one; stored coefficients are
  /// padded with zeros, and so are the predictions of the current model until the next fit.
  void prolong(std::shared_ptr<const RbRom> rom);
  /// Fits the surrogate to all samples. Throws InvalidArgument("empty training set") without samples.
  MlRom precompute();
  /// The model of the last precompute (untrained before).
  const MlRom& current() const { return current_; }
  /// Number of centers or trainable parameters of the current surrogate.
  virtual Index model_size() const = 0;

 protected:
  /// Fits a predictor to samples(); `appended_only` means the samples since the last fit were
  /// only appended (no replacement, removal or prolongation).
  virtual std::shared_ptr<const ReducedStatePredictor> fit(bool appended_only) = 0;
  virtual void on_prolong(Index old_dim, Index new_dim) { (void)old_dim, (void)new_dim; }
  virtual void on_reset() {}

 private:
  std::shared_ptr<const RbRom> rom_;
  std::vector<Sample> samples_;
  std::size_t pending_ = 0;
  bool appended_only_ = true;
  bool fitted_ = false;
  bool stale_ = false;  // prolonged since the last fit
  MlRom current_;
};

/// Zero-pads the predictions of another predictor to a larger reduced dimension.
class PaddedPredictor : public ReducedStatePredictor {
 public:
  PaddedPredictor(std::shared_ptr<const ReducedStatePredictor> inner, Index dim);
  Trajectory predict(const Parameter& mu) const override;

 private:
  std::shared_ptr<const ReducedStatePredictor> inner_;
  Index dim_;
};

/// Flattens a K x N trajectory row-major by time step.
Vector flatten_trajectory(const Matrix& coeffs);
Matrix unflatten_trajectory(const Vector& flat, Index steps, Index dim);

}  // namespace certrom
