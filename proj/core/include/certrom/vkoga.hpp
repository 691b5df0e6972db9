#pragma once

#include "certrom/ml_rom.hpp"

#include <vector>

namespace certrom {

/// exp(-gamma |x - y|^2)
double kernel_eval(const Vector& x, const Vector& y, double gamma);

struct KernelConfig {
  /// Gaussian width; 0 selects 1 / input dimension.
  double gamma = 0.0;
  /// Added to the kernel diagonal on the training points.
  double lambda = 0.0;
  /// 0 means all available points.
  Index max_centers = 0;
  /// Stop once the largest residual norm falls to this value.
  double tolerance = 0.0;
  /// Stop once the selected point's squared power function falls below this value.
  double power_floor = 1e-12;

  void validate() const;
};

/// f = sum_i alpha_i k(x, x_i), vector-valued coefficients.
class KernelModel {
 public:
  KernelModel() = default;
  KernelModel(Matrix centers, Matrix coefficients, double gamma);

  Index center_count() const { return centers_.rows(); }
  Index output_dim() const { return coefficients_.cols(); }
  const Matrix& centers() const { return centers_; }
  const Matrix& coefficients() const { return coefficients_; }
  double gamma() const { return gamma_; }

  Vector predict(const Vector& x) const;

 private:
  Matrix centers_;       // m x p
  Matrix coefficients_;  // m x r
  double gamma_ = 1.0;
};

/// f-greedy kernel interpolation with Newton-basis updates. Points can be appended between
/// runs; the greedy then continues from the current expansion.
class KernelGreedy {
 public:
  KernelGreedy(KernelConfig config, Index input_dim);

  const KernelConfig& config() const { return config_; }
  Index point_count() const { return points_.rows(); }
  Index center_count() const { return static_cast<Index>(selected_.size()); }
  const std::vector<Index>& selected() const { return selected_; }
  /// Largest residual norm before each greedy step.
  const std::vector<double>& residual_history() const { return history_; }
  /// Native-space distance of each intermediate expansion to the current one,
  /// sqrt(sum_{j>n} |c_j|^2); non-increasing in n. Size center_count() + 1.
  std::vector<double> native_residual_history() const;
  /// Newton-basis coefficients, one row per center.
  const Matrix& newton_coefficients() const { return newton_coeffs_; }
  /// Max residual norm over all points under the current expansion.
  double max_residual() const;

  /// Throws InvalidArgument("coincident training inputs") for repeated points.
  void add_points(const Matrix& x, const Matrix& y);
  void run();
  KernelModel model() const;

 private:
  KernelConfig config_;
  Index input_dim_;
  Matrix points_;    // n x p
  Matrix targets_;   // n x r
  Matrix residual_;  // n x r
  Vector power_;     // n, squared power function incl. regularization
  Matrix newton_;    // n x m, Newton basis values at the points
  Matrix newton_coeffs_;  // m x r
  std::vector<Index> selected_;
  std::vector<bool> is_selected_;
  std::vector<double> history_;
};

KernelModel vkoga_fit(const Matrix& x, const Matrix& y, const KernelConfig& config);

class VkogaPredictor : public ReducedStatePredictor {
 public:
  VkogaPredictor(KernelModel model, ParameterBox box, TimeGrid time, Index dim, Vector initial);

  const KernelModel& model() const { return model_; }
  Trajectory predict(const Parameter& mu) const override;

 private:
  KernelModel model_;
  ParameterBox box_;
  TimeGrid time_;
  Index dim_;
  Vector initial_;
};

/// Kernel ML-ROM generator: targets are whole flattened RB trajectories.
class VkogaGenerator : public MlGenerator {
 public:
  VkogaGenerator(std::shared_ptr<const RbRom> rom, KernelConfig config = {});

  const KernelConfig& config() const { return config_; }
  Index model_size() const override;
  const KernelGreedy* greedy() const { return greedy_.get(); }

 protected:
  std::shared_ptr<const ReducedStatePredictor> fit(bool appended_only) override;
  void on_reset() override { greedy_.reset(); }

 private:
  KernelConfig config_;
  std::unique_ptr<KernelGreedy> greedy_;
};

}  // namespace certrom
