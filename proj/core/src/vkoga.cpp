#include "certrom/vkoga.hpp"

#include <cmath>

namespace certrom {

double kernel_eval(const Vector& x, const Vector& y, double gamma) {
  if (x.size() != y.size()) throw InvalidArgument("kernel arguments differ in dimension");
  return std::exp(-gamma * (x - y).squaredNorm());
}

void KernelConfig::validate() const {
  if (gamma < 0.0) throw InvalidArgument("kernel width must be positive");
  if (lambda < 0.0) throw InvalidArgument("kernel regularization must be nonnegative");
  if (max_centers < 0) throw InvalidArgument("max centers must be nonnegative");
}

KernelModel::KernelModel(Matrix centers, Matrix coefficients, double gamma)
    : centers_(std::move(centers)), coefficients_(std::move(coefficients)), gamma_(gamma) {
  if (centers_.rows() != coefficients_.rows()) throw InvalidArgument("kernel model: one coefficient row per center");
}

Vector KernelModel::predict(const Vector& x) const {
  if (centers_.rows() == 0) return Vector::Zero(coefficients_.cols());
  if (x.size() != centers_.cols()) throw InvalidArgument("kernel model input has the wrong dimension");
  Vector k = (-gamma_ * (centers_.rowwise() - x.transpose()).rowwise().squaredNorm()).array().exp();
  return coefficients_.transpose() * k;
}

KernelGreedy::KernelGreedy(KernelConfig config, Index input_dim) : config_(config), input_dim_(input_dim) {
  config_.validate();
  if (input_dim < 1) throw InvalidArgument("kernel input dimension must be positive");
  if (config_.gamma == 0.0) config_.gamma = 1.0 / static_cast<double>(input_dim);
  points_.resize(0, input_dim);
}

double KernelGreedy::max_residual() const {
  return residual_.rows() == 0 ? 0.0 : residual_.rowwise().norm().maxCoeff();
}

std::vector<double> KernelGreedy::native_residual_history() const {
  const Index m = center_count();
  std::vector<double> out(static_cast<std::size_t>(m + 1), 0.0);
  double tail = 0.0;
  for (Index j = m - 1; j >= 0; --j) {
    tail += newton_coeffs_.row(j).squaredNorm();
    out[static_cast<std::size_t>(j)] = std::sqrt(tail);
  }
  return out;
}

void KernelGreedy::add_points(const Matrix& x, const Matrix& y) {
  if (x.cols() != input_dim_) throw InvalidArgument("kernel inputs have the wrong dimension");
  if (x.rows() != y.rows()) throw InvalidArgument("one target per kernel input required");
  if (targets_.size() != 0 && y.cols() != targets_.cols()) throw InvalidArgument("kernel targets have the wrong dimension");
  const Index old = points_.rows(), n = old + x.rows();
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < old + i; ++j) {
      Eigen::RowVectorXd other = j < old ? Eigen::RowVectorXd(points_.row(j)) : Eigen::RowVectorXd(x.row(j - old));
      if ((x.row(i) - other).squaredNorm() == 0.0) throw InvalidArgument("coincident training inputs");
    }

  const Index m = center_count();
  Matrix newton_new(x.rows(), m);
  // Newton basis values at the new points: v_j(x) = (k(x, c_j) - sum_{l<j} v_l(x) v_l(c_j)) / v_j(c_j)
  for (Index j = 0; j < m; ++j) {
    const Index c = selected_[static_cast<std::size_t>(j)];
    for (Index i = 0; i < x.rows(); ++i) {
      double v = std::exp(-config_.gamma * (x.row(i) - points_.row(c)).squaredNorm());
      for (Index l = 0; l < j; ++l) v -= newton_new(i, l) * newton_(c, l);
      newton_new(i, j) = v / newton_(c, j);
    }
  }

  points_.conservativeResize(n, Eigen::NoChange);
  points_.bottomRows(x.rows()) = x;
  Matrix t(n, y.cols());
  if (old > 0) t.topRows(old) = targets_;
  t.bottomRows(x.rows()) = y;
  targets_ = std::move(t);
  Matrix r(n, y.cols());
  if (old > 0) r.topRows(old) = residual_;
  r.bottomRows(x.rows()) = y - newton_new * (m > 0 ? newton_coeffs_ : Matrix::Zero(0, y.cols()));
  residual_ = std::move(r);
  power_.conservativeResize(n);
  power_.tail(x.rows()) = (1.0 + config_.lambda - newton_new.rowwise().squaredNorm().array()).matrix();
  newton_.conservativeResize(n, m);
  newton_.bottomRows(x.rows()) = newton_new;
  is_selected_.resize(static_cast<std::size_t>(n), false);
  if (newton_coeffs_.size() == 0) newton_coeffs_.resize(0, y.cols());
}

void KernelGreedy::run() {
  const Index n = point_count();
  const Index limit = config_.max_centers > 0 ? std::min(config_.max_centers, n) : n;
  while (center_count() < limit) {
    Index best = -1;
    double best_norm = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (is_selected_[static_cast<std::size_t>(i)]) continue;
      double r = residual_.row(i).norm();
      if (r > best_norm) best_norm = r, best = i;
    }
    if (best < 0) break;
    history_.push_back(max_residual());
    if (best_norm <= config_.tolerance || power_[best] < config_.power_floor) break;

    const Index m = center_count();
    const double pivot = std::sqrt(power_[best]);
    Vector k = (-config_.gamma * (points_.rowwise() - points_.row(best)).rowwise().squaredNorm()).array().exp();
    k[best] += config_.lambda;
    Vector v = (k - newton_ * newton_.row(best).transpose()) / pivot;
    Eigen::RowVectorXd c = residual_.row(best) / pivot;

    newton_.conservativeResize(Eigen::NoChange, m + 1);
    newton_.col(m) = v;
    newton_coeffs_.conservativeResize(m + 1, Eigen::NoChange);
    newton_coeffs_.row(m) = c;
    residual_.noalias() -= v * c;
    power_ -= v.cwiseAbs2();
    selected_.push_back(best);
    is_selected_[static_cast<std::size_t>(best)] = true;
  }
}

KernelModel KernelGreedy::model() const {
  const Index m = center_count();
  Matrix centers(m, input_dim_);
  Matrix lower(m, m);
  for (Index j = 0; j < m; ++j) {
    centers.row(j) = points_.row(selected_[static_cast<std::size_t>(j)]);
    lower.row(j) = newton_.row(selected_[static_cast<std::size_t>(j)]);
  }
  // Newton basis = k(., centers) L^{-T}, so f = k(., centers) L^{-T} c.
  Matrix alpha = lower.triangularView<Eigen::Lower>().transpose().solve(newton_coeffs_);
  return KernelModel(std::move(centers), std::move(alpha), config_.gamma);
}

KernelModel vkoga_fit(const Matrix& x, const Matrix& y, const KernelConfig& config) {
  if (x.rows() == 0) throw InvalidArgument("empty training set");
  KernelGreedy greedy(config, x.cols());
  greedy.add_points(x, y);
  greedy.run();
  return greedy.model();
}

VkogaPredictor::VkogaPredictor(KernelModel model, ParameterBox box, TimeGrid time, Index dim, Vector initial)
    : model_(std::move(model)), box_(std::move(box)), time_(time), dim_(dim), initial_(std::move(initial)) {}

Trajectory VkogaPredictor::predict(const Parameter& mu) const {
  box_.check(mu);
  Matrix coeffs = unflatten_trajectory(model_.predict(box_.to_unit(mu)), time_.size(), dim_);
  if (dim_ > 0) coeffs.row(0) = initial_.transpose();
  return Trajectory(time_, std::move(coeffs));
}

VkogaGenerator::VkogaGenerator(std::shared_ptr<const RbRom> rom, KernelConfig config)
    : MlGenerator(std::move(rom)), config_(config) {
  config_.validate();
}

Index VkogaGenerator::model_size() const { return greedy_ ? greedy_->center_count() : 0; }

std::shared_ptr<const ReducedStatePredictor> VkogaGenerator::fit(bool appended_only) {
  const auto& s = samples();
  const FomProblem& p = rom().problem();
  const Index steps = rom().time().size(), dim = rom().dim();
  Index first = 0;
  if (appended_only && greedy_ && greedy_->point_count() <= static_cast<Index>(s.size())) {
    first = greedy_->point_count();
  } else {
    greedy_ = std::make_unique<KernelGreedy>(config_, p.box.dim());
  }
  const Index fresh = static_cast<Index>(s.size()) - first;
  if (fresh > 0) {
    Matrix x(fresh, p.box.dim()), y(fresh, steps * dim);
    for (Index i = 0; i < fresh; ++i) {
      const auto& sample = s[static_cast<std::size_t>(first + i)];
      x.row(i) = p.box.to_unit(sample.mu).transpose();
      y.row(i) = flatten_trajectory(sample.coeffs).transpose();
    }
    greedy_->add_points(x, y);
  }
  greedy_->run();
  return std::make_shared<VkogaPredictor>(greedy_->model(), p.box, rom().time(), dim, rom().reduced_initial());
}

}  // namespace certrom
