#include "certrom/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace certrom {

void MlpArchitecture::validate() const {
  if (sizes.size() < 2) throw InvalidArgument("network needs at least one layer");
  for (Index s : sizes)
    if (s < 1) throw InvalidArgument("layer sizes must be positive");
}

MlpParams MlpParams::zeros(const MlpArchitecture& arch) {
  arch.validate();
  MlpParams p;
  for (Index l = 0; l < arch.layer_count(); ++l) {
    const auto i = static_cast<std::size_t>(l);
    p.weights.push_back(Matrix::Zero(arch.sizes[i + 1], arch.sizes[i]));
    p.biases.push_back(Vector::Zero(arch.sizes[i + 1]));
  }
  return p;
}

MlpParams MlpParams::random(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpParams p = zeros(arch);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double s = std::sqrt(1.0 / static_cast<double>(p.weights[l].cols()));
    std::uniform_real_distribution<double> u(-s, s);
    for (Index j = 0; j < p.weights[l].cols(); ++j)
      for (Index i = 0; i < p.weights[l].rows(); ++i) p.weights[l](i, j) = u(rng);
    for (Index i = 0; i < p.biases[l].size(); ++i) p.biases[l][i] = u(rng);
  }
  return p;
}

MlpArchitecture MlpParams::architecture() const {
  MlpArchitecture a;
  if (weights.empty()) return a;
  a.sizes.push_back(weights.front().cols());
  for (const auto& w : weights) a.sizes.push_back(w.rows());
  return a;
}

Index MlpParams::parameter_count() const {
  Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpParams::validate() const {
  if (weights.empty() || weights.size() != biases.size()) throw InvalidArgument("network parameters are malformed");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows()) throw InvalidArgument("bias does not match its layer");
    if (l > 0 && weights[l].cols() != weights[l - 1].rows()) throw InvalidArgument("layer shapes do not chain");
  }
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (weights.size() != other.weights.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

Vector mlp_forward(const MlpParams& params, const Vector& x) {
  params.validate();
  if (x.size() != params.weights.front().cols()) throw InvalidArgument("network input has the wrong dimension");
  Vector r = x;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    r = params.weights[l] * r + params.biases[l];
    if (l + 1 < params.weights.size()) r = r.cwiseMax(0.0);
  }
  return r;
}

Matrix mlp_forward_batch(const MlpParams& params, const Matrix& x) {
  params.validate();
  if (x.cols() != params.weights.front().cols()) throw InvalidArgument("network input has the wrong dimension");
  Matrix r = x;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Matrix z = r * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (l + 1 < params.weights.size()) z = z.cwiseMax(0.0);
    r = std::move(z);
  }
  return r;
}

double mlp_loss(const MlpParams& params, const Matrix& x, const Matrix& y) {
  if (x.rows() == 0) throw InvalidArgument("empty batch");
  Matrix out = mlp_forward_batch(params, x);
  if (out.cols() != y.cols() || y.rows() != x.rows()) throw InvalidArgument("targets do not match the network");
  return (out - y).squaredNorm() / static_cast<double>(x.rows());
}

LossGradient mlp_loss_grad(const MlpParams& params, const Matrix& x, const Matrix& y) {
  params.validate();
  if (x.rows() == 0) throw InvalidArgument("empty batch");
  if (x.cols() != params.weights.front().cols()) throw InvalidArgument("network input has the wrong dimension");
  if (y.rows() != x.rows() || y.cols() != params.weights.back().rows()) throw InvalidArgument("targets do not match the network");
  const std::size_t layers = params.weights.size();
  const double n = static_cast<double>(x.rows());

  // activations[l] is the input of layer l (rows = samples)
  std::vector<Matrix> activations{x};
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = activations.back() * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }

  LossGradient out;
  Matrix delta = activations.back() - y;
  out.loss = delta.squaredNorm() / n;
  delta *= 2.0 / n;
  out.gradient.weights.resize(layers);
  out.gradient.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    out.gradient.weights[l] = delta.transpose() * activations[l];
    out.gradient.biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back = delta * params.weights[l];
    // activations[l] > 0 exactly where the rectifier was active
    delta = back.cwiseProduct((activations[l].array() > 0.0).cast<double>().matrix());
  }
  return out;
}

AdamState AdamState::init(const MlpParams& params) {
  AdamState s;
  s.first = MlpParams::zeros(params.architecture());
  s.second = s.first;
  return s;
}

void adam_step(MlpParams& params, const MlpParams& grad, AdamState& state, double lr) {
  if (!(grad.architecture() == params.architecture()) || !(state.first.architecture() == params.architecture()))
    throw InvalidArgument("optimizer state does not match the network");
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseAbs2();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEpsilon);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grad.weights[l], state.first.weights[l], state.second.weights[l]);
    update(params.biases[l], grad.biases[l], state.first.biases[l], state.second.biases[l]);
  }
}

bool EarlyStopping::update(double loss) {
  ++epoch_;
  if (loss < best_) {
    best_ = loss;
    best_epoch_ = epoch_;
  }
  return epoch_ - best_epoch_ > patience_;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (batch_size < 1 || max_epochs < 1 || decay_every < 1 || patience < 1 || restarts < 1)
    throw InvalidArgument("training counts must be positive");
  if (!(decay > 0.0)) throw InvalidArgument("learning rate decay must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("validation fraction must lie in (0, 1)");
}

double TrainConfig::rate(Index epoch) const {
  return learning_rate * std::pow(decay, static_cast<double>(epoch / decay_every));
}

namespace {

Matrix gather(const Matrix& m, const std::vector<Index>& rows, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Index>(i - begin)) = m.row(rows[i]);
  return out;
}

}  // namespace

TrainResult mlp_train(const Matrix& x, const Matrix& y, const MlpArchitecture& arch, const TrainConfig& config,
                      const MlpParams* warm) {
  config.validate();
  arch.validate();
  if (x.rows() != y.rows()) throw InvalidArgument("one target per training input required");
  if (x.cols() != arch.input_dim() || y.cols() != arch.output_dim()) throw InvalidArgument("training data do not match the network");
  const Index n = x.rows();
  if (n < 2) throw InvalidArgument("insufficient training data");
  const Index n_val = std::max<Index>(1, static_cast<Index>(std::floor(config.validation_fraction * static_cast<double>(n))));

  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const Matrix x_val = gather(x, order, 0, static_cast<std::size_t>(n_val));
  const Matrix y_val = gather(y, order, 0, static_cast<std::size_t>(n_val));
  std::vector<Index> train(order.begin() + n_val, order.end());

  TrainResult best;
  best.validation_loss = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < config.restarts; ++r) {
    MlpParams params = (r == 0 && warm && warm->architecture() == arch)
                           ? *warm
                           : MlpParams::random(arch, config.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r + 1));
    AdamState state = AdamState::init(params);
    EarlyStopping stop(config.patience);
    TrainResult run;
    run.validation_loss = std::numeric_limits<double>::infinity();
    for (Index epoch = 0; epoch < config.max_epochs; ++epoch) {
      const double lr = config.rate(epoch);
      std::shuffle(train.begin(), train.end(), rng);
      for (std::size_t b = 0; b < train.size(); b += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t e = std::min(train.size(), b + static_cast<std::size_t>(config.batch_size));
        LossGradient lg = mlp_loss_grad(params, gather(x, train, b, e), gather(y, train, b, e));
        adam_step(params, lg.gradient, state, lr);
      }
      const double val = mlp_loss(params, x_val, y_val);
      run.validation_history.push_back(val);
      run.epochs = epoch + 1;
      const bool halt = stop.update(val);
      if (stop.improved()) {
        run.params = params;
        run.validation_loss = val;
      }
      if (halt || !std::isfinite(val)) break;
    }
    if (run.params.weights.empty()) run.params = params;
    if (r == 0 || run.validation_loss < best.validation_loss) best = std::move(run);
  }
  return best;
}

DnnPredictor::DnnPredictor(MlpParams params, ParameterBox box, TimeGrid time, Vector initial)
    : params_(std::move(params)), box_(std::move(box)), time_(time), initial_(std::move(initial)) {
  params_.validate();
  if (params_.weights.front().cols() != box_.dim() + 1) throw InvalidArgument("network input must be (mu, t)");
  if (params_.weights.back().rows() != initial_.size()) throw InvalidArgument("network output must match the reduced basis");
}

Matrix DnnPredictor::inputs(const Parameter& mu) const {
  const Index p = box_.dim(), steps = time_.size();
  Matrix in(steps, p + 1);
  in.leftCols(p).rowwise() = (2.0 * box_.to_unit(mu).array() - 1.0).matrix().transpose();
  for (Index k = 0; k < steps; ++k) in(k, p) = 2.0 * time_.node(k) / time_.t_end() - 1.0;
  return in;
}

Trajectory DnnPredictor::predict(const Parameter& mu) const {
  box_.check(mu);
  Matrix coeffs = mlp_forward_batch(params_, inputs(mu));
  if (coeffs.cols() > 0) coeffs.row(0) = initial_.transpose();
  return Trajectory(time_, std::move(coeffs));
}

DnnGenerator::DnnGenerator(std::shared_ptr<const RbRom> rom, Options options)
    : MlGenerator(std::move(rom)), options_(std::move(options)) {
  options_.train.validate();
  for (Index h : options_.hidden)
    if (h < 1) throw InvalidArgument("layer sizes must be positive");
}

MlpArchitecture DnnGenerator::architecture() const {
  MlpArchitecture a;
  a.sizes.push_back(rom().problem().box.dim() + 1);
  a.sizes.insert(a.sizes.end(), options_.hidden.begin(), options_.hidden.end());
  a.sizes.push_back(rom().dim());
  return a;
}

std::shared_ptr<const DnnPredictor> DnnGenerator::predictor() const {
  if (!has_params()) throw InvalidArgument("ML model is not trained");
  return std::make_shared<DnnPredictor>(params_, rom().problem().box, rom().time(), rom().reduced_initial());
}

std::shared_ptr<const ReducedStatePredictor> DnnGenerator::fit(bool /*appended_only*/) {
  const MlpArchitecture arch = architecture();
  if (arch.output_dim() < 1) throw InvalidArgument("reduced basis is empty");
  const auto& s = samples();
  const Index steps = rom().time().size(), p = rom().problem().box.dim();
  Matrix x(static_cast<Index>(s.size()) * steps, p + 1), y(x.rows(), arch.output_dim());
  const DnnPredictor scaler(MlpParams::zeros(arch), rom().problem().box, rom().time(), rom().reduced_initial());
  for (std::size_t i = 0; i < s.size(); ++i) {
    x.middleRows(static_cast<Index>(i) * steps, steps) = scaler.inputs(s[i].mu);
    y.middleRows(static_cast<Index>(i) * steps, steps) = s[i].coeffs;
  }
  TrainConfig cfg = options_.train;
  cfg.seed += fits_++;
  last_ = mlp_train(x, y, arch, cfg, has_params() ? &params_ : nullptr);
  params_ = last_.params;
  return predictor();
}

void DnnGenerator::on_prolong(Index old_dim, Index new_dim) {
  if (!has_params()) return;
  Matrix& w = params_.weights.back();
  Vector& b = params_.biases.back();
  Matrix w2 = Matrix::Zero(new_dim, w.cols());
  Vector b2 = Vector::Zero(new_dim);
  w2.topRows(old_dim) = w;
  b2.head(old_dim) = b;
  w = std::move(w2);
  b = std::move(b2);
}

}  // namespace certrom
