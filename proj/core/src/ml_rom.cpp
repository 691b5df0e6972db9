#include "certrom/ml_rom.hpp"

#include <algorithm>
#include <limits>

namespace certrom {

MlRom::MlRom(std::shared_ptr<const RbRom> rom, std::shared_ptr<const ReducedStatePredictor> predictor)
    : rom_(std::move(rom)), predictor_(std::move(predictor)) {}

Trajectory MlRom::eval_state(const Parameter& mu) const {
  if (!trained()) throw InvalidArgument("ML model is not trained");
  return predictor_->predict(mu);
}

OutputSignal MlRom::output(const Trajectory& state) const {
  if (!rom_) throw InvalidArgument("ML model is not trained");
  return rom_->output(state);
}

double MlRom::est_output(const Parameter& mu) const {
  if (!trained()) return std::numeric_limits<double>::infinity();
  return est_output(eval_state(mu), mu);
}

double MlRom::est_output(const Trajectory& state, const Parameter& mu) const {
  if (!trained()) return std::numeric_limits<double>::infinity();
  return rom_->est_output(state, mu);
}

MlGenerator::MlGenerator(std::shared_ptr<const RbRom> rom) : rom_(std::move(rom)) {
  if (!rom_) throw InvalidArgument("ML generator needs a reduced model");
}

void MlGenerator::extend(const Parameter& mu, const Trajectory& rb_state) {
  if (rb_state.dim() != rom_->dim() || !(rb_state.grid == rom_->time()))
    throw InvalidArgument("sample trajectory does not match the reduced model");
  auto it = std::find_if(samples_.begin(), samples_.end(), [&](const Sample& s) { return s.mu == mu; });
  if (it != samples_.end()) {
    it->coeffs = rb_state.coeffs;
    appended_only_ = false;
  } else {
    samples_.push_back({mu, rb_state.coeffs});
  }
  ++pending_;
}

void MlGenerator::extend(const Parameter& mu) { extend(mu, rom_->eval_state(mu)); }

void MlGenerator::retain(const std::function<bool(const Sample&)>& keep) {
  auto end = std::remove_if(samples_.begin(), samples_.end(), [&](const Sample& s) { return !keep(s); });
  if (end == samples_.end()) return;
  samples_.erase(end, samples_.end());
  appended_only_ = false;
  ++pending_;
  if (samples_.empty()) {
    current_ = MlRom();
    fitted_ = false;
    pending_ = 0;
    on_reset();
  }
}

void MlGenerator::prolong(std::shared_ptr<const RbRom> rom) {
  if (!rom) throw InvalidArgument("ML generator needs a reduced model");
  const Index old_dim = rom_->dim(), new_dim = rom->dim();
  if (new_dim < old_dim) throw InvalidArgument("prolongation needs a larger reduced basis");
  const Matrix& a = rom_->basis();
  const Matrix& b = rom->basis();
  if (a.rows() != b.rows() || (old_dim > 0 && (b.leftCols(old_dim) - a).cwiseAbs().maxCoeff() > 0.0))
    throw InvalidArgument("reduced bases are not nested");
  if (!(rom->time() == rom_->time())) throw InvalidArgument("reduced models live on different time grids");
  rom_ = std::move(rom);
  if (new_dim == old_dim) return;
  for (auto& s : samples_) {
    Matrix padded = Matrix::Zero(s.coeffs.rows(), new_dim);
    padded.leftCols(old_dim) = s.coeffs;
    s.coeffs = std::move(padded);
  }
  on_prolong(old_dim, new_dim);
  appended_only_ = false;
  stale_ = true;
  if (current_.trained()) current_ = MlRom(rom_, std::make_shared<PaddedPredictor>(current_.predictor(), new_dim));
}

MlRom MlGenerator::precompute() {
  if (samples_.empty()) throw InvalidArgument("empty training set");
  if (fitted_ && pending_ == 0 && !stale_) return current_;
  current_ = MlRom(rom_, fit(fitted_ && appended_only_));
  fitted_ = true;
  stale_ = false;
  appended_only_ = true;
  pending_ = 0;
  return current_;
}

PaddedPredictor::PaddedPredictor(std::shared_ptr<const ReducedStatePredictor> inner, Index dim)
    : inner_(std::move(inner)), dim_(dim) {
  if (!inner_) throw InvalidArgument("padded predictor needs a predictor");
}

Trajectory PaddedPredictor::predict(const Parameter& mu) const {
  Trajectory t = inner_->predict(mu);
  if (t.dim() > dim_) throw InvalidArgument("padded predictor cannot shrink");
  Matrix c = Matrix::Zero(t.coeffs.rows(), dim_);
  c.leftCols(t.dim()) = t.coeffs;
  return Trajectory(t.grid, std::move(c));
}

Vector flatten_trajectory(const Matrix& coeffs) {
  Matrix t = coeffs.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

Matrix unflatten_trajectory(const Vector& flat, Index steps, Index dim) {
  if (flat.size() != steps * dim) throw InvalidArgument("flattened trajectory has the wrong length");
  return Eigen::Map<const Matrix>(flat.data(), dim, steps).transpose();
}

}  // namespace certrom
