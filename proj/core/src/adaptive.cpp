#include "certrom/adaptive.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace certrom {

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string tier_name(Tier tier) {
  switch (tier) {
    case Tier::ml: return "ml";
    case Tier::rb: return "rb";
    case Tier::fom_enriched: return "fom_enriched";
    case Tier::fom: return "fom";
  }
  return "unknown";
}

AdaptiveModel::AdaptiveModel(std::shared_ptr<const FomProblem> problem, MlGeneratorFactory ml_factory,
                             AdaptiveOptions options)
    : problem_(std::move(problem)), options_(options) {
  if (!problem_) throw InvalidArgument("adaptive model needs a problem");
  if (!(options_.eps >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
  if (!ml_factory) throw InvalidArgument("adaptive model needs an ML generator");
  rb_gen_ = std::make_unique<RbGenerator>(problem_, options_.eps, options_.hapod);
  // a nonzero initial datum must be representable for the estimator to apply
  if (!problem_->initial.isZero(0.0)) rb_gen_->append_vectors(problem_->initial);
  rom_ = std::make_shared<const RbRom>(rb_gen_->precompute());
  ml_gen_ = ml_factory(rom_);
  if (!ml_gen_) throw InvalidArgument("adaptive model needs an ML generator");
}

void AdaptiveModel::refit_ml(EvalRecord& rec) {
  const bool due = options_.policy == RetrainPolicy::per_extend || ml_gen_->pending() >= options_.batch_threshold;
  if (!due) return;
  Stopwatch w;
  ml_ = ml_gen_->precompute();
  rec.times.ml_build += w.seconds();
  rec.ml_retrained = true;
}

void AdaptiveModel::enrich(const Parameter& mu, EvalRecord& rec) {
  Stopwatch w;
  rb_gen_->extend(mu);
  rec.times.fom_solve += w.seconds();
  ++fom_solves_;
  Stopwatch b;
  rom_ = std::make_shared<const RbRom>(rb_gen_->precompute());
  rec.times.rb_build += b.seconds();
  Stopwatch m;
  ml_gen_->prolong(rom_);
  ml_ = ml_gen_->current();
  rec.times.ml_build += m.seconds();
}

OutputSignal AdaptiveModel::eval_output(const Parameter& mu) {
  problem_->box.check(mu);
  EvalRecord rec;
  rec.mu = mu;
  rec.eps = options_.eps;
  rec.delta_ml = kInf;
  rec.delta_rb = kNaN;
  auto finish = [&](Tier tier) {
    rec.tier = tier;
    rec.basis_dim = rom_->dim();
    rec.ml_size = ml_.trained() ? ml_gen_->model_size() : 0;
    records_.push_back(rec);
  };

  if (reference_mode()) {
    Stopwatch w;
    OutputSignal out = Fom(problem_).eval_output(mu);
    rec.times.fom_solve = w.seconds();
    ++fom_solves_;
    finish(Tier::fom);
    return out;
  }

  if (ml_.trained()) {
    Stopwatch w;
    Trajectory s = ml_.eval_state(mu);
    rec.times.ml_eval = w.seconds();
    Stopwatch e;
    rec.delta_ml = ml_.est_output(s, mu);
    rec.times.ml_est = e.seconds();
    if (rec.delta_ml <= options_.eps) {
      OutputSignal out = ml_.output(s);
      finish(Tier::ml);
      return out;
    }
  }

  {
    Stopwatch w;
    Trajectory r = rom_->eval_state(mu);
    rec.times.rb_eval = w.seconds();
    Stopwatch e;
    rec.delta_rb = rom_->est_output(r, mu);
    rec.times.rb_est = e.seconds();
    if (rec.delta_rb <= options_.eps) {
      ml_gen_->extend(mu, r);
      refit_ml(rec);
      OutputSignal out = rom_->output(r);
      finish(Tier::rb);
      return out;
    }
  }

  enrich(mu, rec);
  Stopwatch w;
  Trajectory r = rom_->eval_state(mu);
  rec.times.rb_eval += w.seconds();
  Stopwatch e;
  const double delta = rom_->est_output(r, mu);
  rec.times.rb_est += e.seconds();
  if (!(delta <= options_.eps)) throw NumericalError("enrichment failed");
  ml_gen_->extend(mu, r);
  refit_ml(rec);
  OutputSignal out = rom_->output(r);
  finish(Tier::fom_enriched);
  return out;
}

Trajectory AdaptiveModel::eval_state(const Parameter& mu) {
  problem_->box.check(mu);
  EvalRecord rec;
  rec.mu = mu;
  rec.eps = options_.eps;
  rec.delta_ml = kInf;
  rec.delta_rb = kNaN;
  auto finish = [&](Tier tier) {
    rec.tier = tier;
    rec.basis_dim = rom_->dim();
    rec.ml_size = ml_.trained() ? ml_gen_->model_size() : 0;
    records_.push_back(rec);
  };

  if (reference_mode()) {
    Stopwatch w;
    Trajectory u = Fom(problem_).eval_state(mu);
    rec.times.fom_solve = w.seconds();
    ++fom_solves_;
    finish(Tier::fom);
    return u;
  }

  if (ml_.trained()) {
    Stopwatch w;
    Trajectory s = ml_.eval_state(mu);
    rec.times.ml_eval = w.seconds();
    Stopwatch e;
    rec.delta_ml = ml_.rom().est_state(s, mu);
    rec.times.ml_est = e.seconds();
    if (rec.delta_ml <= options_.eps) {
      Trajectory u = ml_.rom().reconstruct(s);
      finish(Tier::ml);
      return u;
    }
  }

  {
    Stopwatch w;
    Trajectory r = rom_->eval_state(mu);
    rec.times.rb_eval = w.seconds();
    Stopwatch e;
    rec.delta_rb = rom_->est_state(r, mu);
    rec.times.rb_est = e.seconds();
    if (rec.delta_rb <= options_.eps) {
      ml_gen_->extend(mu, r);
      refit_ml(rec);
      Trajectory u = rom_->reconstruct(r);
      finish(Tier::rb);
      return u;
    }
  }

  enrich(mu, rec);
  Stopwatch w;
  Trajectory r = rom_->eval_state(mu);
  rec.times.rb_eval += w.seconds();
  Stopwatch e;
  const double delta = rom_->est_state(r, mu);
  rec.times.rb_est += e.seconds();
  if (!(delta <= options_.eps)) throw NumericalError("enrichment failed");
  ml_gen_->extend(mu, r);
  refit_ml(rec);
  Trajectory u = rom_->reconstruct(r);
  finish(Tier::fom_enriched);
  return u;
}

void AdaptiveModel::apply_tolerance_drop(double new_eps) {
  if (!(new_eps < options_.eps) || !(new_eps >= 0.0)) throw InvalidArgument("tolerance can only be lowered");
  options_.eps = new_eps;
  rb_gen_->set_tolerance(new_eps);
  if (reference_mode()) return;
  const RbRom& rom = *rom_;
  ml_gen_->retain([&](const MlGenerator::Sample& s) {
    return rom.est_output(Trajectory(rom.time(), s.coeffs), s.mu) <= new_eps;
  });
  ml_ = ml_gen_->sample_count() > 0 ? ml_gen_->precompute() : MlRom();
}

void AdaptiveModel::annotate_last(double value) {
  if (records_.empty()) throw InvalidArgument("no evaluation to annotate");
  records_.back().value = value;
}

void StagnationConfig::validate() const {
  if (n_av != 0 && n_av < 2) throw InvalidArgument("running-average width must be at least 2");
  if (n_stag < 0) throw InvalidArgument("stagnation count must be nonnegative");
  if (!(divisor > 1.0)) throw InvalidArgument("tolerance divisor must exceed 1");
  if (!(eps0 > 0.0)) throw InvalidArgument("initial tolerance must be positive");
}

StagnationController::StagnationController(StagnationConfig config, Index parameter_dim) : config_(config) {
  config_.validate();
  if (config_.n_av == 0) config_.n_av = std::max<Index>(2, 2 * parameter_dim);
  eps_ = config_.eps0;
  rate_ = kNaN;
}

double regression_slope(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  const double xm = (n - 1.0) / 2.0;
  double ym = 0.0;
  for (double v : values) ym += v;
  ym /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dx = static_cast<double>(i) - xm;
    num += dx * (values[i] - ym);
    den += dx * dx;
  }
  return num / den;
}

std::optional<double> StagnationController::update(const std::vector<double>& history) {
  if (history.empty()) throw InvalidArgument("empty objective history");
  const auto w = static_cast<std::size_t>(config_.n_av);
  rate_ = kNaN;
  // the averaged series needs w values, its regression window another w - 1
  if (history.size() < 2 * w - 1) return std::nullopt;
  std::vector<double> averaged;
  for (std::size_t end = history.size() - w + 1; end <= history.size(); ++end) {
    double s = 0.0;
    for (std::size_t i = end - w; i < end; ++i) s += history[i];
    averaged.push_back(s / static_cast<double>(w));
  }
  rate_ = -regression_slope(averaged);
  const double scale = history.back() / history.front();
  const bool slow = rate_ < config_.eps_slope || (scale > 0.0 && rate_ / scale < config_.eps_slope_rel);
  counter_ = slow ? counter_ + 1 : 0;
  if (counter_ > config_.n_stag) {
    counter_ = 0;
    eps_ /= config_.divisor;
    return eps_;
  }
  return std::nullopt;
}

}  // namespace certrom
