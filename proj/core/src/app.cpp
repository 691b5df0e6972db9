#include "certrom/app.hpp"

#include "certrom/time_norms.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

namespace certrom {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// JSON has no inf/nan; those become strings.
json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

json jvec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void write_json(const json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: '" + path + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

json tiers_json(const TierCounts& t) {
  json counts, fractions;
  for (Tier tier : {Tier::ml, Tier::rb, Tier::fom_enriched, Tier::fom}) {
    counts[tier_name(tier)] = t.of(tier);
    fractions[tier_name(tier)] = t.fraction(tier);
  }
  return {{"counts", counts}, {"fractions", fractions}};
}

json events_json(const std::vector<ToleranceEvent>& events) {
  json a = json::array();
  for (const auto& e : events) a.push_back({{"evaluation", e.evaluation}, {"old_eps", e.old_eps}, {"new_eps", e.new_eps}});
  return a;
}

std::pair<double, double> mc_window(const RunConfig& cfg, const FomProblem& problem) {
  if (cfg.mc.window) return *cfg.mc.window;
  if (cfg.problem == ProblemKind::building) return {cfg.building.window_begin, cfg.building.window_end};
  return {0.0, problem.time.t_end()};
}

}  // namespace

void RunningMoments::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningMoments::variance() const { return n_ < 2 ? kNaN : m2_ / static_cast<double>(n_ - 1); }

Index TierCounts::total() const {
  Index s = 0;
  for (Index c : counts) s += c;
  return s;
}

double TierCounts::fraction(Tier tier) const {
  const Index n = total();
  return n == 0 ? 0.0 : static_cast<double>(of(tier)) / static_cast<double>(n);
}

TierCounts count_tiers(const std::vector<EvalRecord>& records, std::size_t first, std::size_t last) {
  TierCounts t;
  for (std::size_t i = first; i < last && i < records.size(); ++i) ++t.counts[static_cast<std::size_t>(records[i].tier)];
  return t;
}

std::vector<TrainingWindow> training_windows(const std::vector<EvalRecord>& records) {
  std::vector<TrainingWindow> out;
  std::size_t first = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].ml_retrained || i + 1 == records.size()) {
      out.push_back({first, i + 1, count_tiers(records, first, i + 1)});
      first = i + 1;
    }
  }
  return out;
}

std::vector<Parameter> uniform_samples(const ParameterBox& box, Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Parameter> out;
  out.reserve(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (Index i = 0; i < count; ++i) {
    Vector u(box.dim());
    for (Index j = 0; j < u.size(); ++j) u[j] = unit(rng);
    out.push_back(box.from_unit(u));
  }
  return out;
}

McReport monte_carlo(AdaptiveModel& model, Index n_mc, std::pair<double, double> window, std::uint64_t seed) {
  if (n_mc < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");
  McReport rep;
  rep.n_mc = n_mc;
  rep.window = window;
  rep.seed = seed;
  const std::size_t first = model.records().size();
  RunningMoments moments;
  for (const auto& mu : uniform_samples(model.problem().box, n_mc, seed)) {
    const double avg = time_average(model.eval_output(mu), window);
    model.annotate_last(avg);
    moments.add(avg);
    rep.values.push_back(avg);
  }
  rep.mean = moments.mean();
  rep.variance = moments.variance();
  rep.records.assign(model.records().begin() + static_cast<std::ptrdiff_t>(first), model.records().end());
  rep.windows = training_windows(rep.records);
  if (!std::isfinite(rep.mean) || !std::isfinite(rep.variance)) throw NumericalError("non-finite Monte Carlo estimate");
  return rep;
}

std::string telemetry_header(Index parameter_dim) {
  std::string h = "index";
  for (Index j = 0; j < parameter_dim; ++j) h += ",mu_" + std::to_string(j);
  h += ",tier,delta_ml,delta_rb,eps,t_ml_est,t_ml_eval,t_rb_est,t_rb_eval,t_fom,t_rb_build,t_ml_build,basis_dim,ml_size,"
       "value";
  return h;
}

void export_telemetry(const std::vector<EvalRecord>& records, const std::vector<ToleranceEvent>& events,
                      Index parameter_dim, const std::string& dir) {
  auto csv = open_out(join(dir, "evals.csv"));
  csv << telemetry_header(parameter_dim) << '\n';
  PhaseTimes total;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.mu.size() != parameter_dim) throw InvalidArgument("record parameter has the wrong dimension");
    csv << i;
    for (Index j = 0; j < parameter_dim; ++j) csv << ',' << num(r.mu[j]);
    const auto& t = r.times;
    csv << ',' << tier_name(r.tier) << ',' << num(r.delta_ml) << ',' << num(r.delta_rb) << ',' << num(r.eps) << ','
        << num(t.ml_est) << ',' << num(t.ml_eval) << ',' << num(t.rb_est) << ',' << num(t.rb_eval) << ','
        << num(t.fom_solve) << ',' << num(t.rb_build) << ',' << num(t.ml_build) << ',' << r.basis_dim << ','
        << r.ml_size << ',' << num(r.value) << '\n';
    total.ml_est += t.ml_est;
    total.ml_eval += t.ml_eval;
    total.rb_est += t.rb_est;
    total.rb_eval += t.rb_eval;
    total.fom_solve += t.fom_solve;
    total.rb_build += t.rb_build;
    total.ml_build += t.ml_build;
  }
  if (!csv) throw Error("write failed: evals.csv");

  json summary;
  summary["evaluations"] = records.size();
  summary["tiers"] = tiers_json(count_tiers(records, 0, records.size()));
  summary["times"] = {{"ml_est", total.ml_est},       {"ml_eval", total.ml_eval},   {"rb_est", total.rb_est},
                      {"rb_eval", total.rb_eval},     {"fom", total.fom_solve},     {"rb_build", total.rb_build},
                      {"ml_build", total.ml_build},   {"total", total.total()}};
  summary["tolerance_events"] = events_json(events);
  json windows = json::array();
  for (const auto& w : training_windows(records))
    windows.push_back({{"first", w.first}, {"last", w.last}, {"tiers", tiers_json(w.tiers)}});
  summary["training_windows"] = windows;
  write_json(summary, join(dir, "summary.json"));
}

GreedyReport greedy_train(RbGenerator& generator, const std::vector<Parameter>& training, double eps,
                          Index max_extensions) {
  if (training.empty()) throw InvalidArgument("greedy training needs a nonempty training set");
  if (!(eps > 0.0)) throw InvalidArgument("greedy tolerance must be positive");
  GreedyReport rep;
  for (Index step = 0;; ++step) {
    const RbRom rom = generator.precompute();
    double worst = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    if (rom.initial_in_space()) {
      worst = -1.0;
      for (std::size_t i = 0; i < training.size(); ++i) {
        const double est = rom.est_output(training[i]);
        if (est > worst) worst = est, arg = i;
      }
    }
    rep.max_estimates.push_back(worst);
    if (worst <= eps) {
      rep.converged = true;
      break;
    }
    if (step >= max_extensions) break;
    generator.extend(training[arg]);
    rep.selected.push_back(training[arg]);
  }
  return rep;
}

std::vector<EffectivityRow> effectivity_study(const RbRom& rom, const std::vector<Parameter>& samples) {
  const FomProblem& p = rom.problem();
  Fom fom(rom.data().problem);
  std::vector<EffectivityRow> rows;
  for (const auto& mu : samples) {
    const Trajectory fine = fom.eval_state(mu);
    const Trajectory red = rom.eval_state(mu);
    const Trajectory coarse = rom.reconstruct(red);
    double sq = 0.0;
    for (Index k = 1; k < fine.grid.size(); ++k) {
      const Vector e = (fine.coeffs.row(k) - coarse.coeffs.row(k)).transpose();
      sq += fine.grid.dt() * e.dot(p.energy * e);
    }
    rows.push_back({mu, l2_time_norm(fom.output(fine) - rom.output(red)), rom.est_output(red, mu), std::sqrt(sq),
                    rom.est_state(red, mu)});
  }
  return rows;
}

void write_output_csv(const OutputSignal& signal, const std::string& path) {
  auto out = open_out(path);
  out << "t,value\n";
  for (Index k = 0; k < signal.values.size(); ++k) out << num(signal.grid.node(k)) << ',' << num(signal.values[k]) << '\n';
  if (!out) throw Error("write failed: '" + path + "'");
}

void write_effectivity_csv(const std::vector<EffectivityRow>& rows, const std::string& path) {
  auto out = open_out(path);
  const Index dim = rows.empty() ? 0 : rows.front().mu.size();
  out << "index";
  for (Index j = 0; j < dim; ++j) out << ",mu_" << j;
  out << ",output_error,output_estimate,output_effectivity,state_error,state_estimate,state_effectivity\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << i;
    for (Index j = 0; j < dim; ++j) out << ',' << num(r.mu[j]);
    out << ',' << num(r.output_error) << ',' << num(r.output_estimate) << ',' << num(r.output_estimate / r.output_error)
        << ',' << num(r.state_error) << ',' << num(r.state_estimate) << ',' << num(r.state_estimate / r.state_error)
        << '\n';
  }
  if (!out) throw Error("write failed: '" + path + "'");
}

SolveResult run_solve(const RunConfig& cfg, const Parameter& mu, bool adaptive) {
  auto problem = build_problem(cfg);
  problem->box.check(mu);
  SolveResult res;
  if (adaptive) {
    AdaptiveModel model(problem, make_ml_factory(cfg.adaptive, cfg.seed),
                        make_adaptive_options(cfg.adaptive, cfg.adaptive.eps, RetrainPolicy::batch));
    res.output = model.eval_output(mu);
    res.bound = model.tolerance();
    res.tier = tier_name(model.records().back().tier);
  } else {
    res.output = Fom(problem).eval_output(mu);
    res.bound = kNaN;
    res.tier = "fom";
  }
  write_output_csv(res.output, join(cfg.out, "output.csv"));
  return res;
}

Vector default_initial(const RunConfig& cfg, const ParameterBox& box) {
  if (cfg.problem == ProblemKind::reactive_flow) {
    Vector x{{2.0, 10.5}};
    if (box.dim() == 2 && box.contains(Parameter(x))) return x;
  }
  return box.from_unit(Vector::Constant(box.dim(), 0.25)).values();
}

OptimizeReport run_optimize(const RunConfig& cfg) {
  auto problem = build_problem(cfg);
  const ParameterBox& box = problem->box;
  const Parameter target = cfg.optimize.target ? Parameter(*cfg.optimize.target) : box.center();
  box.check(target);
  const OutputSignal reference = Fom(problem).eval_output(target);
  const auto& st = cfg.adaptive.stagnation;
  const double eps = st ? l2_time_norm(reference) : cfg.adaptive.eps;
  AdaptiveModel model(problem, make_ml_factory(cfg.adaptive, cfg.seed),
                      make_adaptive_options(cfg.adaptive, eps, RetrainPolicy::per_extend));

  NelderMeadConfig nm;
  nm.initial = cfg.optimize.initial ? *cfg.optimize.initial : default_initial(cfg, box);
  if (nm.initial.size() != box.dim()) throw InvalidArgument("config /optimize/initial: wrong dimension");
  nm.scale = cfg.optimize.scale;
  nm.xtol = cfg.optimize.xtol;
  nm.ftol = cfg.optimize.ftol;
  nm.max_evals = cfg.optimize.max_evals;
  OptimizeReport rep = optimize_misfit(model, reference, nm, st);

  export_telemetry(rep.records, rep.events, box.dim(), cfg.out);
  json j = {{"problem", problem_name(cfg.problem)},
            {"target", jvec(target.values())},
            {"initial", jvec(nm.initial)},
            {"x", jvec(rep.x)},
            {"value", rep.value},
            {"evaluations", rep.evaluations},
            {"converged", rep.converged},
            {"relative_minimizer_error", relative_error(rep.x, target.values())},
            {"eps_initial", eps},
            {"eps_final", model.tolerance()},
            {"fom_solves", model.fom_solves()},
            {"ml_backend", backend_name(cfg.adaptive.backend)},
            {"tolerance_events", events_json(rep.events)}};
  write_json(j, join(cfg.out, "report.json"));
  return rep;
}

McReport run_mc(const RunConfig& cfg) {
  auto problem = build_problem(cfg);
  const auto window = mc_window(cfg, *problem);
  AdaptiveModel model(problem, make_ml_factory(cfg.adaptive, cfg.seed),
                      make_adaptive_options(cfg.adaptive, cfg.adaptive.eps, RetrainPolicy::batch));
  McReport rep = monte_carlo(model, cfg.mc.samples, window, cfg.seed);
  export_telemetry(rep.records, {}, problem->box.dim(), cfg.out);

  json windows = json::array();
  for (const auto& w : rep.windows) windows.push_back({{"first", w.first}, {"last", w.last}, {"tiers", tiers_json(w.tiers)}});
  json j = {{"problem", problem_name(cfg.problem)},
            {"n_mc", rep.n_mc},
            {"mean", rep.mean},
            {"variance", rep.variance},
            {"window", {window.first, window.second}},
            {"seed", rep.seed},
            {"eps", model.tolerance()},
            {"fom_solves", model.fom_solves()},
            {"ml_backend", backend_name(cfg.adaptive.backend)},
            {"tiers", tiers_json(count_tiers(rep.records, 0, rep.records.size()))},
            {"training_windows", windows}};
  if (cfg.mc.fom_reference) {
    AdaptiveModel fom_model(problem, make_ml_factory(cfg.adaptive, cfg.seed),
                            make_adaptive_options(cfg.adaptive, 0.0, RetrainPolicy::batch));
    McReport ref = monte_carlo(fom_model, cfg.mc.samples, window, cfg.seed);
    j["fom_reference"] = {{"mean", ref.mean}, {"variance", ref.variance}, {"mean_difference", rep.mean - ref.mean}};
  }
  write_json(j, join(cfg.out, "mc.json"));
  return rep;
}

std::vector<EffectivityRow> run_validate(const RunConfig& cfg) {
  auto problem = build_problem(cfg);
  RbGenerator generator(problem, cfg.adaptive.eps, cfg.adaptive.hapod);
  const auto training = uniform_samples(problem->box, cfg.validate.training, cfg.seed);
  const GreedyReport greedy = greedy_train(generator, training, cfg.adaptive.eps, cfg.validate.training);
  const RbRom rom = generator.precompute();
  const auto rows = effectivity_study(rom, uniform_samples(problem->box, cfg.validate.samples, cfg.seed + 1));
  write_effectivity_csv(rows, join(cfg.out, "effectivity.csv"));

  json est = json::array();
  for (double e : greedy.max_estimates) est.push_back(jnum(e));
  bool all_bounded = true;
  for (const auto& r : rows) all_bounded &= r.output_estimate >= r.output_error && r.state_estimate >= r.state_error;
  write_json({{"problem", problem_name(cfg.problem)},
              {"basis_dim", rom.dim()},
              {"greedy_extensions", greedy.selected.size()},
              {"greedy_max_estimates", est},
              {"greedy_converged", greedy.converged},
              {"samples", rows.size()},
              {"all_bounded", all_bounded}},
             join(cfg.out, "validate.json"));
  return rows;
}

}  // namespace certrom
