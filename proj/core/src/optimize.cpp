#include "certrom/optimize.hpp"

#include "certrom/time_norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace certrom {

void NelderMeadConfig::validate() const {
  if (initial.size() == 0) throw InvalidArgument("Nelder-Mead needs an initial point");
  if (!(scale > 0.0)) throw InvalidArgument("initial simplex scale must be positive");
  if (!(reflection > 0.0) || !(expansion > 1.0) || !(expansion > reflection) || !(contraction > 0.0 && contraction < 1.0) ||
      !(shrink > 0.0 && shrink < 1.0))
    throw InvalidArgument("invalid Nelder-Mead coefficients");
  if (!(xtol > 0.0) || !(ftol > 0.0)) throw InvalidArgument("Nelder-Mead tolerances must be positive");
  if (max_evals < 1) throw InvalidArgument("evaluation budget must be positive");
  if (box && box->dim() != initial.size()) throw InvalidArgument("initial point does not match the box");
}

OptimizeReport nelder_mead(const Objective& objective, const NelderMeadConfig& cfg,
                           const std::function<bool()>& invalidated) {
  cfg.validate();
  const Index n = cfg.initial.size();
  OptimizeReport rep;
  auto clip = [&](Vector x) { return cfg.box ? cfg.box->clip(x) : x; };
  auto eval = [&](const Vector& x) {
    const double f = objective(x);
    rep.points.push_back(x);
    rep.values.push_back(f);
    ++rep.evaluations;
    return f;
  };

  std::vector<Vector> sim(static_cast<std::size_t>(n + 1));
  std::vector<double> fs(sim.size());
  sim[0] = clip(cfg.initial);
  for (Index i = 0; i < n; ++i) {
    Vector x = sim[0];
    double step;
    if (cfg.box) {
      step = cfg.scale * (cfg.box->upper()[i] - cfg.box->lower()[i]);
      // step inward if the start sits on the upper face
      if (x[i] + step > cfg.box->upper()[i]) step = -step;
    } else {
      step = x[i] != 0.0 ? cfg.scale * x[i] : 0.00025;
    }
    x[i] += step;
    sim[static_cast<std::size_t>(i + 1)] = clip(x);
  }
  for (std::size_t i = 0; i < sim.size() && rep.evaluations < cfg.max_evals; ++i) fs[i] = eval(sim[i]);

  std::vector<std::size_t> order(sim.size());
  std::size_t refresh_start = 0;
  bool invalidated_pending = false;
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<Vector> s2;
    std::vector<double> f2;
    for (auto i : order) s2.push_back(sim[i]), f2.push_back(fs[i]);
    sim = std::move(s2);
    fs = std::move(f2);
  };
  auto converged = [&] {
    double xs = 0.0, fsp = 0.0;
    for (std::size_t i = 1; i < sim.size(); ++i) {
      xs = std::max(xs, (sim[i] - sim[0]).cwiseAbs().maxCoeff());
      fsp = std::max(fsp, std::abs(fs[i] - fs[0]));
    }
    return xs <= cfg.xtol && fsp <= cfg.ftol;
  };

  if (rep.evaluations == static_cast<Index>(sim.size())) {
    sort_simplex();
    const std::size_t last = sim.size() - 1;
    while (rep.evaluations < cfg.max_evals) {
      if (invalidated && invalidated()) {
        // stored values came from another objective; keep the geometry, refresh the values
        refresh_start = rep.values.size();
        std::size_t i = 0;
        for (; i < sim.size() && rep.evaluations < cfg.max_evals; ++i) fs[i] = eval(sim[i]);
        if (i < sim.size()) {
          invalidated_pending = true;
          break;
        }
        sort_simplex();
        continue;
      }
      if (converged()) {
        rep.converged = true;
        break;
      }
      Vector centroid = Vector::Zero(n);
      for (std::size_t i = 0; i < last; ++i) centroid += sim[i];
      centroid /= static_cast<double>(n);

      const Vector xr = clip(centroid + cfg.reflection * (centroid - sim[last]));
      const double fr = eval(xr);
      bool do_shrink = false;
      if (fr < fs[0]) {
        if (rep.evaluations >= cfg.max_evals) {
          sim[last] = xr, fs[last] = fr;
        } else {
          const Vector xe = clip(centroid + cfg.expansion * (centroid - sim[last]));
          const double fe = eval(xe);
          if (fe < fr)
            sim[last] = xe, fs[last] = fe;
          else
            sim[last] = xr, fs[last] = fr;
        }
      } else if (fr < fs[last - 1]) {
        sim[last] = xr, fs[last] = fr;
      } else if (rep.evaluations < cfg.max_evals) {
        if (fr < fs[last]) {
          const Vector xc = clip(centroid + cfg.contraction * (xr - centroid));
          const double fc = eval(xc);
          if (fc <= fr)
            sim[last] = xc, fs[last] = fc;
          else
            do_shrink = true;
        } else {
          const Vector xcc = clip(centroid - cfg.contraction * (centroid - sim[last]));
          const double fcc = eval(xcc);
          if (fcc < fs[last])
            sim[last] = xcc, fs[last] = fcc;
          else
            do_shrink = true;
        }
      }
      if (do_shrink) {
        for (std::size_t i = 1; i < sim.size() && rep.evaluations < cfg.max_evals; ++i) {
          sim[i] = clip(sim[0] + cfg.shrink * (sim[i] - sim[0]));
          fs[i] = eval(sim[i]);
        }
      }
      sort_simplex();
    }
    if (!rep.converged) rep.converged = converged();
  }

  if (rep.evaluations >= static_cast<Index>(sim.size()) && !invalidated_pending) {
    rep.x = sim[0];
    rep.value = fs[0];
  } else {
    // budget ran out while (re)building the simplex: best value of the current objective run
    const auto best = std::min_element(rep.values.begin() + static_cast<std::ptrdiff_t>(refresh_start), rep.values.end()) -
                      rep.values.begin();
    rep.x = rep.points[static_cast<std::size_t>(best)];
    rep.value = rep.values[static_cast<std::size_t>(best)];
  }
  return rep;
}

OptimizeReport optimize_misfit(AdaptiveModel& model, const OutputSignal& reference, NelderMeadConfig cfg,
                               std::optional<StagnationConfig> stagnation) {
  if (reference.values.size() != model.problem().time.size())
    throw InvalidArgument("reference output does not match the time grid");
  cfg.box = model.problem().box;
  const std::size_t first_record = model.records().size();
  std::optional<StagnationController> controller;
  if (stagnation) {
    if (model.reference_mode()) throw InvalidArgument("tolerance adaptation needs a positive tolerance");
    stagnation->eps0 = model.tolerance();
    controller.emplace(*stagnation, model.problem().box.dim());
  }
  std::vector<double> history;
  std::vector<ToleranceEvent> events;
  bool dropped = false;

  auto objective = [&](const Vector& x) {
    OutputSignal f = model.eval_output(Parameter(x));
    const double j = linf_time_norm(reference - f);
    model.annotate_last(j);
    history.push_back(j);
    if (controller) {
      const double before = model.tolerance();
      if (auto eps = controller->update(history)) {
        model.apply_tolerance_drop(*eps);
        events.push_back({static_cast<Index>(history.size()), before, *eps});
        dropped = true;
      }
    }
    return j;
  };
  OptimizeReport rep = nelder_mead(objective, cfg, [&] { return std::exchange(dropped, false); });
  rep.records.assign(model.records().begin() + static_cast<std::ptrdiff_t>(first_record), model.records().end());
  rep.events = std::move(events);
  return rep;
}

double relative_error(const Vector& estimate, const Vector& truth) {
  return (estimate - truth).norm() / truth.norm();
}

}  // namespace certrom
