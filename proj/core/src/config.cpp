#include "certrom/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace certrom {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& why) {
  throw InvalidArgument("config " + (ptr.empty() ? std::string("/") : ptr) + ": " + why);
}

double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

Index integer(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "expected an integer");
  return j.get<Index>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& ptr) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    fail(ptr, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

bool boolean(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) fail(ptr, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

Vector vector(const json& j, const std::string& ptr) {
  if (!j.is_array()) fail(ptr, "expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], ptr + "/" + std::to_string(i));
  return v;
}

std::pair<double, double> pair(const json& j, const std::string& ptr) {
  Vector v = vector(j, ptr);
  if (v.size() != 2) fail(ptr, "expected two numbers");
  return {v[0], v[1]};
}

/// Object reader that rejects unknown keys.
class Obj {
 public:
  Obj(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) fail(ptr_, "expected an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(ptr_ + "/" + key, "unknown key");
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }

  template <class F>
  void opt(const std::string& key, F&& f) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) f(*it, at(key));
  }
  void num(const std::string& key, double& out) {
    opt(key, [&](const json& v, const std::string& p) { out = number(v, p); });
  }
  void idx(const std::string& key, Index& out) {
    opt(key, [&](const json& v, const std::string& p) { out = integer(v, p); });
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

Rectangle rect(const json& j, const std::string& ptr) {
  Rectangle r;
  Obj o(j, ptr);
  o.num("x0", r.x0);
  o.num("x1", r.x1);
  o.num("y0", r.y0);
  o.num("y1", r.y1);
  return r;
}

std::vector<PlanRegion> regions(const json& j, const std::string& ptr, const std::string& prefix) {
  if (!j.is_array()) fail(ptr, "expected an array of regions");
  std::vector<PlanRegion> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = ptr + "/" + std::to_string(i);
    PlanRegion r{prefix + std::to_string(i), {}, {}};
    bool has_rect = false;
    Obj o(j[i], p);
    o.opt("name", [&](const json& v, const std::string& q) { r.name = string(v, q); });
    o.opt("rect", [&](const json& v, const std::string& q) { r.rect = rect(v, q), has_rect = true; });
    o.opt("fixed", [&](const json& v, const std::string& q) { r.fixed = number(v, q); });
    if (!has_rect) fail(p + "/rect", "missing");
    out.push_back(std::move(r));
  }
  return out;
}

void parse_heat(const json& j, const std::string& ptr, HeatConfig& c) {
  Obj o(j, ptr);
  o.idx("n", c.n);
  o.idx("steps", c.steps);
  o.num("t_end", c.t_end);
  o.opt("lower", [&](const json& v, const std::string& p) { c.lower = vector(v, p); });
  o.opt("upper", [&](const json& v, const std::string& p) { c.upper = vector(v, p); });
}

void parse_flow(const json& j, const std::string& ptr, ReactiveFlowConfig& c) {
  Obj o(j, ptr);
  o.idx("nx", c.nx);
  o.idx("ny", c.ny);
  o.idx("steps", c.steps);
  o.num("t_end", c.t_end);
  o.num("washcoat", c.washcoat);
  o.opt("lower", [&](const json& v, const std::string& p) { c.lower = vector(v, p); });
  o.opt("upper", [&](const json& v, const std::string& p) { c.upper = vector(v, p); });
  o.opt("mu_bar", [&](const json& v, const std::string& p) { c.mu_bar = Parameter(vector(v, p)); });
  o.opt("raster", [&](const json& v, const std::string& p) {
    Obj r(v, p);
    r.opt("path", [&](const json& w, const std::string& q) { c.raster_path = string(w, q); });
    r.opt("seed", [&](const json& w, const std::string& q) { c.raster_seed = unsigned_integer(w, q); });
    r.idx("nx", c.raster_nx);
    r.idx("ny", c.raster_ny);
    r.num("min", c.kappa_min);
    r.num("max", c.kappa_max);
  });
}

void parse_building(const json& j, const std::string& ptr, BuildingConfig& c) {
  Obj o(j, ptr);
  o.idx("nx", c.nx);
  o.idx("ny", c.ny);
  o.idx("steps", c.steps);
  o.num("t_end", c.t_end);
  o.num("background", c.background);
  o.opt("walls", [&](const json& v, const std::string& p) { c.walls = regions(v, p, "wall"); });
  o.opt("doors", [&](const json& v, const std::string& p) { c.doors = regions(v, p, "door"); });
  o.opt("heaters", [&](const json& v, const std::string& p) { c.heaters = regions(v, p, "heater"); });
  o.opt("room", [&](const json& v, const std::string& p) { c.room = rect(v, p); });
  auto range = [&](const std::string& key, Range& r) {
    o.opt(key, [&](const json& v, const std::string& p) {
      auto [lo, hi] = pair(v, p);
      r = {lo, hi};
    });
  };
  range("wall_range", c.wall_range);
  range("door_range", c.door_range);
  range("heater_range", c.heater_range);
  o.opt("window", [&](const json& v, const std::string& p) {
    std::tie(c.window_begin, c.window_end) = pair(v, p);
  });
}

void parse_adaptive(const json& j, const std::string& ptr, AdaptiveSettings& a) {
  Obj o(j, ptr);
  o.num("eps", a.eps);
  o.opt("stagnation", [&](const json& v, const std::string& p) {
    if (v.is_null()) return;
    StagnationConfig s;
    Obj so(v, p);
    so.idx("n_av", s.n_av);
    so.idx("n_stag", s.n_stag);
    so.num("eps_slope", s.eps_slope);
    so.num("eps_slope_rel", s.eps_slope_rel);
    so.num("divisor", s.divisor);
    a.stagnation = s;
  });
  o.opt("ml", [&](const json& v, const std::string& p) {
    const std::string b = string(v, p);
    if (b == "vkoga")
      a.backend = MlBackend::vkoga;
    else if (b == "mlp")
      a.backend = MlBackend::mlp;
    else
      fail(p, "expected \"vkoga\" or \"mlp\"");
  });
  o.opt("retrain", [&](const json& v, const std::string& p) {
    const std::string b = string(v, p);
    if (b == "per_extend")
      a.policy = RetrainPolicy::per_extend;
    else if (b == "batch")
      a.policy = RetrainPolicy::batch;
    else
      fail(p, "expected \"per_extend\" or \"batch\"");
  });
  o.opt("batch_threshold", [&](const json& v, const std::string& p) {
    const Index n = integer(v, p);
    if (n < 1) fail(p, "must be positive");
    a.batch_threshold = static_cast<std::size_t>(n);
  });
  o.opt("hapod", [&](const json& v, const std::string& p) {
    Obj h(v, p);
    h.num("eps_pod", a.hapod.eps_pod);
    h.idx("chunk", a.hapod.chunk);
    h.num("omega", a.hapod.omega);
  });
  o.opt("vkoga", [&](const json& v, const std::string& p) {
    Obj k(v, p);
    k.num("gamma", a.vkoga.gamma);
    k.num("lambda", a.vkoga.lambda);
    k.idx("max_centers", a.vkoga.max_centers);
    k.num("tolerance", a.vkoga.tolerance);
    k.num("power_floor", a.vkoga.power_floor);
  });
  o.opt("mlp", [&](const json& v, const std::string& p) {
    Obj m(v, p);
    m.opt("hidden", [&](const json& w, const std::string& q) {
      if (!w.is_array()) fail(q, "expected an array of layer widths");
      a.mlp.hidden.clear();
      for (std::size_t i = 0; i < w.size(); ++i) a.mlp.hidden.push_back(integer(w[i], q + "/" + std::to_string(i)));
    });
    auto& t = a.mlp.train;
    m.num("learning_rate", t.learning_rate);
    m.idx("batch_size", t.batch_size);
    m.idx("max_epochs", t.max_epochs);
    m.num("decay", t.decay);
    m.idx("decay_every", t.decay_every);
    m.idx("patience", t.patience);
    m.num("validation_fraction", t.validation_fraction);
    m.idx("restarts", t.restarts);
  });
}

void check(const std::string& ptr, const std::function<void()>& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    fail(ptr, e.what());
  }
}

json rect_json(const Rectangle& r) { return {{"x0", r.x0}, {"x1", r.x1}, {"y0", r.y0}, {"y1", r.y1}}; }

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json regions_json(const std::vector<PlanRegion>& rs) {
  json a = json::array();
  for (const auto& r : rs) {
    json o = {{"name", r.name}, {"rect", rect_json(r.rect)}};
    if (r.fixed) o["fixed"] = *r.fixed;
    a.push_back(o);
  }
  return a;
}

}  // namespace

std::string problem_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::heat: return "heat";
    case ProblemKind::reactive_flow: return "reactive_flow";
    case ProblemKind::building: return "building";
  }
  return "unknown";
}

std::string backend_name(MlBackend backend) { return backend == MlBackend::vkoga ? "vkoga" : "mlp"; }

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  {
    Obj o(root, "");
    o.opt("problem", [&](const json& v, const std::string& p) {
      const std::string name = string(v, p);
      if (name == "heat")
        c.problem = ProblemKind::heat;
      else if (name == "reactive_flow")
        c.problem = ProblemKind::reactive_flow;
      else if (name == "building")
        c.problem = ProblemKind::building;
      else
        fail(p, "expected \"heat\", \"reactive_flow\" or \"building\"");
    });
    o.opt("seed", [&](const json& v, const std::string& p) { c.seed = unsigned_integer(v, p); });
    o.opt("out", [&](const json& v, const std::string& p) { c.out = string(v, p); });
    o.opt("heat", [&](const json& v, const std::string& p) { parse_heat(v, p, c.heat); });
    o.opt("reactive_flow", [&](const json& v, const std::string& p) { parse_flow(v, p, c.reactive_flow); });
    o.opt("building", [&](const json& v, const std::string& p) { parse_building(v, p, c.building); });
    o.opt("adaptive", [&](const json& v, const std::string& p) { parse_adaptive(v, p, c.adaptive); });
    o.opt("optimize", [&](const json& v, const std::string& p) {
      Obj n(v, p);
      n.opt("initial", [&](const json& w, const std::string& q) { c.optimize.initial = vector(w, q); });
      n.opt("target", [&](const json& w, const std::string& q) { c.optimize.target = vector(w, q); });
      n.num("scale", c.optimize.scale);
      n.num("xtol", c.optimize.xtol);
      n.num("ftol", c.optimize.ftol);
      n.idx("max_evals", c.optimize.max_evals);
    });
    o.opt("mc", [&](const json& v, const std::string& p) {
      Obj m(v, p);
      m.idx("samples", c.mc.samples);
      m.opt("window", [&](const json& w, const std::string& q) { c.mc.window = pair(w, q); });
      m.opt("fom_reference", [&](const json& w, const std::string& q) { c.mc.fom_reference = boolean(w, q); });
    });
    o.opt("validate", [&](const json& v, const std::string& p) {
      Obj m(v, p);
      m.idx("training", c.validate.training);
      m.idx("samples", c.validate.samples);
    });
  }

  // semantic checks, reported against the owning section
  check("/heat", [&] { c.heat.validate(); });
  check("/reactive_flow", [&] { c.reactive_flow.validate(); });
  check("/building", [&] { c.building.validate(); });
  check("/adaptive/hapod", [&] { c.adaptive.hapod.validate(); });
  check("/adaptive/vkoga", [&] { c.adaptive.vkoga.validate(); });
  check("/adaptive/mlp", [&] { c.adaptive.mlp.train.validate(); });
  if (c.adaptive.stagnation) check("/adaptive/stagnation", [&] { c.adaptive.stagnation->validate(); });
  if (!(c.adaptive.eps >= 0.0)) fail("/adaptive/eps", "must be nonnegative");
  if (c.mc.samples < 2) fail("/mc/samples", "need at least 2 samples");
  if (c.validate.training < 1 || c.validate.samples < 1) fail("/validate", "counts must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_json(const RunConfig& c) {
  json j;
  j["problem"] = problem_name(c.problem);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["heat"] = {{"n", c.heat.n}, {"steps", c.heat.steps}, {"t_end", c.heat.t_end},
               {"lower", vec_json(c.heat.lower)}, {"upper", vec_json(c.heat.upper)}};
  const auto& f = c.reactive_flow;
  j["reactive_flow"] = {{"nx", f.nx},
                        {"ny", f.ny},
                        {"steps", f.steps},
                        {"t_end", f.t_end},
                        {"washcoat", f.washcoat},
                        {"lower", vec_json(f.lower)},
                        {"upper", vec_json(f.upper)},
                        {"raster",
                         {{"path", f.raster_path},
                          {"seed", f.raster_seed},
                          {"nx", f.raster_nx},
                          {"ny", f.raster_ny},
                          {"min", f.kappa_min},
                          {"max", f.kappa_max}}}};
  if (f.mu_bar) j["reactive_flow"]["mu_bar"] = vec_json(f.mu_bar->values());
  const auto& b = c.building;
  j["building"] = {{"nx", b.nx},
                   {"ny", b.ny},
                   {"steps", b.steps},
                   {"t_end", b.t_end},
                   {"background", b.background},
                   {"walls", regions_json(b.walls)},
                   {"doors", regions_json(b.doors)},
                   {"heaters", regions_json(b.heaters)},
                   {"room", rect_json(b.room)},
                   {"wall_range", {b.wall_range.lo, b.wall_range.hi}},
                   {"door_range", {b.door_range.lo, b.door_range.hi}},
                   {"heater_range", {b.heater_range.lo, b.heater_range.hi}},
                   {"window", {b.window_begin, b.window_end}}};
  const auto& a = c.adaptive;
  json adaptive = {{"eps", a.eps},
                   {"ml", backend_name(a.backend)},
                   {"batch_threshold", a.batch_threshold},
                   {"hapod", {{"eps_pod", a.hapod.eps_pod}, {"chunk", a.hapod.chunk}, {"omega", a.hapod.omega}}},
                   {"vkoga",
                    {{"gamma", a.vkoga.gamma},
                     {"lambda", a.vkoga.lambda},
                     {"max_centers", a.vkoga.max_centers},
                     {"tolerance", a.vkoga.tolerance},
                     {"power_floor", a.vkoga.power_floor}}},
                   {"mlp",
                    {{"hidden", a.mlp.hidden},
                     {"learning_rate", a.mlp.train.learning_rate},
                     {"batch_size", a.mlp.train.batch_size},
                     {"max_epochs", a.mlp.train.max_epochs},
                     {"decay", a.mlp.train.decay},
                     {"decay_every", a.mlp.train.decay_every},
                     {"patience", a.mlp.train.patience},
                     {"validation_fraction", a.mlp.train.validation_fraction},
                     {"restarts", a.mlp.train.restarts}}}};
  if (a.policy) adaptive["retrain"] = *a.policy == RetrainPolicy::batch ? "batch" : "per_extend";
  if (a.stagnation)
    adaptive["stagnation"] = {{"n_av", a.stagnation->n_av},
                              {"n_stag", a.stagnation->n_stag},
                              {"eps_slope", a.stagnation->eps_slope},
                              {"eps_slope_rel", a.stagnation->eps_slope_rel},
                              {"divisor", a.stagnation->divisor}};
  j["adaptive"] = adaptive;
  json opt = {{"scale", c.optimize.scale},
              {"xtol", c.optimize.xtol},
              {"ftol", c.optimize.ftol},
              {"max_evals", c.optimize.max_evals}};
  if (c.optimize.initial) opt["initial"] = vec_json(*c.optimize.initial);
  if (c.optimize.target) opt["target"] = vec_json(*c.optimize.target);
  j["optimize"] = opt;
  json mc = {{"samples", c.mc.samples}, {"fom_reference", c.mc.fom_reference}};
  if (c.mc.window) mc["window"] = {c.mc.window->first, c.mc.window->second};
  j["mc"] = mc;
  j["validate"] = {{"training", c.validate.training}, {"samples", c.validate.samples}};
  return j.dump(2);
}

std::shared_ptr<const FomProblem> build_problem(const RunConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::heat: return build_heat(cfg.heat);
    case ProblemKind::reactive_flow: return build_reactive_flow(cfg.reactive_flow);
    case ProblemKind::building: return build_building(cfg.building);
  }
  throw InvalidArgument("unknown problem");
}

MlGeneratorFactory make_ml_factory(const AdaptiveSettings& settings, std::uint64_t seed) {
  if (settings.backend == MlBackend::vkoga) {
    const KernelConfig kc = settings.vkoga;
    return [kc](std::shared_ptr<const RbRom> rom) { return std::make_unique<VkogaGenerator>(std::move(rom), kc); };
  }
  DnnGenerator::Options opt = settings.mlp;
  opt.train.seed = seed;
  opt.batch_threshold = settings.batch_threshold;
  return [opt](std::shared_ptr<const RbRom> rom) { return std::make_unique<DnnGenerator>(std::move(rom), opt); };
}

AdaptiveOptions make_adaptive_options(const AdaptiveSettings& settings, double eps, RetrainPolicy fallback) {
  AdaptiveOptions o;
  o.eps = eps;
  o.policy = settings.policy.value_or(fallback);
  o.batch_threshold = settings.batch_threshold;
  o.hapod = settings.hapod;
  return o;
}

}  // namespace certrom
