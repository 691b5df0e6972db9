#include "certrom/app.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace certrom;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::string ml;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--eps", c.eps, "certified output tolerance")->check(CLI::NonNegativeNumber);
  cmd->add_option("--ml", c.ml, "ML backend")->check(CLI::IsMember({"vkoga", "mlp"}));
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.out.empty()) cfg.out = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.eps) cfg.adaptive.eps = *c.eps;
  if (!c.ml.empty()) cfg.adaptive.backend = c.ml == "mlp" ? MlBackend::mlp : MlBackend::vkoga;
  return cfg;
}

Parameter parse_mu(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InvalidArgument("--mu: cannot parse '" + item + "'");
    }
  }
  return Parameter(Vector(Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()))));
}

int run(int argc, char** argv) {
  CLI::App app{"Certified adaptive reduced models for parabolic problems"};
  app.require_subcommand(1);

  Common solve_opts, opt_opts, mc_opts, val_opts, info_opts;
  std::string mu_text;
  std::string model = "fom";
  auto* solve = app.add_subcommand("solve", "evaluate one parameter, write output.csv");
  add_common(solve, solve_opts);
  solve->add_option("--mu", mu_text, "comma separated parameter")->required();
  solve->add_option("--model", model, "fom or adaptive")->check(CLI::IsMember({"fom", "adaptive"}));

  auto* optimize = app.add_subcommand("optimize", "misfit minimization against a FOM reference");
  add_common(optimize, opt_opts);
  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of the time-averaged output");
  add_common(mc, mc_opts);
  auto* validate = app.add_subcommand("validate", "estimator effectivity table");
  add_common(validate, val_opts);
  auto* info = app.add_subcommand("info", "print the resolved config");
  add_common(info, info_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*solve) {
    const RunConfig cfg = resolve(solve_opts);
    const auto res = run_solve(cfg, parse_mu(mu_text), model == "adaptive");
    std::printf("tier %s, bound %.6g, wrote %s/output.csv\n", res.tier.c_str(), res.bound, cfg.out.c_str());
  } else if (*optimize) {
    const RunConfig cfg = resolve(opt_opts);
    const auto rep = run_optimize(cfg);
    std::printf("x =");
    for (Index j = 0; j < rep.x.size(); ++j) std::printf(" %.10g", rep.x[j]);
    std::printf("\nJ = %.6g, evaluations %lld, converged %s, tolerance drops %zu\n", rep.value,
                static_cast<long long>(rep.evaluations), rep.converged ? "yes" : "no", rep.events.size());
  } else if (*mc) {
    const RunConfig cfg = resolve(mc_opts);
    const auto rep = run_mc(cfg);
    std::printf("N_mc %lld, mean %.10g, variance %.6g, wrote %s/mc.json\n", static_cast<long long>(rep.n_mc), rep.mean,
                rep.variance, cfg.out.c_str());
  } else if (*validate) {
    const RunConfig cfg = resolve(val_opts);
    const auto rows = run_validate(cfg);
    bool ok = true;
    std::printf("%5s %14s %14s %10s %14s %14s %10s\n", "i", "out_err", "out_est", "eff", "state_err", "state_est", "eff");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      std::printf("%5zu %14.6e %14.6e %10.3f %14.6e %14.6e %10.3f\n", i, r.output_error, r.output_estimate,
                  r.output_estimate / r.output_error, r.state_error, r.state_estimate, r.state_estimate / r.state_error);
      ok &= r.output_estimate >= r.output_error && r.state_estimate >= r.state_error;
    }
    if (!ok) {
      std::fprintf(stderr, "error: an estimate fell below the true error\n");
      return 2;
    }
  } else if (*info) {
    std::cout << run_config_json(resolve(info_opts)) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
