// npqs: command-line front end for the N(p,q,s) estimators.
//
// Exit codes: 0 success, 1 invariant violation, 2 input error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "npqs/errors.hpp"
#include "npqs/expr_parser.hpp"
#include "npqs/functionals.hpp"
#include "npqs/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> n;
  std::optional<std::size_t> inner;
  std::optional<double> r_max;
  std::optional<std::size_t> budget;
  std::string radial;
  std::string params = "p=2,q=1,s=1";
  std::string expr;
  std::string a;
  std::string kind = "NNorm";
  std::string out_dir;
  bool override_hw_gate = false;
  bool no_focus = false;
};

void add_sampler_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config supplying defaults")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed")->envname("NPQS_SEED");
  cmd->add_option("--samples", c.samples, "Samples per at-a estimate");
  cmd->add_option("--workers", c.workers, "Worker threads");
  cmd->add_option("--inner-samples", c.inner, "Inner samples for nested kinds");
  cmd->add_option("--radial-mode", c.radial, "beta_tilt or uniform_volume");
}

void add_point_flags(CLI::App* cmd, Common& c, bool with_kind) {
  cmd->add_option("--n", c.n, "Dimension (1..8)");
  cmd->add_option("--params", c.params, "p=..,q=..,s=..[,alpha=..]");
  cmd->add_option("--expr", c.expr, "Holomorphic function, e.g. '(1 - z1)^-0.5'")->required();
  cmd->add_option("--r-max", c.r_max, "Sup search radius bound");
  cmd->add_option("--sup-budget", c.budget, "Sup search evaluation budget");
  cmd->add_flag("--override-hw-gate", c.override_hw_gate, "Allow HW kinds under p > 2(q+ns)");
  cmd->add_flag("--no-focus", c.no_focus, "Disable boundary-focused sampling");
  if (with_kind) cmd->add_option("--kind", c.kind, "Functional kind");
}

npqs::RunConfig merged_config(const Common& c) {
  npqs::RunConfig cfg = c.config.empty() ? npqs::RunConfig{} : npqs::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.samples) cfg.n_samples = *c.samples;
  if (c.workers) cfg.workers = *c.workers;
  if (c.n) cfg.n = *c.n;
  if (c.inner) cfg.inner_samples = *c.inner;
  if (c.r_max) cfg.r_max = *c.r_max;
  if (c.budget) cfg.sup_budget = *c.budget;
  if (!c.radial.empty()) {
    if (c.radial == "beta_tilt") {
      cfg.radial_mode = npqs::RadialMode::BetaTilt;
    } else if (c.radial == "uniform_volume") {
      cfg.radial_mode = npqs::RadialMode::UniformVolume;
    } else {
      throw npqs::ParameterError("radial mode must be beta_tilt or uniform_volume");
    }
  }
  if (c.override_hw_gate) cfg.override_hw_gate = true;
  if (c.no_focus) cfg.focus = false;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  return cfg;
}

// "0.3, 0.2i" -> (0.3, 0.2i); each entry is a constant expression.
npqs::BallPoint parse_point(const std::string& text, std::size_t n) {
  npqs::BallPoint a(n);
  std::stringstream ss(text);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= n) throw npqs::ParameterError("--a has more than n coordinates");
    a[k++] = npqs::eval(npqs::parse(item, n), npqs::BallPoint(n));
  }
  if (k != n) throw npqs::ParameterError("--a needs exactly n coordinates");
  if (!a.is_interior()) throw npqs::DomainError("|a| < 1");
  return a;
}

void print_estimate(const std::string& label, const npqs::IntegralEstimate& e) {
  std::printf("%s = %.10g +- %.3g  (samples %zu)\n", label.c_str(), e.value, e.std_error,
              e.n_samples);
  if (e.diverged) std::printf("diverged: %s\n", e.divergence_reason.c_str());
}

int run_point(const Common& c, npqs::FunctionalKind kind, bool force_sup) {
  const npqs::RunConfig rc = merged_config(c);
  const std::size_t n = rc.n;
  const npqs::SpaceParams P = npqs::parse_param_spec(c.params).resolve(n);
  const npqs::HoloExpr f = npqs::parse(c.expr, n);
  const npqs::FunctionalConfig fc = rc.functional_config();
  npqs::check_kind_allowed(P, kind, fc);

  std::printf("f = %s\n%s\nseed %llu\n", npqs::pretty_print(f).c_str(), P.to_string().c_str(),
              static_cast<unsigned long long>(rc.seed));
  if (!c.a.empty() && !force_sup) {
    const npqs::BallPoint a = parse_point(c.a, n);
    print_estimate(std::string(npqs::to_string(kind)) + " at a=" + npqs::to_string(a),
                   npqs::functional_at(f, P, a, kind, fc));
    return kExitOk;
  }
  const auto r = npqs::sup_functional(f, P, kind, fc);
  if (force_sup) {
    for (std::size_t i = 0; i < r.probes.size(); ++i) {
      const auto& pr = r.probes[i];
      std::printf("probe %3zu  a=%s  %.10g +- %.3g%s\n", i, npqs::to_string(pr.a).c_str(),
                  pr.estimate.value, pr.estimate.std_error, pr.estimate.diverged ? "  diverged" : "");
    }
  }
  std::printf("sup %s >= %.10g at a*=%s (probes %zu)\n", npqs::to_string(kind), r.value,
              npqs::to_string(r.a_star).c_str(), r.probes.size());
  print_estimate("at a*", r.at_star);
  if (r.diverged) std::printf("verdict: infinite\n");
  else std::printf("verdict: finite (lower bound for the supremum)\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo estimators for N(p,q,s) function spaces on the unit ball"};
  app.require_subcommand(1);

  Common c;

  auto* check = app.add_subcommand("check-identities", "Run the identity and inequality battery");
  std::size_t battery_n = 2;
  std::size_t battery_samples = 100000;
  std::uint64_t battery_seed = 0x6e707173ULL;
  bool mutate = false;
  check->add_option("--n", battery_n, "Dimension (1..8)");
  check->add_option("--samples", battery_samples, "Random cases");
  check->add_option("--seed", battery_seed, "Seed")->envname("NPQS_SEED");
  check->add_flag("--mutate", mutate, "Flip the sign of s_a in the map under test");

  auto* norm = app.add_subcommand("norm", "N(p,q,s) functional at a point, or its sup");
  add_sampler_flags(norm, c);
  add_point_flags(norm, c, false);
  norm->add_option("--a", c.a, "Comma-separated point, e.g. '0.3,0.1i'");

  auto* functional = app.add_subcommand("functional", "Any functional kind at a point, or its sup");
  add_sampler_flags(functional, c);
  add_point_flags(functional, c, true);
  functional->add_option("--a", c.a, "Comma-separated point");

  auto* sup = app.add_subcommand("sup-search", "Sup search with the full probe log");
  add_sampler_flags(sup, c);
  add_point_flags(sup, c, true);

  auto* report = app.add_subcommand("equivalence-report", "CSV and JSON cross-check of all kinds");
  add_sampler_flags(report, c);
  report->get_option("--config")->required();
  report->add_option("--out-dir", c.out_dir, "Output directory");
  report->add_flag("--override-hw-gate", c.override_hw_gate, "Allow HW kinds under p > 2(q+ns)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*check) {
      npqs::BatteryOptions opts;
      opts.n = battery_n;
      opts.samples = battery_samples;
      opts.seed = battery_seed;
      opts.mutate_s_sign = mutate;
      const auto rep = npqs::run_identity_battery(opts);
      npqs::print_battery(std::cout, rep);
      if (rep.all_passed()) return kExitOk;
      for (const auto& chk : rep.checks) {
        if (!chk.passed()) {
          std::cerr << "violation: " << chk.name << " (seed " << rep.seed << ", index "
                    << chk.worst_index << ")\n";
        }
      }
      return kExitViolation;
    }
    if (*norm) return run_point(c, npqs::FunctionalKind::NNorm, false);
    if (*functional) return run_point(c, npqs::parse_functional_kind(c.kind), false);
    if (*sup) return run_point(c, npqs::parse_functional_kind(c.kind), true);
    if (*report) {
      const npqs::RunConfig cfg = merged_config(c);
      const auto rep = npqs::run_equivalence_report(cfg);
      npqs::write_report_files(rep);
      std::printf("wrote %s/%s and %s/%s (%zu rows)\n", cfg.out_dir.c_str(), cfg.csv_name.c_str(),
                  cfg.out_dir.c_str(), cfg.summary_name.c_str(), rep.rows.size());
      std::printf("consistent: %s\n", rep.consistent ? "yes" : "no");
      return rep.consistent ? kExitOk : kExitViolation;
    }
  } catch (const npqs::ParseError& e) {
    std::cerr << "parse error (" << npqs::to_string(e.kind()) << ") at " << e.span().start << ": "
              << e.what() << "\n";
    return kExitInput;
  } catch (const npqs::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitInput;
  } catch (const npqs::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitOk;
}
