#include "npqs/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "npqs/errors.hpp"
#include "npqs/expr_parser.hpp"

namespace npqs {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Battery

bool BatteryReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

const CheckResult* BatteryReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

constexpr std::uint32_t kTagBattery = 0x07000000u;

class Check {
 public:
  Check(std::string name, double tol, bool inequality) {
    r_.name = std::move(name);
    r_.tolerance = tol;
    r_.inequality = inequality;
  }

  // `violation` is an error for identities and (lhs - rhs) for inequalities.
  void record(double violation, std::uint64_t index) {
    ++r_.cases;
    const double v = std::isnan(violation) ? std::numeric_limits<double>::infinity() : violation;
    if (r_.cases == 1 || v > r_.max_violation) {
      r_.max_violation = v;
      r_.worst_index = index;
    }
    if (v > r_.tolerance) ++r_.violations;
  }

  CheckResult result() const { return r_; }

 private:
  CheckResult r_;
};

double dist(const CVector& a, const CVector& b) { return (a - b).norm(); }

}  // namespace

BallPoint battery_point(std::size_t n, std::uint64_t seed, std::uint64_t index,
                        std::uint32_t slot) {
  SampleStream stream(seed, index, kTagBattery | slot);
  if (stream.uniform() < 0.5) return sample_uniform_ball(n, stream);
  BallPoint z(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = Complex(stream.normal(), stream.normal());
  const double r = 1.0 - std::pow(10.0, -3.0 * stream.uniform());
  return z * Complex(r / z.norm());
}

BatteryReport run_identity_battery(const BatteryOptions& opts) {
  const std::size_t n = opts.n;
  if (n < 1 || n > kMaxDimension) throw ParameterError("1<=n<=8");
  const auto map = [&](const BallPoint& a) {
    return opts.mutate_s_sign ? MobiusMap::with_flipped_s_for_testing(a) : MobiusMap(a);
  };

  Check involution("involution", 1e-9, false);
  Check at_zero("phi_a(0)=a", 1e-9, false);
  Check at_a("phi_a(a)=0", 1e-9, false);
  Check product("product_form", 1e-9, false);
  Check reciprocal("reciprocal_identity", 1e-9, false);
  Check symmetry("symmetry", 1e-9, false);
  Check proj("projection_kernel", 1e-9, false);
  Check jac("jacobian", 1e-6, false);
  Check collapse("n1_kernel_collapse", 1e-9, false);

  constexpr double kSlack = 1e-12;
  Check disp_lower("displacement_lower", kSlack, true);
  Check disp_upper("displacement_upper", kSlack, true);
  Check dominance("kernel_dominance", kSlack, true);
  Check ball_dist_lo("bergman_ball_distance_lower", kSlack, true);
  Check ball_dist_hi("bergman_ball_distance_upper", kSlack, true);
  Check ball_ratio_lo("bergman_ball_ratio_lower", kSlack, true);
  Check ball_ratio_hi("bergman_ball_ratio_upper", kSlack, true);

  const std::array<double, 3> gammas{1.5, 2.0, 4.0};
  const std::array<double, 3> radii{0.3, 0.5, 0.8};

  for (std::uint64_t i = 0; i < opts.samples; ++i) {
    const BallPoint a = battery_point(n, opts.seed, i, 0);
    const BallPoint z = battery_point(n, opts.seed, i, 1);

    if (opts.identities) {
      const MobiusMap m = map(a);
      const BallPoint phi = m.apply(z);
      involution.record(dist(m.apply(phi), z), i);
      at_zero.record(dist(m.apply(BallPoint(n)), a), i);
      at_a.record(m.apply(a).norm(), i);
      const double pf = m.one_minus_phi_sq(z);
      product.record(std::abs(pf - (1.0 - phi.norm_sq())) / std::max(1.0, pf), i);
      const auto [lhs, rhs] = reciprocal_identity_sides(z, a, gammas[i % gammas.size()]);
      reciprocal.record(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)), i);
      symmetry.record(std::abs(phi.norm() - map(z).apply(a).norm()), i);
      const double factor = map(a).apply(z).norm() * std::abs(1.0 - inner(z, a));
      proj.record(std::abs(projection_kernel(z, a) - factor), i);
      if (n == 1) collapse.record(std::abs(projection_kernel(z, a) - dist(z, a)), i);

      // Columnwise central differences at 0 against the closed form.
      const ComplexMatrix J = m.jacobian_at_zero();
      constexpr double h = 1e-6;
      double worst = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const BallPoint e = BallPoint::basis(n, k) * Complex(h);
        const CVector col = (m.apply(e) - m.apply(-e)) * Complex(0.5 / h);
        for (std::size_t r = 0; r < n; ++r) worst = std::max(worst, std::abs(col[r] - J(r, k)));
      }
      jac.record(worst, i);
    }

    if (opts.inequalities) {
      const BallPoint& w = a;
      if (!z.approx_equal(w, 0.0)) {
        const auto t = displacement_bounds(z, w);
        disp_lower.record(t.lower - t.displacement - kSlack * t.displacement, i);
        disp_upper.record(t.displacement * t.displacement - t.upper_sq - kSlack * t.upper_sq, i);
      }
      const double one_minus = std::abs(1.0 - inner(z, w));
      dominance.record(projection_kernel(z, w) - one_minus - kSlack * one_minus, i);

      // Bergman ball of radius r around z: w = Phi_z(u), |u| < r.
      const double r = radii[i % radii.size()];
      SampleStream stream(opts.seed, i, kTagBattery | 2u);
      const BallPoint u = sample_uniform_ball(n, stream) * Complex(r);
      const double omega_z = 1.0 - z.norm_sq();
      const MobiusMap phi_z(z, omega_z);
      const BallPoint wb = phi_z.apply(u);
      const double omega_w = phi_z.one_minus_phi_sq(u, 1.0 - u.norm_sq());
      const double d = std::abs(1.0 - inner(z, wb));
      const double c = 1.0 - r * r;
      ball_dist_lo.record(omega_z / 2.0 - d - kSlack * d, i);
      ball_dist_hi.record(d - 2.0 * omega_z / c - kSlack * d, i);
      const double ratio = omega_w / omega_z;
      ball_ratio_lo.record(c / 4.0 - ratio - kSlack * ratio, i);
      ball_ratio_hi.record(ratio - 4.0 / c - kSlack * ratio, i);
    }
  }

  BatteryReport report;
  report.n = n;
  report.seed = opts.seed;
  if (opts.identities) {
    for (const Check* c : {&involution, &at_zero, &at_a, &product, &reciprocal, &symmetry, &proj,
                           &jac}) {
      report.checks.push_back(c->result());
    }
    if (n == 1) report.checks.push_back(collapse.result());
  }
  if (opts.inequalities) {
    for (const Check* c : {&disp_lower, &disp_upper, &dominance, &ball_dist_lo, &ball_dist_hi,
                           &ball_ratio_lo, &ball_ratio_hi}) {
      report.checks.push_back(c->result());
    }
  }
  return report;
}

void print_battery(std::ostream& os, const BatteryReport& report) {
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %9s %12s %10s %6s  %s\n", "check", "cases", "max_violation",
                "tolerance", "status", "worst (seed, index)");
  os << line;
  for (const auto& c : report.checks) {
    const double shown = c.inequality ? std::max(0.0, c.max_violation) : c.max_violation;
    std::snprintf(line, sizeof line, "%-28s %9zu %12.3e %10.1e %6s  (%llu, %llu)\n", c.name.c_str(),
                  c.cases, shown, c.tolerance, c.passed() ? "ok" : "FAIL",
                  static_cast<unsigned long long>(report.seed),
                  static_cast<unsigned long long>(c.worst_index));
    os << line;
  }
  if (report.n == 1 && report.find("n1_kernel_collapse") &&
      report.find("n1_kernel_collapse")->passed()) {
    os << "n=1: projection kernel equals the Euclidean kernel |z-w|\n";
  }
}

// ---------------------------------------------------------------------------
// Configuration

SpaceParams ParamSpec::resolve(std::size_t n) const {
  const double nd = static_cast<double>(n);
  const double a = alpha ? *alpha : q + nd * s - nd - 1.0 + 0.5;
  return SpaceParams(n, p, q, s, a);
}

ParamSpec parse_param_spec(const std::string& text) {
  ParamSpec spec;
  bool have_p = false, have_q = false, have_s = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("expected key=value in '" + item + "'");
    std::string key = item.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    const std::string val = item.substr(eq + 1);
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (val.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw ParameterError("bad number '" + val + "' for " + key);
    }
    if (key == "p") {
      spec.p = v;
      have_p = true;
    } else if (key == "q") {
      spec.q = v;
      have_q = true;
    } else if (key == "s") {
      spec.s = v;
      have_s = true;
    } else if (key == "alpha") {
      spec.alpha = v;
    } else {
      throw ParameterError("unknown parameter '" + key + "'");
    }
  }
  if (!have_p || !have_q || !have_s) throw ParameterError("params need p, q and s");
  return spec;
}

FunctionalConfig RunConfig::functional_config() const {
  FunctionalConfig fc;
  fc.sampler.seed = seed;
  fc.sampler.n_samples = n_samples;
  fc.sampler.radial_mode = radial_mode;
  fc.sampler.shards = shards;
  fc.sampler.workers = workers;
  fc.inner_samples = inner_samples;
  fc.r_max = r_max;
  fc.sup_budget = sup_budget;
  fc.override_hw_gate = override_hw_gate;
  fc.focus = focus;
  fc.stop_on_divergence = stop_on_divergence;
  return fc;
}

void RunConfig::validate() const {
  if (n < 1 || n > kMaxDimension) throw ParameterError("1<=n<=8");
  for (const auto& p : params) p.resolve(n);
  for (const auto& e : corpus) parse(e, n);
  if (n_samples == 0) throw ParameterError("n_samples>=1");
  if (inner_samples == 0) throw ParameterError("inner_samples>=1");
  if (!(r_max > 0.0 && r_max < 1.0)) throw ParameterError("0<r_max<1");
  if (sup_budget < sup_coarse_count(n, sup_budget)) {
    throw ParameterError("sup budget below the coarse stage size");
  }
}

namespace {

template <typename T>
void take(const ordered_json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> keys,
                    const std::string& where) {
  if (!obj.is_object()) throw ParameterError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
      throw ParameterError("unknown key '" + k + "' in " + where);
    }
  }
}

RadialMode parse_radial_mode(const std::string& s) {
  if (s == "uniform_volume") return RadialMode::UniformVolume;
  if (s == "beta_tilt") return RadialMode::BetaTilt;
  throw ParameterError("radial_mode must be uniform_volume or beta_tilt");
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["n"] = cfg.n;
  j["params"] = ordered_json::array();
  for (const auto& p : cfg.params) {
    ordered_json pj;
    pj["p"] = p.p;
    pj["q"] = p.q;
    pj["s"] = p.s;
    if (p.alpha) pj["alpha"] = *p.alpha;
    j["params"].push_back(pj);
  }
  j["corpus"] = cfg.corpus;
  j["kinds"] = ordered_json::array();
  for (auto k : cfg.kinds) j["kinds"].push_back(to_string(k));
  j["sampler"] = {{"seed", cfg.seed},
                  {"n_samples", cfg.n_samples},
                  {"inner_samples", cfg.inner_samples},
                  {"radial_mode", to_string(cfg.radial_mode)},
                  {"shards", cfg.shards},
                  {"workers", cfg.workers}};
  j["sup"] = {{"r_max", cfg.r_max}, {"budget", cfg.sup_budget}};
  j["output"] = {{"out_dir", cfg.out_dir}, {"csv", cfg.csv_name}, {"summary", cfg.summary_name}};
  j["flags"] = {{"override_hw_gate", cfg.override_hw_gate},
                {"focus", cfg.focus},
                {"stop_on_divergence", cfg.stop_on_divergence},
                {"record_timings", cfg.record_timings},
                {"wall_clock_budget_s", cfg.wall_clock_budget_s}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    reject_unknown(j, {"n", "params", "corpus", "kinds", "sampler", "sup", "output", "flags"},
                   "config");
    take(j, "n", cfg.n);
    if (j.contains("params")) {
      for (const auto& pj : j.at("params")) {
        reject_unknown(pj, {"p", "q", "s", "alpha"}, "params entry");
        ParamSpec p;
        p.p = pj.at("p").get<double>();
        p.q = pj.at("q").get<double>();
        p.s = pj.at("s").get<double>();
        if (pj.contains("alpha")) p.alpha = pj.at("alpha").get<double>();
        cfg.params.push_back(p);
      }
    }
    if (j.contains("corpus")) {
      cfg.corpus = j.at("corpus").get<std::vector<std::string>>();
    } else {
      cfg.corpus = default_corpus(cfg.n);
    }
    if (j.contains("kinds")) {
      cfg.kinds.clear();
      for (const auto& k : j.at("kinds")) cfg.kinds.push_back(parse_functional_kind(k.get<std::string>()));
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      reject_unknown(s, {"seed", "n_samples", "inner_samples", "radial_mode", "shards", "workers"},
                     "sampler");
      take(s, "seed", cfg.seed);
      take(s, "n_samples", cfg.n_samples);
      take(s, "inner_samples", cfg.inner_samples);
      if (s.contains("radial_mode")) cfg.radial_mode = parse_radial_mode(s.at("radial_mode").get<std::string>());
      take(s, "shards", cfg.shards);
      take(s, "workers", cfg.workers);
    }
    if (j.contains("sup")) {
      const auto& s = j.at("sup");
      reject_unknown(s, {"r_max", "budget"}, "sup");
      take(s, "r_max", cfg.r_max);
      take(s, "budget", cfg.sup_budget);
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      reject_unknown(o, {"out_dir", "csv", "summary"}, "output");
      take(o, "out_dir", cfg.out_dir);
      take(o, "csv", cfg.csv_name);
      take(o, "summary", cfg.summary_name);
    }
    if (j.contains("flags")) {
      const auto& f = j.at("flags");
      reject_unknown(f, {"override_hw_gate", "focus", "stop_on_divergence", "record_timings",
                         "wall_clock_budget_s"},
                     "flags");
      take(f, "override_hw_gate", cfg.override_hw_gate);
      take(f, "focus", cfg.focus);
      take(f, "stop_on_divergence", cfg.stop_on_divergence);
      take(f, "record_timings", cfg.record_timings);
      take(f, "wall_clock_budget_s", cfg.wall_clock_budget_s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

std::string seeded_polynomial(std::size_t n, std::uint64_t seed) {
  SampleStream stream(seed, 0, 0);
  const auto coeff = [&] {
    const auto round2 = [](double x) { return std::round(x * 100.0) / 100.0; };
    return Complex(round2(2.0 * stream.uniform() - 1.0), round2(2.0 * stream.uniform() - 1.0));
  };
  std::string out;
  // Six terms with total degrees 0..5; the last one has degree exactly 5.
  for (int degree = 0; degree <= 5; ++degree) {
    std::vector<int> exps(n, 0);
    for (int d = 0; d < degree; ++d) {
      exps[std::min<std::size_t>(n - 1, static_cast<std::size_t>(stream.uniform() * n))] += 1;
    }
    std::string term = "(" + format_complex_literal(coeff()) + ")";
    for (std::size_t k = 0; k < n; ++k) {
      if (exps[k] == 0) continue;
      term += "*z" + std::to_string(k + 1);
      if (exps[k] > 1) term += "^" + std::to_string(exps[k]);
    }
    out += out.empty() ? term : " + " + term;
  }
  return out;
}

std::vector<std::string> default_corpus(std::size_t n) {
  std::vector<std::string> c{"1", "(0.5-2i)"};
  for (std::size_t k = 1; k <= n; ++k) c.push_back("z" + std::to_string(k));
  c.push_back("z1^2");
  c.push_back("z1^3");
  if (n >= 2) {
    c.push_back("z1*z2");
    c.push_back("z1^2*z2");
  }
  c.push_back(seeded_polynomial(n));
  // <z,b> with a unit vector b
  std::string b = n == 1 ? "[1" : "[0.6, 0.8i";
  for (std::size_t k = 2; k < n; ++k) b += ", 0";
  b += "]";
  for (const char* t : {"0.5", "1", "3"}) c.push_back("(1 - dot(z," + b + "))^-" + t);
  c.push_back("log(1 - z1)");
  return c;
}

// ---------------------------------------------------------------------------
// Report

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string verdict_of(const ReportRow& r) {
  if (r.status != "ok") return r.status.rfind("skipped", 0) == 0 ? "skipped" : "error";
  return r.result.diverged ? "infinite" : "finite";
}

std::string params_label(const SpaceParams& P) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "p=%g,q=%g,s=%g,alpha=%g", P.p(), P.q(), P.s(), P.alpha());
  return buf;
}

struct Pointwise {
  std::size_t pairs = 0;
  std::size_t violations = 0;
};

// Kernel dominance on sampled pairs (z, w = Phi_z(u)):
//   |F|^p/|1-<z,w>|^{2g} <= |F|^p/|w-P_w z-s_w Q_w z|^{2g} >= |F|^p/|z-w|^{2g},
// and equality of the last two when n = 1.
Pointwise dominance_check(const HoloExpr& f, const SpaceParams& P, std::uint64_t seed,
                          std::size_t pairs) {
  Pointwise out;
  const std::size_t n = P.n();
  const double two_g = 2.0 * P.gamma();
  for (std::uint64_t i = 0; i < pairs; ++i) {
    const BallPoint z = battery_point(n, seed, i, 3);
    SampleStream stream(seed, i, kTagBattery | 4u);
    const BallPoint u = sample_uniform_ball(n, stream);
    const BallPoint w = MobiusMap(z).apply(u);
    double diff;
    try {
      diff = std::pow(std::abs(eval(f, z) - eval(f, w)), P.p());
    } catch (const EvalError&) {
      continue;
    }
    ++out.pairs;
    const double d_int = diff / std::pow(std::abs(1.0 - inner(z, w)), two_g);
    const double p_int = diff / std::pow(projection_kernel(z, w), two_g);
    const double e_int = diff / std::pow((z - w).norm(), two_g);
    const double slack = 1e-8 * p_int;
    if (d_int > p_int + slack) ++out.violations;
    if (e_int > p_int + slack) ++out.violations;
    if (n == 1 && std::abs(e_int - p_int) > slack) ++out.violations;
  }
  return out;
}

}  // namespace

EquivalenceReport run_equivalence_report(const RunConfig& cfg) {
  cfg.validate();
  EquivalenceReport rep;
  rep.config = cfg;
  const FunctionalConfig fc = cfg.functional_config();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const bool capped = cfg.wall_clock_budget_s > 0.0;

  std::vector<SpaceParams> params;
  for (const auto& p : cfg.params) params.push_back(p.resolve(cfg.n));

  std::ostringstream csv;
  csv << kCsvHeader << "\n";

  ordered_json verdicts = ordered_json::object();
  ordered_json agreement = ordered_json::object();
  ordered_json fubini = ordered_json::array();
  ordered_json ratios = ordered_json::array();
  ordered_json sufficiency = ordered_json::array();
  std::size_t dominance_pairs = 0, dominance_violations = 0;
  bool all_agree = true, all_sufficient = true;

  for (const std::string& text : cfg.corpus) {
    const HoloExpr f = parse(text, cfg.n);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      const SpaceParams& P = params[pi];
      const std::string label = params_label(P);
      std::map<FunctionalKind, const ReportRow*> by_kind;
      const std::size_t first_row = rep.rows.size();

      for (FunctionalKind kind : cfg.kinds) {
        ReportRow row{text, kind, pi, P, "ok", {}, 0.0};
        if (capped && elapsed() > cfg.wall_clock_budget_s) {
          row.status = "skipped: wall-clock budget";
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          try {
            check_kind_allowed(P, kind, fc);
            row.result = sup_functional(f, P, kind, fc);
          } catch (const ParameterError& e) {
            row.status = std::string("skipped: ") + e.what();
          } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
          }
          row.seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        rep.rows.push_back(std::move(row));
      }
      for (std::size_t r = first_row; r < rep.rows.size(); ++r) by_kind[rep.rows[r].kind] = &rep.rows[r];

      // CSV rows
      for (std::size_t r = first_row; r < rep.rows.size(); ++r) {
        const ReportRow& row = rep.rows[r];
        const bool ok = row.status == "ok";
        const std::size_t probes = ok ? row.result.probes.size() : 0;
        const std::size_t per_probe = ok && !row.result.probes.empty()
                                          ? row.result.probes.front().estimate.n_samples *
                                                (is_nested_kind(row.kind) ? cfg.inner_samples : 1)
                                          : 0;
        csv << csv_field(row.function) << ',' << to_string(row.kind) << ',' << P.n() << ','
            << fmt(P.p()) << ',' << fmt(P.q()) << ',' << fmt(P.s()) << ',' << fmt(P.alpha()) << ','
            << csv_field(ok ? to_string(row.result.a_star) : "") << ','
            << csv_field(ok ? fmt(row.result.value) : row.status) << ','
            << (ok ? fmt(row.result.at_star.std_error) : "") << ',' << per_probe * probes << ','
            << (ok ? (row.result.diverged ? "true" : "false") : "") << ','
            << (cfg.record_timings ? fmt(row.seconds) : "") << ',' << cfg.seed << "\n";
      }

      // Verdicts and agreement
      ordered_json vrow = ordered_json::object();
      std::optional<std::string> common;
      bool agree = true;
      for (std::size_t r = first_row; r < rep.rows.size(); ++r) {
        const std::string v = verdict_of(rep.rows[r]);
        vrow[to_string(rep.rows[r].kind)] = v;
        if (v != "finite" && v != "infinite") continue;
        if (!common) common = v;
        agree = agree && *common == v;
      }
      verdicts[text][label] = vrow;
      agreement[text][label] = agree;
      all_agree = all_agree && agree;

      // Fubini path at a = 0
      if (by_kind.count(FunctionalKind::JMeanOsc) && by_kind.count(FunctionalKind::DAlpha)) {
        ordered_json fj{{"function", text}, {"params", label}};
        try {
          const BallPoint zero(cfg.n);
          const auto j = j_mean_osc_at(f, P, zero, fc);
          const auto d = d_alpha_at(f, P, zero, fc, 0.0);
          const double sigma = std::hypot(j.std_error, d.std_error);
          const bool both_div = j.diverged && d.diverged;
          fj["j_mean_osc"] = j.value;
          fj["d_alpha0"] = d.value;
          fj["combined_sigma"] = sigma;
          fj["discrepancy_sigmas"] =
              both_div ? ordered_json(nullptr)
                       : ordered_json(sigma > 0 ? std::abs(j.value - d.value) / sigma
                                                : (j.value == d.value ? 0.0 : 1e300));
          fj["both_diverged"] = both_div;
        } catch (const std::exception& e) {
          fj["error"] = e.what();
        }
        fubini.push_back(fj);
      }

      // Pointwise kernel dominance
      const Pointwise pw = dominance_check(f, P, cfg.seed, 4096);
      dominance_pairs += pw.pairs;
      dominance_violations += pw.violations;

      // Ratios against NNorm
      ordered_json rj{{"function", text}, {"params", label}};
      const auto nn = by_kind.find(FunctionalKind::NNorm);
      for (std::size_t r = first_row; r < rep.rows.size(); ++r) {
        const ReportRow& row = rep.rows[r];
        const bool usable = nn != by_kind.end() && nn->second->status == "ok" &&
                            !nn->second->result.diverged && nn->second->result.value > 0.0 &&
                            row.status == "ok" && !row.result.diverged;
        rj[to_string(row.kind)] =
            usable ? ordered_json(row.result.value / nn->second->result.value) : ordered_json(nullptr);
      }
      ratios.push_back(rj);

      // Sufficiency direction: sup NNorm(f - f(0)) vs sup HWEuclid
      const auto hw = by_kind.find(FunctionalKind::HWEuclid);
      if (hw != by_kind.end() && hw->second->status == "ok" && P.hw_valid()) {
        ordered_json sj{{"function", text}, {"params", label}};
        try {
          const HoloExpr centered =
              HoloExpr::sub(f, HoloExpr::constant(eval(f, BallPoint(cfg.n)), cfg.n));
          const auto nn0 = sup_functional(centered, P, FunctionalKind::NNorm, fc);
          sj["nnorm_centered_diverged"] = nn0.diverged;
          sj["hw_euclid_diverged"] = hw->second->result.diverged;
          const bool same = nn0.diverged == hw->second->result.diverged;
          sj["agree"] = same;
          all_sufficient = all_sufficient && same;
        } catch (const std::exception& e) {
          sj["error"] = e.what();
        }
        sufficiency.push_back(sj);
      }
    }
  }

  rep.csv = csv.str();
  rep.consistent = all_agree && all_sufficient && dominance_violations == 0;

  ordered_json summary;
  summary["n"] = cfg.n;
  summary["seed"] = cfg.seed;
  summary["functions"] = cfg.corpus.size();
  summary["parameter_sets"] = ordered_json::array();
  for (const auto& P : params) {
    summary["parameter_sets"].push_back({{"label", params_label(P)},
                                         {"hw_valid", P.hw_valid()},
                                         {"hw_remark", P.hw_remark()}});
  }
  summary["verdicts"] = verdicts;
  summary["verdict_agreement"] = agreement;
  summary["all_verdicts_agree"] = all_agree;
  summary["fubini"] = fubini;
  summary["kernel_dominance"] = {{"pairs", dominance_pairs}, {"violations", dominance_violations}};
  summary["ratios_to_nnorm"] = ratios;
  summary["sufficiency"] = sufficiency;
  summary["consistent"] = rep.consistent;
  summary["note"] = "sup values are lower bounds over probed a with |a| <= r_max";
  rep.summary_json = summary.dump(2) + "\n";
  return rep;
}

void write_report_files(const EquivalenceReport& report) {
  namespace fs = std::filesystem;
  const fs::path dir(report.config.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / report.config.csv_name, std::ios::binary);
    if (!out) throw ParameterError("cannot write " + (dir / report.config.csv_name).string());
    out << report.csv;
  }
  {
    std::ofstream out(dir / report.config.summary_name, std::ios::binary);
    if (!out) throw ParameterError("cannot write " + (dir / report.config.summary_name).string());
    out << report.summary_json;
  }
}

}  // namespace npqs
