// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "npqs/ball_geometry.hpp"
#include "npqs/expr_parser.hpp"
#include "npqs/functionals.hpp"
#include "npqs/harness.hpp"
#include "npqs/integrate.hpp"
#include "support/quadrature.hpp"

using namespace npqs;
namespace q = npqs::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void fail(const std::string& why) {
    pass = false;
    notes.push_back("FAIL " + why);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(int id, const char* title, const Verdict& v, double secs) {
  std::printf("%s  criterion %d: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title, secs);
  for (const auto& n : v.notes) std::printf("      %s\n", n.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// 1, 2: batteries

Verdict battery(bool identities, std::size_t samples, double time_limit) {
  static const std::vector<std::string> kIdentityChecks{
      "involution", "phi_a(0)=a", "phi_a(a)=0", "product_form",
      "reciprocal_identity", "symmetry", "projection_kernel"};
  Verdict v;
  for (std::size_t n : {1u, 2u, 3u}) {
    BatteryOptions opts;
    opts.n = n;
    opts.samples = samples;
    opts.identities = identities;
    opts.inequalities = !identities;
    const auto t0 = Clock::now();
    const BatteryReport rep = run_identity_battery(opts);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    for (const auto& c : rep.checks) {
      if (identities) {
        if (std::find(kIdentityChecks.begin(), kIdentityChecks.end(), c.name) == kIdentityChecks.end()) continue;
        worst = std::max(worst, c.max_violation);
        if (c.max_violation > 1e-9) v.fail(fmt("n=%zu %s max violation %.3g", n, c.name.c_str(), c.max_violation));
      } else {
        if (c.violations != 0) v.fail(fmt("n=%zu %s: %zu violations", n, c.name.c_str(), c.violations));
      }
    }
    if (secs > time_limit) v.fail(fmt("n=%zu took %.1f s", n, secs));
    v.note(identities ? fmt("n=%zu: %zu cases, max violation %.2e, %.2f s", n, samples, worst, secs)
                      : fmt("n=%zu: %zu cases, %zu checks, %.2f s", n, samples, rep.checks.size(), secs));
  }
  return v;
}

// ---------------------------------------------------------------------------
// 3: measures

Verdict measures() {
  Verdict v;
  for (std::size_t n : {1u, 2u}) {
    for (double alpha : {0.0, 1.0, 2.5}) {
      SamplerConfig sc;
      sc.n_samples = 1'000'000;
      const auto e = integrate_ball([](const BallPoint&, double) { return 1.0; }, alpha, sc, n);
      const bool ok = e.std_error <= 1e-3 && std::abs(e.value - 1.0) <= 3.0 * e.std_error + 1e-12;
      if (!ok) v.fail(fmt("n=%zu alpha=%g mass %.8f +- %.2e", n, alpha, e.value, e.std_error));
      else v.note(fmt("n=%zu alpha=%g mass %.12f +- %.1e", n, alpha, e.value, e.std_error));
    }
  }
  // dlambda invariance: g = (1-|z|^2)^{n+2} against g o Phi_a.
  for (std::size_t n : {1u, 2u}) {
    for (double r : {0.5, 0.9}) {
      BallPoint a(n);
      a[0] = Complex(r * 0.6, r * 0.8);
      const MobiusMap phi(a);
      const double beta = static_cast<double>(n) + 2.0;
      SamplerConfig s1, s2;
      s1.n_samples = s2.n_samples = 1'000'000;
      s2.seed = s1.seed + 1;
      const auto plain = integrate_lambda([&](const BallPoint&, double w) { return std::pow(w, beta); },
                                          beta, s1, n);
      const auto moved = integrate_lambda(
          [&](const BallPoint& z, double w) { return std::pow(phi.one_minus_phi_sq(z, w), beta); }, beta,
          s2, n);
      const double sig = std::hypot(plain.std_error, moved.std_error);
      const double gap = std::abs(plain.value - moved.value);
      if (!(gap <= 3.0 * sig)) v.fail(fmt("n=%zu |a|=%g: %.6f vs %.6f (%.1f sigma)", n, r, plain.value,
                                           moved.value, gap / sig));
      else v.note(fmt("invariance n=%zu |a|=%g: %.6f vs %.6f (%.2f sigma)", n, r, plain.value, moved.value,
                      gap / sig));
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// 4: n = 1 quadrature oracles

struct DiscFunction {
  std::string text;
  std::function<std::complex<double>(std::complex<double>)> f, df;
};

double omega1(std::complex<double> z) { return 1.0 - std::norm(z); }

// Single-integral kind against dA/pi over |z| <= rho, n = 1.
double single_oracle(FunctionalKind kind, const DiscFunction& F, const SpaceParams& P,
                     std::complex<double> a, double rho) {
  const double p = P.p(), qq = P.q(), s = P.s();
  const double wa = omega1(a);
  return q::disc_integral(
      [&](std::complex<double> z) {
        const double w = omega1(z);
        const double phi = wa * w / std::norm(1.0 - z * std::conj(a));
        double core = 0.0;
        switch (kind) {
          case FunctionalKind::NNorm: core = std::pow(std::abs(F.f(z)), p) * std::pow(w, qq); break;
          case FunctionalKind::I1_Grad:
          case FunctionalKind::I2_InvGrad: core = std::pow(std::abs(F.df(z)) * w, p) * std::pow(w, qq); break;
          case FunctionalKind::I3_Radial: core = std::pow(std::abs(z * F.df(z)) * w, p) * std::pow(w, qq); break;
          default: break;
        }
        return core * std::pow(phi, s) / (w * w);
      },
      rho, {24, 12, 512});
}

// Nested kind at a = 0 as a double integral against (dA/pi)^2, n = 1.
double nested_oracle(FunctionalKind kind, const DiscFunction& F, const SpaceParams& P) {
  const double p = P.p(), al = P.alpha(), g = P.gamma();
  const double c = al + 1.0;  // c_alpha for n = 1
  const double ws = P.q() + P.s();
  return q::disc_pair_integral_rotational([&](std::complex<double> z, std::complex<double> w) {
    const double diff = std::pow(std::abs(F.f(z) - F.f(w)), p);
    if (diff == 0.0) return 0.0;
    const double oz = omega1(z), ow = omega1(w);
    const double outer = std::pow(oz, ws);
    switch (kind) {
      case FunctionalKind::DAlpha:
        return diff * outer * c * c * std::pow(oz * ow, al) / std::pow(std::abs(1.0 - z * std::conj(w)), 2 * g);
      case FunctionalKind::HWEuclid:
      case FunctionalKind::HWProj:
        return diff * outer * c * c * std::pow(oz * ow, al) / std::pow(std::abs(z - w), 2 * g);
      case FunctionalKind::JMeanOsc:
        return diff * outer / std::pow(std::abs(1.0 - z * std::conj(w)), 4.0);
      default: return 0.0;
    }
  });
}

FunctionalConfig acceptance_config(std::size_t samples, std::size_t inner, std::uint64_t seed) {
  FunctionalConfig fc;
  fc.sampler.n_samples = samples;
  fc.sampler.seed = seed;
  fc.inner_samples = inner;
  return fc;
}

Verdict quadrature_equivalence() {
  Verdict v;
  const SpaceParams P(1, 7, 1, 1, 0.5);
  const std::vector<DiscFunction> smooth{
      {"z1", [](auto z) { return z; }, [](auto) { return std::complex<double>(1.0); }},
      {"z1^2", [](auto z) { return z * z; }, [](auto z) { return 2.0 * z; }},
  };
  const DiscFunction singular{"(1 - z1)^-0.5", [](auto z) { return std::pow(1.0 - z, -0.5); },
                              [](auto z) { return 0.5 * std::pow(1.0 - z, -1.5); }};
  const std::vector<FunctionalKind> single{FunctionalKind::NNorm, FunctionalKind::I1_Grad,
                                           FunctionalKind::I2_InvGrad, FunctionalKind::I3_Radial};
  const std::vector<FunctionalKind> nested{FunctionalKind::DAlpha, FunctionalKind::HWEuclid,
                                           FunctionalKind::HWProj, FunctionalKind::JMeanOsc};

  const auto compare = [&](const std::string& label, double mc, double se, double oracle) {
    const double tol = std::max(3.0 * se, 0.01 * std::abs(oracle));
    const std::string line = fmt("%-34s mc %.7g +- %.2g  quad %.7g", label.c_str(), mc, se, oracle);
    if (std::abs(mc - oracle) > tol) v.fail(line);
    else v.note(line);
  };

  for (const auto& F : smooth) {
    const HoloExpr f = parse(F.text, 1);
    for (const double ar : {0.0, 0.5}) {
      const BallPoint a{Complex(ar)};
      for (FunctionalKind k : single) {
        const auto e = functional_at(f, P, a, k, acceptance_config(1u << 20, 1, 0x6e707173ULL));
        compare(F.text + " " + to_string(k) + fmt(" a=%g", ar), e.value, e.std_error,
                single_oracle(k, F, P, Complex(ar), 1.0));
      }
    }
    for (FunctionalKind k : nested) {
      const auto e = functional_at(f, P, BallPoint{Complex(0)}, k, acceptance_config(1u << 20, 32, 0x6e707173ULL));
      compare(F.text + " " + to_string(k) + " a=0", e.value, e.std_error, nested_oracle(k, F, P));
    }
  }

  // Not in the space: the rho = 0.9 truncation is compared and the full
  // estimate must be flagged.
  const HoloExpr g = parse(singular.text, 1);
  const BallPoint origin{Complex(0)};
  for (FunctionalKind k : single) {
    const auto e = functional_at(g, P, origin, k, acceptance_config(1u << 20, 1, 0x6e707173ULL));
    compare(singular.text + " " + to_string(k) + " |z|<=0.9", e.truncated[0], e.truncated_error[0],
            single_oracle(k, singular, P, Complex(0), 0.9));
  }
  for (FunctionalKind k : kAllKinds) {
    const auto e = functional_at(g, P, origin, k, acceptance_config(1u << 20, 32, 0x6e707173ULL));
    if (!e.diverged) v.fail(singular.text + " " + to_string(k) + " not flagged divergent");
    else v.note(singular.text + " " + to_string(k) + " diverged: " + e.divergence_reason);
  }
  return v;
}

// ---------------------------------------------------------------------------
// 5: verdict agreement and onset of the divergent family

const std::vector<double> kFamily{0.05, 0.5, 1.0, 3.0};

std::string family_member(double t) { return fmt("(1 - z1)^-%g", t); }

Verdict verdict_agreement() {
  Verdict v;
  for (std::size_t n : {1u, 2u}) {
    RunConfig cfg;
    cfg.n = n;
    cfg.params = {ParamSpec{7, 1, 1, 0.5}};
    cfg.corpus = default_corpus(n);
    for (double t : kFamily) cfg.corpus.push_back(family_member(t));
    cfg.n_samples = 32768;
    cfg.inner_samples = 32;
    cfg.sup_budget = 24;
    if (!cfg.params[0].resolve(n).hw_valid()) v.fail(fmt("n=%zu parameter set is not hw_valid", n));

    const auto t0 = Clock::now();
    const EquivalenceReport rep = run_equivalence_report(cfg);
    const double secs = seconds_since(t0);

    std::map<std::string, std::map<FunctionalKind, std::string>> verdict;
    for (const auto& row : rep.rows) {
      verdict[row.function][row.kind] =
          row.status != "ok" ? row.status : (row.result.diverged ? "infinite" : "finite");
    }
    std::size_t disagreements = 0;
    for (const auto& text : cfg.corpus) {
      const auto& per_kind = verdict[text];
      const std::string first = per_kind.begin()->second;
      std::string line = fmt("n=%zu %-28s", n, text.c_str());
      bool same = true;
      for (const auto& [kind, vd] : per_kind) {
        same = same && vd == first;
        line += fmt(" %s=%s", to_string(kind), vd == "infinite" ? "inf" : vd == "finite" ? "fin" : vd.c_str());
      }
      if (!same) {
        ++disagreements;
        v.fail(line);
      }
    }
    // Onset: the first t at which each kind turns infinite, and monotonicity.
    std::map<FunctionalKind, double> onset;
    for (FunctionalKind k : kAllKinds) {
      double first_inf = INFINITY;
      bool monotone = true, seen = false;
      for (double t : kFamily) {
        const bool inf = verdict[family_member(t)][k] == "infinite";
        if (inf && !seen) first_inf = t;
        if (seen && !inf) monotone = false;
        seen = seen || inf;
      }
      onset[k] = first_inf;
      if (!monotone) v.fail(fmt("n=%zu %s: verdict not monotone in t", n, to_string(k)));
    }
    const double o = onset.begin()->second;
    for (const auto& [k, t] : onset) {
      if (t != o) v.fail(fmt("n=%zu %s onset t=%g differs from %g", n, to_string(k), t, o));
    }
    const double threshold = (static_cast<double>(n) + 1.0) / 7.0;  // |f|^p ~ |1-z1|^{-n-1}
    v.note(fmt("n=%zu: %zu functions x 8 kinds, %zu disagreements, onset t=%g (critical %.3f), %.0f s", n,
               cfg.corpus.size(), disagreements, o, threshold, secs));
    if (!(o > threshold && o / 10.0 < threshold)) v.fail(fmt("n=%zu onset t=%g not the first grid point above %.3f", n, o, threshold));
    if (secs > 1800.0) v.fail(fmt("n=%zu took %.0f s", n, secs));
  }
  return v;
}

// ---------------------------------------------------------------------------
// 6: J vs D at alpha = 0

Verdict fubini() {
  Verdict v;
  const FunctionalConfig fc;  // default budget: 1e6 evaluations, 64 inner
  for (std::size_t n : {1u, 2u}) {
    const SpaceParams P(n, 7, 1, 1, 0.5);
    const BallPoint origin(n);
    for (const auto& text : default_corpus(n)) {
      const HoloExpr f = parse(text, n);
      const auto j = j_mean_osc_at(f, P, origin, fc);
      const auto d = d_alpha_at(f, P, origin, fc, 0.0);
      const double sig = std::hypot(j.std_error, d.std_error);
      const double gap = std::abs(j.value - d.value);
      std::string line = fmt("n=%zu %-28s J %.6g +- %.2g  D0 %.6g +- %.2g", n, text.c_str(), j.value,
                             j.std_error, d.value, d.std_error);
      if (j.diverged && d.diverged) {
        v.note(line + "  both diverged");
      } else if (j.diverged != d.diverged) {
        v.fail(line + (j.diverged ? "  only J diverged" : "  only D0 diverged"));
      } else if (gap > 3.0 * sig) {
        v.fail(line + fmt("  %.1f sigma", gap / sig));
      } else {
        v.note(line + fmt("  %.2f sigma", sig > 0 ? gap / sig : 0.0));
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// 7: homogeneity on shared seeds

// The default corpus writes its non-polynomials with log, dot or a negative
// power.
bool is_polynomial_text(const std::string& text) {
  return text.find("log") == std::string::npos && text.find("dot") == std::string::npos &&
         text.find("^-") == std::string::npos;
}

Verdict homogeneity() {
  Verdict v;
  const std::size_t n = 2;
  const SpaceParams P(n, 7, 1, 1, 0.5);
  const FunctionalConfig fc = acceptance_config(1u << 14, 16, 0x6e707173ULL);
  const double want = std::pow(2.0, P.p());
  BallPoint a(n);
  a[0] = Complex(0.3, -0.2);
  a[1] = Complex(0.1, 0.4);
  std::size_t compared = 0;
  double worst = 0.0;
  for (const auto& text : default_corpus(n)) {
    const HoloExpr f = parse(text, n);
    if (!is_polynomial_text(text)) continue;
    const HoloExpr f2 = parse("2*(" + text + ")", n);
    for (FunctionalKind k : kAllKinds) {
      for (const BallPoint& at : {BallPoint(n), a}) {
        const double e1 = functional_at(f, P, at, k, fc).value;
        const double e2 = functional_at(f2, P, at, k, fc).value;
        if (e1 == 0.0 && e2 == 0.0) continue;  // constants under difference kinds
        ++compared;
        const double rel = std::abs(e2 / e1 / want - 1.0);
        worst = std::max(worst, rel);
        if (!(rel <= 0.02)) v.fail(fmt("%s %s: ratio %.8g", text.c_str(), to_string(k), e2 / e1));
      }
    }
  }
  v.note(fmt("%zu ratios, worst relative deviation from 2^p %.2e", compared, worst));
  return v;
}

// ---------------------------------------------------------------------------
// 8: byte-identical CSV

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  Verdict v;
  RunConfig cfg;
  cfg.n = 2;
  cfg.params = {ParamSpec{7, 1, 1, 0.5}, ParamSpec{3, 1, 1, std::nullopt}};
  cfg.corpus = {"z1*z2", "(1 - dot(z,[0.6, 0.8i]))^-1", "log(1 - z1)"};
  cfg.n_samples = 8192;
  cfg.inner_samples = 16;
  cfg.sup_budget = 24;
  cfg.override_hw_gate = true;
  std::vector<std::string> csv;
  for (const char* dir : {"acceptance_run_a", "acceptance_run_b"}) {
    cfg.out_dir = dir;
    write_report_files(run_equivalence_report(cfg));
    csv.push_back(slurp(std::filesystem::path(dir) / cfg.csv_name));
  }
  if (csv[0].empty()) v.fail("empty CSV");
  if (csv[0] != csv[1]) v.fail("CSV bytes differ between runs");
  v.note(fmt("%zu bytes, identical: %s", csv[0].size(), csv[0] == csv[1] ? "yes" : "no"));
  return v;
}

}  // namespace

int main() {
  int failed = 0;
  const auto run = [&](int id, const char* title, const std::function<Verdict()>& body) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = body();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    report(id, title, v, seconds_since(t0));
    failed += v.pass ? 0 : 1;
  };
  run(1, "identity battery, 1e4 cases per n", [] { return battery(true, 10'000, 10.0); });
  run(2, "inequality battery, 1e5 cases per n", [] { return battery(false, 100'000, 30.0); });
  run(3, "unit mass of dV_alpha and invariance of dlambda", measures);
  run(4, "n=1 Monte Carlo vs quadrature at p=7,q=1,s=1,alpha=0.5", quadrature_equivalence);
  run(5, "finite/infinite verdicts agree across all kinds", verdict_agreement);
  run(6, "J equals D at alpha=0", fubini);
  run(7, "functional(2f)/functional(f) = 2^p", homogeneity);
  run(8, "equivalence report CSV is byte-identical across runs", determinism);
  std::printf("%d of 8 criteria failed\n", failed);
  return failed;
}
