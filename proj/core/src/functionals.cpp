#include "npqs/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "npqs/errors.hpp"
#include "npqs/expr_parser.hpp"

namespace npqs {

SpaceParams::SpaceParams(std::size_t n, double p, double q, double s, double alpha)
    : n_(n), p_(p), q_(q), s_(s), alpha_(alpha) {
  if (n < 1 || n > kMaxDimension) throw ParameterError("1<=n<=8");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("p>=1");
  if (!(q > 0.0) || !std::isfinite(q)) throw ParameterError("q>0");
  const double nd = static_cast<double>(n);
  if (!(s > std::max(0.0, 1.0 - q / nd)) || !std::isfinite(s)) {
    throw ParameterError("s>max{0,1-q/n}");
  }
  if (!(alpha > weight_exponent()) || !std::isfinite(alpha)) {
    throw ParameterError("alpha>q+ns-n-1");
  }
}

double SpaceParams::weight_exponent() const noexcept {
  const double nd = static_cast<double>(n_);
  return q_ + nd * s_ - nd - 1.0;
}

bool SpaceParams::hw_valid() const noexcept { return p_ >= 2.0 * gamma(); }

bool SpaceParams::hw_remark() const noexcept {
  return p_ > 2.0 * (q_ + static_cast<double>(n_) * s_);
}

std::string SpaceParams::to_string() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n=%zu p=%g q=%g s=%g alpha=%g", n_, p_, q_, s_, alpha_);
  return buf;
}

const char* to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::NNorm: return "NNorm";
    case FunctionalKind::I1_Grad: return "I1_Grad";
    case FunctionalKind::I2_InvGrad: return "I2_InvGrad";
    case FunctionalKind::I3_Radial: return "I3_Radial";
    case FunctionalKind::DAlpha: return "DAlpha";
    case FunctionalKind::HWEuclid: return "HWEuclid";
    case FunctionalKind::HWProj: return "HWProj";
    case FunctionalKind::JMeanOsc: return "JMeanOsc";
  }
  return "?";
}

FunctionalKind parse_functional_kind(std::string_view name) {
  for (FunctionalKind k : kAllKinds) {
    if (name == to_string(k)) return k;
  }
  throw ParameterError("unknown functional kind '" + std::string(name) + "'");
}

bool is_difference_kind(FunctionalKind kind) {
  return kind == FunctionalKind::DAlpha || kind == FunctionalKind::HWEuclid ||
         kind == FunctionalKind::HWProj || kind == FunctionalKind::JMeanOsc;
}

bool is_nested_kind(FunctionalKind kind) { return is_difference_kind(kind); }

Complex centered_pullback(const HoloExpr& f, const BallPoint& z, const BallPoint& w) {
  const MobiusMap phi_z(z);
  return eval(f, z) - eval(f, phi_z.apply(w));
}

std::optional<CVector> find_focus(const HoloExpr& f, std::uint64_t seed) {
  const std::size_t n = f.dimension();
  const auto size_at = [&](const CVector& c) {
    try {
      const double v = std::abs(eval(f, c * Complex(0.999)));
      return std::isfinite(v) ? v : -1.0;
    } catch (const EvalError&) {
      return -1.0;
    }
  };

  std::vector<CVector> candidates;
  for (std::size_t k = 0; k < n; ++k) {
    const CVector e = CVector::basis(n, k);
    candidates.push_back(e);
    candidates.push_back(-e);
    candidates.push_back(e * Complex(0.0, 1.0));
    candidates.push_back(e * Complex(0.0, -1.0));
  }
  for (std::uint64_t j = 0; j < 32; ++j) {
    SampleStream stream(seed, j, kTagFocus);
    CVector d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = Complex(stream.normal(), stream.normal());
    candidates.push_back(d * Complex(1.0 / d.norm()));
  }

  CVector best = candidates.front();
  double best_abs = -1.0, low = INFINITY;
  for (const CVector& c : candidates) {
    const double v = size_at(c);
    if (v < 0.0) continue;
    low = std::min(low, v);
    if (v > best_abs) {
      best_abs = v;
      best = c;
    }
  }
  if (best_abs < 0.0 || best_abs <= low * (1.0 + 1e-12)) return std::nullopt;

  // Random local refinement with shrinking steps.
  std::uint64_t j = 0;
  for (const double step : {0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
    for (int t = 0; t < 32; ++t, ++j) {
      SampleStream stream(seed, j, kTagFocus | 1u);
      CVector d = best;
      for (std::size_t k = 0; k < n; ++k) d[k] += step * Complex(stream.normal(), stream.normal());
      d = d * Complex(1.0 / d.norm());
      const double v = size_at(d);
      if (v > best_abs) {
        best_abs = v;
        best = d;
      }
    }
  }
  return best;
}

namespace {

double abs_pow(Complex z, double p) {
  const double a = std::abs(z);
  return a == 0.0 ? 0.0 : std::pow(a, p);
}

double vec_norm(const CVector& v) { return v.norm(); }

std::size_t outer_count(const FunctionalConfig& cfg) {
  return std::max<std::size_t>(1, cfg.sampler.n_samples / std::max<std::size_t>(1, cfg.inner_samples));
}

CVector unit(const CVector& v) { return v * Complex(1.0 / v.norm()); }

// Outer integral X(z) (1-|z|^2)^q (1-|Phi_a(z)|^2)^{ns} dlambda(z), sampled
// in the recentered variable v = Phi_a(z), where the last factor is
// (1-|v|^2)^{ns}. Truncation applies to |z|, not |v|: the recentering
// moves fixed |v| shells to very different depths in z when |a| is large.
template <typename X>
IntegralEstimate outer_lambda(const SpaceParams& P, const BallPoint& a,
                              const FunctionalConfig& cfg, std::size_t n_outer,
                              std::uint32_t tag, const std::optional<CVector>& zeta, X&& x) {
  const std::size_t n = P.n();
  if (a.dimension() != n) throw DomainError("a dimension mismatch");
  if (!a.is_interior()) throw DomainError("a outside the ball");
  const MobiusMap phi_a(a);
  const double tilt = std::max(kMinTilt, P.weight_exponent());
  // v = a is the image of z = 0, where interior mass sits once |a| is large.
  const std::optional<CVector> focus_v =
      zeta ? std::optional<CVector>(unit(phi_a.apply_unchecked(*zeta))) : std::nullopt;
  const BallSampler sampler(n, tilt, focus_v, a, cfg.sampler.radial_mode);
  const double q = P.q();
  const double exponent = P.weight_exponent();

  return run_estimator(n_outer, cfg.sampler, [&](std::uint64_t i) {
    SampleStream stream(cfg.sampler.seed, i, tag);
    const auto d = sampler.draw(stream);
    const double omega_z = phi_a.one_minus_phi_sq(d.z, d.omega);
    const BallPoint z = phi_a.apply_unchecked(d.z);
    const double w = sampler.dv_weight(d, exponent) * std::pow(omega_z / d.omega, q);
    SampleValue xv;
    try {
      xv = x(i, z, omega_z);
    } catch (const EvalError& e) {
      throw SampleError(e.what(), i, to_string(z));
    }
    SampleValue out;
    for (std::size_t k = 0; k < 3; ++k) {
      out.partial[k] = omega_z >= kTruncationOmega[k] ? xv.partial[k] * w : 0.0;
    }
    out.partial[3] = xv.partial[3] * w;
    return out;
  });
}

SampleValue constant_sample(double v) {
  SampleValue s;
  s.partial.fill(v);
  return s;
}

// |omega P_z u + s_z Q_z u| = |1 - <z,u>| |z - Phi_z(u)|.
double displacement_numerator(const BallPoint& z, double omega_z, const BallPoint& u) {
  const double zz = z.norm_sq();
  if (zz == 0.0) return u.norm();
  const Complex c = inner(u, z) / zz;
  const double s = std::sqrt(omega_z);
  double acc = 0.0;
  for (std::size_t k = 0; k < z.dimension(); ++k) {
    const Complex par = c * z[k];
    acc += std::norm(omega_z * par + s * (u[k] - par));
  }
  return std::sqrt(acc);
}

enum class InnerKernel { DAlpha, HWEuclid, HWProj, MeanOsc };

struct InnerSetup {
  InnerKernel kernel;
  double alpha;  // measure of u; 0 for MeanOsc
  double gamma;
  double p;
  std::size_t samples;
  std::uint32_t tag;
};

// Average over u of the inner integrand at fixed z, with per-truncation
// partials (|u| <= rho). The result integrates against dV_alpha(u) (or dV for
// the mean oscillation) and already contains the kernel factors.
SampleValue inner_integral(const HoloExpr& f, const BallPoint& z, double omega_z,
                           const InnerSetup& in, std::uint64_t outer_index,
                           const FunctionalConfig& cfg, const std::optional<CVector>& zeta) {
  const std::size_t n = z.dimension();
  const MobiusMap phi_z(z, omega_z);
  const double tilt = in.kernel == InnerKernel::MeanOsc ? 0.0 : in.alpha;
  const BallSampler sampler =
      zeta ? BallSampler(n, tilt, unit(phi_z.apply_unchecked(*zeta)), cfg.sampler.radial_mode)
           : BallSampler(n, tilt, cfg.sampler.radial_mode);
  const Complex fz = eval(f, z);
  const double np1 = static_cast<double>(n) + 1.0;

  SampleValue acc;
  for (std::size_t j = 0; j < in.samples; ++j) {
    SampleStream stream(cfg.sampler.seed, outer_index, in.tag | static_cast<std::uint32_t>(j));
    const auto d = sampler.draw(stream);
    const BallPoint w = phi_z.apply_unchecked(d.z);
    const double diff = abs_pow(fz - eval(f, w), in.p);
    if (diff == 0.0) continue;
    double v = 0.0;
    switch (in.kernel) {
      case InnerKernel::DAlpha:
        v = diff * sampler.dv_alpha_weight(d, in.alpha);
        break;
      case InnerKernel::HWProj:
        v = diff * std::pow(1.0 - d.omega, -in.gamma) * sampler.dv_alpha_weight(d, in.alpha);
        break;
      case InnerKernel::HWEuclid: {
        const double ratio = omega_z / displacement_numerator(z, omega_z, d.z);
        v = diff * std::pow(ratio, 2.0 * in.gamma) * sampler.dv_alpha_weight(d, in.alpha);
        break;
      }
      case InnerKernel::MeanOsc: {
        // Kernel in w and the Jacobian of w = Phi_z(u), evaluated separately.
        const double kernel = std::pow(omega_z / std::norm(1.0 - inner(z, w)), np1);
        const double jacobian = std::pow(omega_z / std::norm(1.0 - inner(d.z, z)), np1);
        v = diff * kernel * jacobian * sampler.dv_weight(d, 0.0);
        break;
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      if (d.omega >= kTruncationOmega[k]) acc.partial[k] += v;
    }
    acc.partial[3] += v;
  }
  for (double& x : acc.partial) x /= static_cast<double>(in.samples);
  return acc;
}

std::optional<CVector> focus_for(const HoloExpr& f, const FunctionalConfig& cfg) {
  if (!cfg.focus) return std::nullopt;
  return find_focus(f, cfg.sampler.seed);
}

IntegralEstimate nested_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                           const FunctionalConfig& cfg, InnerKernel kernel, double alpha) {
  if (cfg.inner_samples == 0 || cfg.inner_samples >= (1u << 24) - 1) {
    throw ParameterError("1<=inner_samples<2^24");
  }
  const auto zeta = focus_for(f, cfg);
  const double c = kernel == InnerKernel::MeanOsc ? 1.0 : c_alpha(P.n(), alpha);
  const bool mo = kernel == InnerKernel::MeanOsc;
  InnerSetup in{kernel, alpha, static_cast<double>(P.n()) + 1.0 + alpha, P.p(),
                cfg.inner_samples, mo ? kTagMeanOsc + 1 : kTagInner};
  return outer_lambda(P, a, cfg, outer_count(cfg), mo ? kTagMeanOsc : kTagOuter, zeta,
                      [&](std::uint64_t i, const BallPoint& z, double omega_z) {
                        SampleValue s = inner_integral(f, z, omega_z, in, i, cfg, zeta);
                        for (double& x : s.partial) x *= c;
                        return s;
                      });
}

}  // namespace

IntegralEstimate n_norm_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                           const FunctionalConfig& cfg) {
  const auto zeta = focus_for(f, cfg);
  const double p = P.p();
  return outer_lambda(P, a, cfg, cfg.sampler.n_samples, kTagOuter, zeta,
                      [&](std::uint64_t, const BallPoint& z, double) {
                        return constant_sample(abs_pow(eval(f, z), p));
                      });
}

IntegralEstimate gradient_functional_at(const HoloExpr& f, const SpaceParams& P,
                                        const BallPoint& a, FunctionalKind kind,
                                        const FunctionalConfig& cfg) {
  const auto zeta = focus_for(f, cfg);
  const double p = P.p();
  const GradExpr grad = gradient(f);
  switch (kind) {
    case FunctionalKind::I1_Grad:
      return outer_lambda(P, a, cfg, cfg.sampler.n_samples, kTagOuter, zeta,
                          [&](std::uint64_t, const BallPoint& z, double omega) {
                            return constant_sample(
                                std::pow(vec_norm(grad.eval(z)) * omega, p));
                          });
    case FunctionalKind::I2_InvGrad:
      return outer_lambda(P, a, cfg, cfg.sampler.n_samples, kTagOuter, zeta,
                          [&](std::uint64_t, const BallPoint& z, double omega) {
                            return constant_sample(
                                std::pow(vec_norm(invariant_gradient(grad, z, omega)), p));
                          });
    case FunctionalKind::I3_Radial: {
      const HoloExpr rf = radial_derivative(f);
      return outer_lambda(P, a, cfg, cfg.sampler.n_samples, kTagOuter, zeta,
                          [&](std::uint64_t, const BallPoint& z, double omega) {
                            return constant_sample(abs_pow(eval(rf, z) * omega, p));
                          });
    }
    default:
      throw ParameterError(std::string("not a gradient functional: ") + to_string(kind));
  }
}

IntegralEstimate d_alpha_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                            const FunctionalConfig& cfg, std::optional<double> alpha) {
  return nested_at(f, P, a, cfg, InnerKernel::DAlpha, alpha.value_or(P.alpha()));
}

void check_kind_allowed(const SpaceParams& P, FunctionalKind kind, const FunctionalConfig& cfg) {
  if (kind != FunctionalKind::HWEuclid && kind != FunctionalKind::HWProj) return;
  if (P.hw_valid()) return;
  if (!cfg.override_hw_gate) throw ParameterError("p>=2(n+1+alpha)");
  if (!P.hw_remark()) throw ParameterError("p>2(q+ns)");
}

IntegralEstimate hw_euclid_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                              const FunctionalConfig& cfg) {
  check_kind_allowed(P, FunctionalKind::HWEuclid, cfg);
  return nested_at(f, P, a, cfg, InnerKernel::HWEuclid, P.alpha());
}

IntegralEstimate hw_proj_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                            const FunctionalConfig& cfg) {
  check_kind_allowed(P, FunctionalKind::HWProj, cfg);
  return nested_at(f, P, a, cfg, InnerKernel::HWProj, P.alpha());
}

IntegralEstimate mean_oscillation_pow(const HoloExpr& f, const BallPoint& z, double p,
                                      const FunctionalConfig& cfg) {
  if (!(p >= 1.0)) throw ParameterError("p>=1");
  if (!z.is_interior()) throw DomainError("z outside the ball");
  const auto zeta = focus_for(f, cfg);
  const double omega_z = 1.0 - z.norm_sq();
  const InnerSetup in{InnerKernel::MeanOsc, 0.0, static_cast<double>(z.dimension()) + 1.0, p, 1,
                      kTagMeanOsc + 1};
  IntegralEstimate est = run_estimator(cfg.sampler.n_samples, cfg.sampler, [&](std::uint64_t i) {
    try {
      return inner_integral(f, z, omega_z, in, i, cfg, zeta);
    } catch (const EvalError& e) {
      throw SampleError(e.what(), i, to_string(z));
    }
  });
  return est;
}

double mean_oscillation(const HoloExpr& f, const BallPoint& z, double p,
                        const FunctionalConfig& cfg) {
  return std::pow(std::max(0.0, mean_oscillation_pow(f, z, p, cfg).value), 1.0 / p);
}

IntegralEstimate j_mean_osc_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                               const FunctionalConfig& cfg) {
  return nested_at(f, P, a, cfg, InnerKernel::MeanOsc, 0.0);
}

IntegralEstimate functional_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                               FunctionalKind kind, const FunctionalConfig& cfg) {
  if (f.dimension() != P.n()) throw DomainError("expression dimension differs from n");
  switch (kind) {
    case FunctionalKind::NNorm: return n_norm_at(f, P, a, cfg);
    case FunctionalKind::I1_Grad:
    case FunctionalKind::I2_InvGrad:
    case FunctionalKind::I3_Radial: return gradient_functional_at(f, P, a, kind, cfg);
    case FunctionalKind::DAlpha: return d_alpha_at(f, P, a, cfg);
    case FunctionalKind::HWEuclid: return hw_euclid_at(f, P, a, cfg);
    case FunctionalKind::HWProj: return hw_proj_at(f, P, a, cfg);
    case FunctionalKind::JMeanOsc: return j_mean_osc_at(f, P, a, cfg);
  }
  throw ParameterError("unknown functional kind");
}

SupFunctionalResult sup_functional(const HoloExpr& f, const SpaceParams& P, FunctionalKind kind,
                                   const FunctionalConfig& cfg) {
  check_kind_allowed(P, kind, cfg);
  SupFunctionalResult out;
  const auto F = [&](const BallPoint& a) {
    IntegralEstimate est = functional_at(f, P, a, kind, cfg);
    out.diverged = out.diverged || est.diverged;
    const double v = est.value;
    out.probes.push_back({a, std::move(est)});
    return v;
  };
  const auto stop = [&] { return cfg.stop_on_divergence && out.diverged; };
  const SupResult r = sup_search(F, P.n(), cfg.r_max, cfg.sup_budget, cfg.sampler.seed, stop);

  out.value = r.value;
  out.a_star = r.a_star;
  double best = -std::numeric_limits<double>::infinity();
  for (const ProbeRow& row : out.probes) {
    const double v = std::isnan(row.estimate.value) ? -std::numeric_limits<double>::infinity()
                                                    : row.estimate.value;
    if (&row == &out.probes.front() || v > best) {
      best = v;
      out.at_star = row.estimate;
    }
  }
  return out;
}

}  // namespace npqs
