#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "npqs/ball_geometry.hpp"
#include "npqs/holo_expr.hpp"
#include "npqs/integrate.hpp"

namespace npqs {

/// (n, p, q, s, alpha), validated on construction. Every failure throws
/// ParameterError whose message is the violated constraint verbatim:
/// "q>0", "p>=1", "s>max{0,1-q/n}", "alpha>q+ns-n-1".
class SpaceParams {
 public:
  SpaceParams(std::size_t n, double p, double q, double s, double alpha);

  std::size_t n() const noexcept { return n_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  double s() const noexcept { return s_; }
  double alpha() const noexcept { return alpha_; }
  double gamma() const noexcept { return static_cast<double>(n_) + 1.0 + alpha_; }

  /// q + ns - n - 1, the dV exponent of the N(p,q,s) weight against dlambda.
  double weight_exponent() const noexcept;

  /// p >= 2(n+1+alpha).
  bool hw_valid() const noexcept;
  /// p > 2(q+ns).
  bool hw_remark() const noexcept;

  std::string to_string() const;

 private:
  std::size_t n_;
  double p_, q_, s_, alpha_;
};

enum class FunctionalKind {
  NNorm,
  I1_Grad,
  I2_InvGrad,
  I3_Radial,
  DAlpha,
  HWEuclid,
  HWProj,
  JMeanOsc,
};

inline constexpr std::array<FunctionalKind, 8> kAllKinds{
    FunctionalKind::NNorm,  FunctionalKind::I1_Grad,  FunctionalKind::I2_InvGrad,
    FunctionalKind::I3_Radial, FunctionalKind::DAlpha, FunctionalKind::HWEuclid,
    FunctionalKind::HWProj, FunctionalKind::JMeanOsc};

const char* to_string(FunctionalKind kind);
/// Throws ParameterError for an unknown name.
FunctionalKind parse_functional_kind(std::string_view name);

/// True for the kinds built on f(z) - f(w).
bool is_difference_kind(FunctionalKind kind);
/// True for the kinds estimated by nested (outer x inner) sampling.
bool is_nested_kind(FunctionalKind kind);

struct FunctionalConfig {
  /// n_samples is the total evaluation budget of one at-a estimate; nested
  /// kinds use n_samples / inner_samples outer points.
  SamplerConfig sampler;
  std::size_t inner_samples = 64;
  double r_max = kDefaultRMax;
  std::size_t sup_budget = kDefaultSupBudget;
  bool override_hw_gate = false;
  /// Concentrate samples near the boundary point where |f| is largest.
  bool focus = true;
  /// sup_functional stops probing once a probe has diverged.
  bool stop_on_divergence = true;
};

/// F_z(w) = f(z) - f(Phi_z(w)).
Complex centered_pullback(const HoloExpr& f, const BallPoint& z, const BallPoint& w);

/// Boundary direction zeta maximizing |f(0.999 zeta)|: best of +-e_k, +-i e_k
/// and 32 seeded random directions, then refined by seeded local steps.
/// nullopt when |f| takes the same value at every starting candidate.
std::optional<CVector> find_focus(const HoloExpr& f, std::uint64_t seed);

/// integral |f|^p (1-|z|^2)^q (1-|Phi_a(z)|^2)^{ns} dlambda(z).
IntegralEstimate n_norm_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                           const FunctionalConfig& cfg);

/// I1 (|grad f|, weight p+q), I2 (invariant gradient, weight q) or I3 (|Rf|,
/// weight p+q), each against (1-|Phi_a(z)|^2)^{ns} dlambda.
IntegralEstimate gradient_functional_at(const HoloExpr& f, const SpaceParams& P,
                                        const BallPoint& a, FunctionalKind kind,
                                        const FunctionalConfig& cfg);

/// Double integral of |f(z)-f(w)|^p / |1-<z,w>|^{2 gamma} (1-|z|^2)^q
/// (1-|Phi_a(z)|^2)^{ns} dV_alpha(z) dV_alpha(w). `alpha` overrides P.alpha()
/// without the alpha > q+ns-n-1 gate (used for the alpha = 0 comparison).
IntegralEstimate d_alpha_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                            const FunctionalConfig& cfg,
                            std::optional<double> alpha = std::nullopt);

/// Holland-Walsh functional with kernel |z-w|^{2 gamma}. Requires hw_valid,
/// or hw_remark together with cfg.override_hw_gate.
IntegralEstimate hw_euclid_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                              const FunctionalConfig& cfg);

/// Same with the kernel |w - P_w z - s_w Q_w z|^{2 gamma}.
IntegralEstimate hw_proj_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                            const FunctionalConfig& cfg);

/// MO_p(f)(z), the p-th root of the inner integral.
IntegralEstimate mean_oscillation_pow(const HoloExpr& f, const BallPoint& z, double p,
                                      const FunctionalConfig& cfg);
double mean_oscillation(const HoloExpr& f, const BallPoint& z, double p,
                        const FunctionalConfig& cfg);

/// integral MO_p^p(f)(z) (1-|z|^2)^q (1-|Phi_a(z)|^2)^{ns} dlambda(z).
IntegralEstimate j_mean_osc_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                               const FunctionalConfig& cfg);

/// Dispatches to the at-a functional of the given kind.
IntegralEstimate functional_at(const HoloExpr& f, const SpaceParams& P, const BallPoint& a,
                               FunctionalKind kind, const FunctionalConfig& cfg);

/// Throws ParameterError if `kind` cannot run under P and cfg.
void check_kind_allowed(const SpaceParams& P, FunctionalKind kind, const FunctionalConfig& cfg);

struct ProbeRow {
  BallPoint a;
  IntegralEstimate estimate;
};

struct SupFunctionalResult {
  double value = 0.0;  // lower bound for the supremum
  BallPoint a_star;
  IntegralEstimate at_star;
  bool diverged = false;
  std::vector<ProbeRow> probes;
};

SupFunctionalResult sup_functional(const HoloExpr& f, const SpaceParams& P, FunctionalKind kind,
                                   const FunctionalConfig& cfg);

}  // namespace npqs
