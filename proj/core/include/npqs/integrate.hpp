#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "npqs/ball_geometry.hpp"
#include "npqs/random.hpp"

namespace npqs {

enum class RadialMode {
  UniformVolume,  // r = U^{1/(2n)}
  BetaTilt,       // |z|^2 ~ Beta(n, tilt + 1), weights corrected
};

const char* to_string(RadialMode mode);

struct SamplerConfig {
  std::uint64_t seed = 0x6e707173ULL;
  std::size_t n_samples = 1'000'000;
  RadialMode radial_mode = RadialMode::BetaTilt;
  /// Work units per quarter of the sample range. Part of the result's
  /// identity; `workers` is not.
  std::size_t shards = 8;
  std::size_t workers = 1;
};

/// Truncation radii used by the divergence diagnostic.
inline constexpr std::array<double, 3> kTruncationRadii{0.9, 0.99, 0.999};
inline constexpr std::size_t kPartials = kTruncationRadii.size() + 1;
/// 1 - rho^2 for each truncation radius.
inline constexpr std::array<double, 3> kTruncationOmega{
    1.0 - kTruncationRadii[0] * kTruncationRadii[0],
    1.0 - kTruncationRadii[1] * kTruncationRadii[1],
    1.0 - kTruncationRadii[2] * kTruncationRadii[2]};

/// Ratio of successive truncation increments treated as divergent growth.
inline constexpr double kTruncationGrowth = 2.0;

struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  bool diverged = false;
  std::string divergence_reason;

  /// Estimates restricted to sampled radius <= rho for each kTruncationRadii.
  std::array<double, 3> truncated{};
  std::array<double, 3> truncated_error{};  // standard errors of `truncated`
  /// Value and error on the first N/4 and N/2 samples and on all N.
  std::array<double, 3> prefix_value{};
  std::array<double, 3> prefix_error{};
};

/// One sample's contribution: partial[k] for k < 3 is the contribution with
/// every sampled radius <= kTruncationRadii[k]; partial[3] is the full value.
struct SampleValue {
  std::array<double, kPartials> partial{};

  static SampleValue scalar(double value, double one_minus_r_sq);
};

/// Runs n_samples calls of `fn(index)` in the fixed shard layout of `cfg`
/// and reduces deterministically. `fn` must be pure in its index.
using SampleFn = std::function<SampleValue(std::uint64_t index)>;
IntegralEstimate run_estimator(std::size_t n_samples, const SamplerConfig& cfg,
                               const SampleFn& fn);

/// Applies the doubling and truncation tests to an estimate in place.
void apply_divergence_tests(IntegralEstimate& est);

// Stream tags keep the draws of different roles independent.
inline constexpr std::uint32_t kTagOuter = 0x01000000u;
inline constexpr std::uint32_t kTagInner = 0x02000000u;
inline constexpr std::uint32_t kTagPair = 0x03000000u;
inline constexpr std::uint32_t kTagMeanOsc = 0x04000000u;
inline constexpr std::uint32_t kTagSup = 0x05000000u;
inline constexpr std::uint32_t kTagFocus = 0x06000000u;

/// Uniform point with respect to normalized volume: Gaussian direction in
/// R^{2n}, radius U^{1/(2n)}.
BallPoint sample_uniform_ball(std::size_t n, SampleStream& stream);

/// Standard gamma variate (Marsaglia-Tsang), shape > 0.
double sample_gamma(double shape, SampleStream& stream);

/// c_alpha = Gamma(n+alpha+1) / (n! Gamma(alpha+1)). Throws for alpha <= -1.
double c_alpha(std::size_t n, double alpha);

/// c_alpha (1-|z|^2)^alpha.
double weight_dV_alpha(const BallPoint& z, double alpha);

/// Draws from dV_c (normalized), optionally mixed with its push-forwards
/// under Phi_{a_j}, a_j = (1 - 10^-j) zeta, j = 1..4, to resolve a boundary
/// singularity at zeta:
///   density = 1/2 + sum_j 1/8 K_{a_j},  K_a = ((1-|a|^2)/|1-<x,a>|^2)^{n+1+c}.
class BallSampler {
 public:
  struct Draw {
    BallPoint z;
    double omega = 1.0;       // 1 - |z|^2, accurate near the sphere
    double inv_mixture = 1.0; // 1 / (density w.r.t. dV_c)
  };

  BallSampler(std::size_t n, double tilt, RadialMode mode = RadialMode::BetaTilt);
  BallSampler(std::size_t n, double tilt, const CVector& focus,
              RadialMode mode = RadialMode::BetaTilt);
  /// Adds the push-forward of dV_c under Phi_origin, which concentrates near
  /// `origin`. Weights: base 1/4, origin 1/4, focus 1/8 each (or base 1/2,
  /// origin 1/2 without a focus). A zero origin adds nothing.
  BallSampler(std::size_t n, double tilt, const std::optional<CVector>& focus,
              const BallPoint& origin, RadialMode mode = RadialMode::BetaTilt);

  std::size_t dimension() const noexcept { return n_; }
  double tilt() const noexcept { return tilt_; }
  bool has_focus() const noexcept { return !centers_.empty(); }

  Draw draw(SampleStream& stream) const;

  /// Multiplier turning h(z) into an unbiased sample of
  /// integral h(z) (1-|z|^2)^exponent dV(z).
  double dv_weight(const Draw& d, double exponent) const;

  /// Multiplier for integral h dV_alpha; exactly inv_mixture when the
  /// sampler already draws from dV_alpha.
  double dv_alpha_weight(const Draw& d, double alpha) const;

 private:
  Draw draw_base(SampleStream& stream) const;

  std::size_t n_;
  double tilt_;
  RadialMode mode_;
  double norm_;  // c_tilt
  double base_weight_ = 1.0;
  std::vector<MobiusMap> centers_;
  std::vector<double> weights_;
};

/// Tilt clamp: sampling exponents below this are raised to it.
inline constexpr double kMinTilt = -0.9;

using BallIntegrand = std::function<double(const BallPoint& z, double one_minus_z_sq)>;
using PairIntegrand = std::function<double(const BallPoint& z, const BallPoint& w)>;

/// Estimate of integral g dV_alpha. BetaTilt draws the radius from
/// r^{2n-1}(1-r^2)^alpha, so g = 1 has zero variance.
IntegralEstimate integrate_ball(const BallIntegrand& g, double alpha, const SamplerConfig& cfg,
                                std::size_t n);

/// Estimate of integral g dlambda, dlambda = (1-|z|^2)^{-n-1} dV. The
/// integrand declares its boundary order beta (g = O((1-|z|^2)^beta)); the
/// radial density uses exponent beta - n - 1.
IntegralEstimate integrate_lambda(const BallIntegrand& g, double boundary_order,
                                  const SamplerConfig& cfg, std::size_t n,
                                  std::optional<CVector> focus = std::nullopt);

enum class DoubleMode { Plain, Desingularized };

/// Estimate of the double integral of G against dV_alpha x dV_alpha.
/// Desingularized mode samples (z, u) and integrates G(z, Phi_z(u)) k_z(u),
/// using dV_alpha(Phi_z(u)) = k_z(u) dV_alpha(u), gamma = n+1+alpha.
IntegralEstimate double_integral(const PairIntegrand& G, double alpha, const SamplerConfig& cfg,
                                 std::size_t n, DoubleMode mode);

struct SupProbe {
  BallPoint a;
  double value;
};

struct SupResult {
  BallPoint a_star;
  double value = 0.0;
  std::vector<SupProbe> probes;  // in evaluation order
};

inline constexpr double kDefaultRMax = 0.95;
inline constexpr std::size_t kDefaultSupBudget = 264;

/// Number of coarse-stage evaluations for a given dimension and budget.
std::size_t sup_coarse_count(std::size_t n, std::size_t budget);

/// Maximizes F over |a| <= r_max. Coarse stage: a = 0, +-r e_k for
/// r in {0.3, 0.6, 0.8, r_max}, and budget/4 seeded random directions; then
/// Nelder-Mead on the 2n real coordinates with radial clamping. The value is
/// a lower bound for the supremum. `stop`, if set, is polled after every
/// evaluation and ends the search early.
SupResult sup_search(const std::function<double(const BallPoint&)>& F, std::size_t n,
                     double r_max = kDefaultRMax, std::size_t budget = kDefaultSupBudget,
                     std::uint64_t seed = 0, const std::function<bool()>& stop = {});

}  // namespace npqs
