#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "npqs/ball_geometry.hpp"
#include "npqs/errors.hpp"
#include "support/generators.hpp"

// Randomized invariants of the automorphism group. Each property draws its
// own points from a fixed seed; the failure message prints the offending
// points.

namespace npqs {
namespace {

using testing::Gen;

constexpr int kCases = 20'000;

// 1 - |z|^2 computed as (1-|z|)(1+|z|) from the norm; an oracle separate
// from the library's complement bookkeeping.
double omega(const BallPoint& z) {
  const double r = z.norm();
  return (1.0 - r) * (1.0 + r);
}

double dist(const CVector& a, const CVector& b) { return (a - b).norm(); }

TEST(Property, Involution) {
  Gen gen(1);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint a = gen.ball_point(n), z = gen.ball_point(n);
    const MobiusMap phi(a);
    const BallPoint back = phi.apply_unchecked(phi.apply_unchecked(z));
    ASSERT_LT(dist(back, z), 1e-9 / std::min(1.0, omega(a)) + 1e-9)
        << "a=" << to_string(a) << " z=" << to_string(z);
  }
}

TEST(Property, FixesAndSwapsCentre) {
  Gen gen(2);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint a = gen.ball_point(n);
    const MobiusMap phi(a);
    ASSERT_LT(dist(phi.apply(BallPoint(n)), a), 1e-12) << to_string(a);
    ASSERT_LT(phi.apply(a).norm(), 1e-9) << to_string(a);
  }
}

TEST(Property, ProductFormMatchesDirectNorm) {
  Gen gen(3);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint a = gen.ball_point(n, 0.99), z = gen.ball_point(n, 0.99);
    const MobiusMap phi(a);
    const double direct = 1.0 - std::pow(phi.apply(z).norm(), 2);
    const double product = omega(a) * omega(z) / std::norm(1.0 - inner(z, a));
    ASSERT_NEAR(phi.one_minus_phi_sq(z), product, 1e-12 * product + 1e-15);
    ASSERT_NEAR(direct, product, 1e-9) << "a=" << to_string(a) << " z=" << to_string(z);
  }
}

TEST(Property, PseudometricIsSymmetricAndMobiusInvariant) {
  Gen gen(4);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint z = gen.ball_point(n, 0.99), w = gen.ball_point(n, 0.99), a = gen.ball_point(n, 0.9);
    const double d = bergman_pseudometric(z, w);
    ASSERT_NEAR(d, bergman_pseudometric(w, z), 1e-12);
    ASSERT_LE(d, 1.0);
    const MobiusMap phi(a);
    ASSERT_NEAR(d, bergman_pseudometric(phi.apply(z), phi.apply(w)), 1e-7)
        << "z=" << to_string(z) << " w=" << to_string(w) << " a=" << to_string(a);
  }
}

TEST(Property, ReciprocalIdentity) {
  Gen gen(5);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint z = gen.ball_point(n, 0.99), w = gen.ball_point(n, 0.99);
    const double g = gen.uniform(0.5, 4.0);
    const auto [lhs, rhs] = reciprocal_identity_sides(z, w, g);
    ASSERT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs)) << "z=" << to_string(z) << " w=" << to_string(w) << " g=" << g;
  }
}

TEST(Property, DisplacementBounds) {
  Gen gen(6);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint z = gen.ball_point(n), w = gen.ball_point(n);
    const DisplacementBounds b = displacement_bounds(z, w);
    const double disp = dist(z, MobiusMap(z).apply(w));
    ASSERT_NEAR(b.displacement, disp, 1e-9);
    ASSERT_LE(b.lower, disp * (1.0 + 1e-9) + 1e-15) << "z=" << to_string(z) << " w=" << to_string(w);
    ASSERT_LE(disp * disp, b.upper_sq * (1.0 + 1e-9)) << "z=" << to_string(z) << " w=" << to_string(w);
  }
}

TEST(Property, ProjectionKernelFactorization) {
  // |w - P_w z - s_w Q_w z| = |Phi_w(z)| |1 - <z,w>|
  Gen gen(7);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint z = gen.ball_point(n), w = gen.ball_point(n);
    const double want = MobiusMap(w).apply(z).norm() * std::abs(1.0 - inner(z, w));
    ASSERT_NEAR(projection_kernel(z, w), want, 1e-10) << "z=" << to_string(z) << " w=" << to_string(w);
    if (n == 1) ASSERT_NEAR(projection_kernel(z, w), dist(z, w), 1e-12);
  }
}

TEST(Property, KernelDominance) {
  // |w - P_w z - s_w Q_w z| <= min(|z - w|, |1 - <z,w>|)
  Gen gen(8);
  for (int i = 0; i < kCases; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(2, 3));
    const BallPoint z = gen.ball_point(n), w = gen.ball_point(n);
    const double pk = projection_kernel(z, w);
    ASSERT_LE(pk, dist(z, w) * (1.0 + 1e-12) + 1e-15) << "z=" << to_string(z) << " w=" << to_string(w);
    ASSERT_LE(pk, std::abs(1.0 - inner(z, w)) * (1.0 + 1e-12)) << "z=" << to_string(z) << " w=" << to_string(w);
  }
}

// Brute-force maximization of the Bergman-ball constants over 10^6 admissible
// pairs (w = Phi_z(u) with |u| < r). Every ratio below must stay <= 1.
TEST(Property, BergmanBallConstantsBruteForce) {
  Gen gen(9);
  for (const double r : {0.3, 0.5, 0.8}) {
    const double c = 1.0 - r * r;
    double worst_dist_lo = 0.0, worst_dist_hi = 0.0, worst_ratio_lo = 0.0, worst_ratio_hi = 0.0;
    double sharpest_dist_lo = 0.0;
    for (int i = 0; i < 1'000'000; ++i) {
      const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
      const BallPoint z = gen.ball_point(n);
      const BallPoint u = gen.direction(n) * Complex(r * std::sqrt(gen.uniform()));
      const BallPoint w = MobiusMap(z).apply(u);
      const double oz = omega(z), ow = omega(w), d = std::abs(1.0 - inner(z, w));
      worst_dist_lo = std::max(worst_dist_lo, (oz / 2.0) / d);
      worst_dist_hi = std::max(worst_dist_hi, d / (2.0 * oz / c));
      worst_ratio_lo = std::max(worst_ratio_lo, (c / 4.0) / (ow / oz));
      worst_ratio_hi = std::max(worst_ratio_hi, (ow / oz) / (4.0 / c));
      sharpest_dist_lo = std::max(sharpest_dist_lo, oz / d);
    }
    EXPECT_LE(worst_dist_lo, 1.0) << "r=" << r;
    EXPECT_LE(worst_dist_hi, 1.0) << "r=" << r;
    EXPECT_LE(worst_ratio_lo, 1.0) << "r=" << r;
    EXPECT_LE(worst_ratio_hi, 1.0) << "r=" << r;
    // |1-<z,w>| >= (1-|z|^2)/2 holds with room: the sampled sup of
    // (1-|z|^2)/|1-<z,w>| stays below 2 but is not tiny.
    EXPECT_GT(sharpest_dist_lo, 1.0) << "r=" << r;
  }
}

TEST(Property, RejectsPointsOutsideTheBall) {
  Gen gen(10);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const BallPoint z = gen.direction(n) * Complex(gen.uniform(1.0, 3.0));
    EXPECT_THROW(MobiusMap{z}, DomainError);
    EXPECT_THROW(MobiusMap(gen.ball_point(n)).apply(z), DomainError);
  }
}

}  // namespace
}  // namespace npqs
