#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>

namespace npqs {

using Complex = std::complex<double>;

/// Largest supported ambient dimension. Vectors live inline so the sampling
/// loops never touch the heap.
inline constexpr std::size_t kMaxDimension = 8;

/// A vector of n complex numbers with inline storage. Used both for points of
/// the ball and for gradients.
class CVector {
 public:
  CVector() = default;
  explicit CVector(std::size_t n);
  CVector(std::initializer_list<Complex> coords);
  explicit CVector(std::span<const Complex> coords);

  /// The k-th standard basis vector, k zero-based.
  static CVector basis(std::size_t n, std::size_t k);

  std::size_t dimension() const noexcept { return n_; }
  Complex& operator[](std::size_t k) noexcept { return c_[k]; }
  const Complex& operator[](std::size_t k) const noexcept { return c_[k]; }
  std::span<const Complex> coords() const noexcept { return {c_.data(), n_}; }
  std::span<Complex> coords() noexcept { return {c_.data(), n_}; }

  double norm_sq() const noexcept;
  double norm() const noexcept;
  bool is_interior() const noexcept { return norm_sq() < 1.0; }
  bool is_zero() const noexcept;

  /// Componentwise absolute comparison.
  bool approx_equal(const CVector& other, double tol = 1e-12) const;

  CVector& operator+=(const CVector& other);
  CVector& operator-=(const CVector& other);
  CVector& operator*=(Complex s) noexcept;

  friend CVector operator+(CVector a, const CVector& b) { return a += b; }
  friend CVector operator-(CVector a, const CVector& b) { return a -= b; }
  friend CVector operator*(Complex s, CVector a) noexcept { return a *= s; }
  friend CVector operator*(CVector a, Complex s) noexcept { return a *= s; }
  friend CVector operator-(CVector a) noexcept { return a *= -1.0; }
  friend bool operator==(const CVector& a, const CVector& b) noexcept;

 private:
  std::array<Complex, kMaxDimension> c_{};
  std::size_t n_ = 0;
};

/// A point of C^n; interior points satisfy |z| < 1.
using BallPoint = CVector;

std::string to_string(const CVector& v);

/// <z, w> = sum_k z_k conj(w_k).
Complex inner(const CVector& z, const CVector& w);

/// P_a z = (<z,a>/|a|^2) a. Throws DomainError for a = 0.
CVector proj_parallel(const CVector& a, const CVector& z);

/// Q_a z = z - P_a z. Throws DomainError for a = 0.
CVector proj_orthogonal(const CVector& a, const CVector& z);

/// Complex n x n matrix, row-major, inline storage.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(std::size_t n);
  static ComplexMatrix identity(std::size_t n);

  std::size_t dimension() const noexcept { return n_; }
  Complex& operator()(std::size_t row, std::size_t col) noexcept { return m_[row * n_ + col]; }
  Complex operator()(std::size_t row, std::size_t col) const noexcept { return m_[row * n_ + col]; }

  CVector apply(const CVector& v) const;
  /// M^T v (plain transpose, no conjugation).
  CVector transpose_apply(const CVector& v) const;

 private:
  std::array<Complex, kMaxDimension * kMaxDimension> m_{};
  std::size_t n_;
};

/// The involutive automorphism
///   Phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z,a>),   s_a = sqrt(1 - |a|^2),
/// with Phi_0 = -Identity.
class MobiusMap {
 public:
  explicit MobiusMap(BallPoint a);
  /// `one_minus_a_sq` is trusted as an accurate value of 1 - |a|^2; use it
  /// when a sits close to the sphere and the complement is known exactly.
  MobiusMap(BallPoint a, double one_minus_a_sq);

  /// Same map with the sign of s_a flipped inside `apply` only. Exists so the
  /// identity battery can prove that it catches a broken automorphism.
  static MobiusMap with_flipped_s_for_testing(BallPoint a);

  const BallPoint& a() const noexcept { return a_; }
  std::size_t dimension() const noexcept { return a_.dimension(); }
  double a_norm_sq() const noexcept { return a_norm_sq_; }
  double one_minus_a_sq() const noexcept { return one_minus_a_sq_; }
  double s_a() const noexcept { return s_a_; }

  /// Throws DomainError unless |z| < 1.
  BallPoint apply(const BallPoint& z) const;
  /// No interior check; valid on the closed ball (the denominator never
  /// vanishes for |a| < 1, |z| <= 1).
  BallPoint apply_unchecked(const BallPoint& z) const;

  /// 1 - |Phi_a(z)|^2 in product form (1-|a|^2)(1-|z|^2)/|1-<z,a>|^2.
  double one_minus_phi_sq(const BallPoint& z) const;
  double one_minus_phi_sq(const BallPoint& z, double one_minus_z_sq) const;

  /// Holomorphic derivative Phi_a'(0) = -(1-|a|^2) P_a - s_a Q_a.
  ComplexMatrix jacobian_at_zero() const;

 private:
  MobiusMap(BallPoint a, double one_minus_a_sq, double apply_s_sign);

  BallPoint a_;
  double a_norm_sq_ = 0.0;
  double one_minus_a_sq_ = 1.0;
  double s_a_ = 1.0;
  double apply_s_sign_ = 1.0;
};

inline BallPoint mobius_apply(const MobiusMap& m, const BallPoint& z) { return m.apply(z); }
inline double one_minus_phi_sq(const MobiusMap& m, const BallPoint& z) { return m.one_minus_phi_sq(z); }
inline ComplexMatrix mobius_jacobian_at_zero(const MobiusMap& m) { return m.jacobian_at_zero(); }

/// Product-form (1-|z|^2)(1-|w|^2)/|1-<z,w>|^2 from known complements.
double one_minus_phi_sq(const BallPoint& z, double one_minus_z_sq, const BallPoint& w,
                        double one_minus_w_sq);

/// Both sides of 1/|1-<Phi_z(w),z>|^{2g} = |1-<z,w>|^{2g} / (1-|z|^2)^{2g}.
std::pair<double, double> reciprocal_identity_sides(const BallPoint& z, const BallPoint& w,
                                                    double gamma);

/// k_z(w) = (1-|z|^2)^g / |1-<z,w>|^{2g}.
double kernel_weight_k(const BallPoint& z, const BallPoint& w, double gamma);
double kernel_weight_k(const BallPoint& z, double one_minus_z_sq, const BallPoint& w,
                       double gamma);

struct DisplacementBounds {
  double displacement;  // |z - Phi_z(w)|
  double lower;         // |w|(1-|z|^2)/|1-<z,w>|
  double upper_sq;      // 2(1-|z|^2)/|1-<z,w>|
};

/// Throws DomainError when z == w.
DisplacementBounds displacement_bounds(const BallPoint& z, const BallPoint& w);

/// d(z,w) = |Phi_z(w)|, via the symmetric product form.
double bergman_pseudometric(const BallPoint& z, const BallPoint& w);

/// |w - P_w z - s_w Q_w z| evaluated directly (w = 0 gives |z|).
double projection_kernel(const BallPoint& z, const BallPoint& w);

/// z - Phi_z(u) in a cancellation-free form, linear in u over the common
/// denominator 1 - <u,z>.
BallPoint mobius_displacement(const BallPoint& z, const BallPoint& u);

}  // namespace npqs
