#include "npqs/ball_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "npqs/errors.hpp"

namespace npqs {

namespace {

void check_dimension(std::size_t n) {
  if (n > kMaxDimension) {
    throw ParameterError("dimension " + std::to_string(n) + " exceeds the supported maximum " +
                         std::to_string(kMaxDimension));
  }
}

void check_same_dimension(const CVector& a, const CVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DomainError("dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                      std::to_string(b.dimension()));
  }
}

}  // namespace

CVector::CVector(std::size_t n) : n_(n) { check_dimension(n); }

CVector::CVector(std::initializer_list<Complex> coords) : n_(coords.size()) {
  check_dimension(n_);
  std::copy(coords.begin(), coords.end(), c_.begin());
}

CVector::CVector(std::span<const Complex> coords) : n_(coords.size()) {
  check_dimension(n_);
  std::copy(coords.begin(), coords.end(), c_.begin());
}

CVector CVector::basis(std::size_t n, std::size_t k) {
  CVector e(n);
  if (k >= n) throw DomainError("basis index out of range");
  e[k] = 1.0;
  return e;
}

double CVector::norm_sq() const noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < n_; ++k) s += std::norm(c_[k]);
  return s;
}

double CVector::norm() const noexcept { return std::sqrt(norm_sq()); }

bool CVector::is_zero() const noexcept {
  for (std::size_t k = 0; k < n_; ++k) {
    if (c_[k] != Complex{}) return false;
  }
  return true;
}

bool CVector::approx_equal(const CVector& other, double tol) const {
  if (n_ != other.n_) return false;
  for (std::size_t k = 0; k < n_; ++k) {
    if (std::abs(c_[k].real() - other.c_[k].real()) > tol) return false;
    if (std::abs(c_[k].imag() - other.c_[k].imag()) > tol) return false;
  }
  return true;
}

CVector& CVector::operator+=(const CVector& other) {
  check_same_dimension(*this, other);
  for (std::size_t k = 0; k < n_; ++k) c_[k] += other.c_[k];
  return *this;
}

CVector& CVector::operator-=(const CVector& other) {
  check_same_dimension(*this, other);
  for (std::size_t k = 0; k < n_; ++k) c_[k] -= other.c_[k];
  return *this;
}

CVector& CVector::operator*=(Complex s) noexcept {
  for (std::size_t k = 0; k < n_; ++k) c_[k] *= s;
  return *this;
}

bool operator==(const CVector& a, const CVector& b) noexcept {
  if (a.n_ != b.n_) return false;
  for (std::size_t k = 0; k < a.n_; ++k) {
    if (a.c_[k] != b.c_[k]) return false;
  }
  return true;
}

std::string to_string(const CVector& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t k = 0; k < v.dimension(); ++k) {
    if (k) os << ", ";
    os << v[k].real() << (v[k].imag() < 0 ? "-" : "+") << std::abs(v[k].imag()) << 'i';
  }
  os << ')';
  return os.str();
}

Complex inner(const CVector& z, const CVector& w) {
  check_same_dimension(z, w);
  Complex s{};
  for (std::size_t k = 0; k < z.dimension(); ++k) s += z[k] * std::conj(w[k]);
  return s;
}

CVector proj_parallel(const CVector& a, const CVector& z) {
  const double na = a.norm_sq();
  if (na == 0.0) throw DomainError("projection onto span of a = 0 is undefined");
  return (inner(z, a) / na) * a;
}

CVector proj_orthogonal(const CVector& a, const CVector& z) { return z - proj_parallel(a, z); }

// ---------------------------------------------------------------------------

ComplexMatrix::ComplexMatrix(std::size_t n) : n_(n) { check_dimension(n); }

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n);
  for (std::size_t k = 0; k < n; ++k) m(k, k) = 1.0;
  return m;
}

CVector ComplexMatrix::apply(const CVector& v) const {
  if (v.dimension() != n_) throw DomainError("matrix/vector dimension mismatch");
  CVector out(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    Complex s{};
    for (std::size_t c = 0; c < n_; ++c) s += (*this)(r, c) * v[c];
    out[r] = s;
  }
  return out;
}

CVector ComplexMatrix::transpose_apply(const CVector& v) const {
  if (v.dimension() != n_) throw DomainError("matrix/vector dimension mismatch");
  CVector out(n_);
  for (std::size_t c = 0; c < n_; ++c) {
    Complex s{};
    for (std::size_t r = 0; r < n_; ++r) s += (*this)(r, c) * v[r];
    out[c] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------

MobiusMap::MobiusMap(BallPoint a) : MobiusMap(a, 1.0 - a.norm_sq(), 1.0) {}

MobiusMap::MobiusMap(BallPoint a, double one_minus_a_sq) : MobiusMap(a, one_minus_a_sq, 1.0) {}

MobiusMap MobiusMap::with_flipped_s_for_testing(BallPoint a) {
  const double c = 1.0 - a.norm_sq();
  return MobiusMap(a, c, -1.0);
}

MobiusMap::MobiusMap(BallPoint a, double one_minus_a_sq, double apply_s_sign)
    : a_(a),
      a_norm_sq_(a.norm_sq()),
      one_minus_a_sq_(one_minus_a_sq),
      apply_s_sign_(apply_s_sign) {
  if (!(a_norm_sq_ < 1.0) || !(one_minus_a_sq_ > 0.0)) {
    throw DomainError("Mobius parameter must lie in the open ball, got |a|^2 = " +
                      std::to_string(a_norm_sq_));
  }
  s_a_ = std::sqrt(one_minus_a_sq_);
}

BallPoint MobiusMap::apply(const BallPoint& z) const {
  if (z.dimension() != a_.dimension()) throw DomainError("dimension mismatch in Mobius map");
  if (!z.is_interior()) throw DomainError("Mobius map applied outside the open ball");
  return apply_unchecked(z);
}

BallPoint MobiusMap::apply_unchecked(const BallPoint& z) const {
  if (a_norm_sq_ == 0.0) return -z;
  const Complex za = inner(z, a_);
  const std::size_t n = z.dimension();
  const Complex t = za / a_norm_sq_;
  const double s = apply_s_sign_ * s_a_;
  const Complex denom = 1.0 - za;
  BallPoint out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex p = t * a_[k];
    const Complex q = z[k] - p;
    out[k] = (a_[k] - p - s * q) / denom;
  }
  return out;
}

double MobiusMap::one_minus_phi_sq(const BallPoint& z) const {
  return one_minus_phi_sq(z, 1.0 - z.norm_sq());
}

double MobiusMap::one_minus_phi_sq(const BallPoint& z, double one_minus_z_sq) const {
  return one_minus_a_sq_ * one_minus_z_sq / std::norm(1.0 - inner(z, a_));
}

ComplexMatrix MobiusMap::jacobian_at_zero() const {
  const std::size_t n = a_.dimension();
  ComplexMatrix j(n);
  if (a_norm_sq_ == 0.0) {
    for (std::size_t k = 0; k < n; ++k) j(k, k) = -1.0;
    return j;
  }
  // P_a has entries a_r conj(a_c)/|a|^2.
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const Complex p = a_[r] * std::conj(a_[c]) / a_norm_sq_;
      const Complex q = (r == c ? 1.0 : 0.0) - p;
      j(r, c) = -one_minus_a_sq_ * p - s_a_ * q;
    }
  }
  return j;
}

// ---------------------------------------------------------------------------

double one_minus_phi_sq(const BallPoint& z, double one_minus_z_sq, const BallPoint& w,
                        double one_minus_w_sq) {
  return one_minus_z_sq * one_minus_w_sq / std::norm(1.0 - inner(z, w));
}

std::pair<double, double> reciprocal_identity_sides(const BallPoint& z, const BallPoint& w,
                                                    double gamma) {
  const MobiusMap phi_z(z);
  const BallPoint p = phi_z.apply(w);
  const double lhs = std::pow(std::abs(1.0 - inner(p, z)), -2.0 * gamma);
  const double rhs = std::pow(std::abs(1.0 - inner(z, w)) / (1.0 - z.norm_sq()), 2.0 * gamma);
  return {lhs, rhs};
}

double kernel_weight_k(const BallPoint& z, const BallPoint& w, double gamma) {
  return kernel_weight_k(z, 1.0 - z.norm_sq(), w, gamma);
}

double kernel_weight_k(const BallPoint& z, double one_minus_z_sq, const BallPoint& w,
                       double gamma) {
  return std::pow(one_minus_z_sq / std::norm(1.0 - inner(z, w)), gamma);
}

DisplacementBounds displacement_bounds(const BallPoint& z, const BallPoint& w) {
  if (z == w) throw DomainError("displacement bounds need z != w");
  const double omega = 1.0 - z.norm_sq();
  const double d = std::abs(1.0 - inner(z, w));
  const MobiusMap phi_z(z);
  const double disp = (z - phi_z.apply(w)).norm();
  return {disp, w.norm() * omega / d, 2.0 * omega / d};
}

double bergman_pseudometric(const BallPoint& z, const BallPoint& w) {
  const double c = one_minus_phi_sq(z, 1.0 - z.norm_sq(), w, 1.0 - w.norm_sq());
  return std::sqrt(std::max(0.0, 1.0 - c));
}

double projection_kernel(const BallPoint& z, const BallPoint& w) {
  check_same_dimension(z, w);
  const double nw = w.norm_sq();
  if (nw == 0.0) return z.norm();
  const double s = std::sqrt(1.0 - nw);
  const Complex t = inner(z, w) / nw;
  double acc = 0.0;
  for (std::size_t k = 0; k < z.dimension(); ++k) {
    const Complex p = t * w[k];
    acc += std::norm(w[k] - p - s * (z[k] - p));
  }
  return std::sqrt(acc);
}

BallPoint mobius_displacement(const BallPoint& z, const BallPoint& u) {
  check_same_dimension(z, u);
  const double nz = z.norm_sq();
  if (nz == 0.0) return u;
  const double omega = 1.0 - nz;
  const double s = std::sqrt(omega);
  const Complex uz = inner(u, z);
  const Complex t = uz / nz;
  const Complex denom = 1.0 - uz;
  BallPoint out(z.dimension());
  for (std::size_t k = 0; k < z.dimension(); ++k) {
    const Complex p = t * z[k];
    out[k] = (omega * p + s * (u[k] - p)) / denom;
  }
  return out;
}

}  // namespace npqs
