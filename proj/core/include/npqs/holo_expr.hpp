#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "npqs/ball_geometry.hpp"

namespace npqs {

enum class ExprKind {
  Const,
  Var,      // z_k, k one-based
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  IntPow,   // integer exponent
  RealPow,  // real non-integer exponent, principal branch
  Log,      // principal branch
  Exp,
  LinForm,  // <z, b> = sum z_k conj(b_k)
};

/// Immutable AST of a holomorphic function on the ball of C^n. Copies share
/// structure.
///
/// The public builders apply two normalizations so that every expression has a
/// canonical printed form: negating a constant folds into the constant, and a
/// real power with an integral exponent becomes an IntPow.
class HoloExpr {
 public:
  static HoloExpr constant(Complex c, std::size_t n);
  static HoloExpr var(std::size_t k, std::size_t n);
  static HoloExpr lin_form(const CVector& b);

  static HoloExpr neg(HoloExpr a);
  static HoloExpr add(HoloExpr a, HoloExpr b);
  static HoloExpr sub(HoloExpr a, HoloExpr b);
  static HoloExpr mul(HoloExpr a, HoloExpr b);
  static HoloExpr div(HoloExpr a, HoloExpr b);
  static HoloExpr int_pow(HoloExpr base, int m);
  static HoloExpr real_pow(HoloExpr base, double t);
  static HoloExpr log(HoloExpr a);
  static HoloExpr exp(HoloExpr a);

  ExprKind kind() const noexcept;
  std::size_t dimension() const noexcept;
  Complex constant_value() const;
  std::size_t var_index() const;
  int int_exponent() const;
  double real_exponent() const;
  std::span<const Complex> lin_coeffs() const;
  std::span<const HoloExpr> children() const;

  bool is_constant(Complex c) const noexcept;

  friend bool operator==(const HoloExpr& a, const HoloExpr& b);

  friend HoloExpr operator+(HoloExpr a, HoloExpr b) { return add(std::move(a), std::move(b)); }
  friend HoloExpr operator-(HoloExpr a, HoloExpr b) { return sub(std::move(a), std::move(b)); }
  friend HoloExpr operator*(HoloExpr a, HoloExpr b) { return mul(std::move(a), std::move(b)); }
  friend HoloExpr operator/(HoloExpr a, HoloExpr b) { return div(std::move(a), std::move(b)); }
  friend HoloExpr operator-(HoloExpr a) { return neg(std::move(a)); }

  struct Node;

 private:
  explicit HoloExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static HoloExpr make(ExprKind kind, std::vector<HoloExpr> children);
  const Node& node() const noexcept { return *node_; }

  std::shared_ptr<const Node> node_;
};

struct HoloExpr::Node {
  ExprKind kind;
  std::size_t dim;
  Complex value{};
  std::size_t index = 0;
  int int_exp = 0;
  double real_exp = 0.0;
  std::vector<Complex> coeffs;
  std::vector<HoloExpr> children;
};

/// Evaluates f at z. Throws EvalError on a pole or a branch-cut hit, naming
/// the offending subexpression.
Complex eval(const HoloExpr& f, const BallPoint& z);

/// Symbolic partial derivative with respect to z_k, k one-based.
HoloExpr differentiate(const HoloExpr& f, std::size_t k);

/// Rf = sum_k z_k df/dz_k.
HoloExpr radial_derivative(const HoloExpr& f);

/// Symbolic complex gradient (df/dz_1, ..., df/dz_n).
struct GradExpr {
  std::vector<HoloExpr> components;

  CVector eval(const BallPoint& z) const;
};

GradExpr gradient(const HoloExpr& f);

/// Invariant gradient grad(f o Phi_z)(0) = Phi_z'(0)^T grad f(z).
CVector invariant_gradient(const GradExpr& grad, const BallPoint& z);
CVector invariant_gradient(const HoloExpr& f, const BallPoint& z);

/// Same, with a caller-supplied accurate 1 - |z|^2.
CVector invariant_gradient(const GradExpr& grad, const BallPoint& z, double one_minus_z_sq);

}  // namespace npqs
