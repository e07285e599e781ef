#include "npqs/holo_expr.hpp"

#include <climits>
#include <cmath>

#include "npqs/errors.hpp"
#include "npqs/expr_parser.hpp"

namespace npqs {

namespace {

using Node = HoloExpr::Node;

bool is_integral_exponent(double t) {
  return std::isfinite(t) && t == std::floor(t) && std::abs(t) <= static_cast<double>(INT_MAX);
}

Complex int_power(Complex base, int m) {
  if (m == 0) return 1.0;
  const bool invert = m < 0;
  unsigned long long e = invert ? static_cast<unsigned long long>(-static_cast<long long>(m))
                                : static_cast<unsigned long long>(m);
  Complex result = 1.0;
  Complex b = base;
  while (e) {
    if (e & 1ULL) result *= b;
    b *= b;
    e >>= 1ULL;
  }
  return invert ? 1.0 / result : result;
}

bool on_branch_cut(Complex w) { return w.imag() == 0.0 && w.real() <= 0.0; }

}  // namespace

// --- construction -----------------------------------------------------------

HoloExpr HoloExpr::make(ExprKind kind, std::vector<HoloExpr> children) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->dim = children.front().dimension();
  for (const auto& c : children) {
    if (c.dimension() != node->dim) {
      throw DomainError("cannot combine expressions of dimension " +
                        std::to_string(node->dim) + " and " + std::to_string(c.dimension()));
    }
  }
  node->children = std::move(children);
  return HoloExpr(std::move(node));
}

HoloExpr HoloExpr::constant(Complex c, std::size_t n) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::Const;
  node->dim = n;
  node->value = c;
  return HoloExpr(std::move(node));
}

HoloExpr HoloExpr::var(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw DomainError("variable z" + std::to_string(k) + " outside dimension " +
                      std::to_string(n));
  }
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::Var;
  node->dim = n;
  node->index = k;
  return HoloExpr(std::move(node));
}

HoloExpr HoloExpr::lin_form(const CVector& b) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::LinForm;
  node->dim = b.dimension();
  node->coeffs.assign(b.coords().begin(), b.coords().end());
  return HoloExpr(std::move(node));
}

HoloExpr HoloExpr::neg(HoloExpr a) {
  if (a.kind() == ExprKind::Const) return constant(-a.constant_value(), a.dimension());
  return make(ExprKind::Neg, {std::move(a)});
}

HoloExpr HoloExpr::add(HoloExpr a, HoloExpr b) { return make(ExprKind::Add, {std::move(a), std::move(b)}); }
HoloExpr HoloExpr::sub(HoloExpr a, HoloExpr b) { return make(ExprKind::Sub, {std::move(a), std::move(b)}); }
HoloExpr HoloExpr::mul(HoloExpr a, HoloExpr b) { return make(ExprKind::Mul, {std::move(a), std::move(b)}); }
HoloExpr HoloExpr::div(HoloExpr a, HoloExpr b) { return make(ExprKind::Div, {std::move(a), std::move(b)}); }

HoloExpr HoloExpr::int_pow(HoloExpr base, int m) {
  HoloExpr e = make(ExprKind::IntPow, {std::move(base)});
  std::const_pointer_cast<Node>(e.node_)->int_exp = m;
  return e;
}

HoloExpr HoloExpr::real_pow(HoloExpr base, double t) {
  if (is_integral_exponent(t)) return int_pow(std::move(base), static_cast<int>(t));
  if (!std::isfinite(t)) throw DomainError("non-finite exponent");
  HoloExpr e = make(ExprKind::RealPow, {std::move(base)});
  std::const_pointer_cast<Node>(e.node_)->real_exp = t;
  return e;
}

HoloExpr HoloExpr::log(HoloExpr a) { return make(ExprKind::Log, {std::move(a)}); }
HoloExpr HoloExpr::exp(HoloExpr a) { return make(ExprKind::Exp, {std::move(a)}); }

// --- accessors --------------------------------------------------------------

ExprKind HoloExpr::kind() const noexcept { return node_->kind; }
std::size_t HoloExpr::dimension() const noexcept { return node_->dim; }

Complex HoloExpr::constant_value() const {
  if (kind() != ExprKind::Const) throw std::logic_error("not a constant");
  return node_->value;
}

std::size_t HoloExpr::var_index() const {
  if (kind() != ExprKind::Var) throw std::logic_error("not a variable");
  return node_->index;
}

int HoloExpr::int_exponent() const {
  if (kind() != ExprKind::IntPow) throw std::logic_error("not an integer power");
  return node_->int_exp;
}

double HoloExpr::real_exponent() const {
  if (kind() != ExprKind::RealPow) throw std::logic_error("not a real power");
  return node_->real_exp;
}

std::span<const Complex> HoloExpr::lin_coeffs() const { return node_->coeffs; }
std::span<const HoloExpr> HoloExpr::children() const { return node_->children; }

bool HoloExpr::is_constant(Complex c) const noexcept {
  return kind() == ExprKind::Const && node_->value == c;
}

bool operator==(const HoloExpr& a, const HoloExpr& b) {
  if (a.node_ == b.node_) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.kind != y.kind || x.dim != y.dim) return false;
  switch (x.kind) {
    case ExprKind::Const:
      if (x.value != y.value) return false;
      break;
    case ExprKind::Var:
      if (x.index != y.index) return false;
      break;
    case ExprKind::IntPow:
      if (x.int_exp != y.int_exp) return false;
      break;
    case ExprKind::RealPow:
      if (x.real_exp != y.real_exp) return false;
      break;
    case ExprKind::LinForm:
      if (x.coeffs != y.coeffs) return false;
      break;
    default:
      break;
  }
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!(x.children[i] == y.children[i])) return false;
  }
  return true;
}

// --- evaluation -------------------------------------------------------------

Complex eval(const HoloExpr& f, const BallPoint& z) {
  if (z.dimension() != f.dimension()) {
    throw DomainError("evaluation point has dimension " + std::to_string(z.dimension()) +
                      ", expression expects " + std::to_string(f.dimension()));
  }
  const auto kids = f.children();
  switch (f.kind()) {
    case ExprKind::Const:
      return f.constant_value();
    case ExprKind::Var:
      return z[f.var_index() - 1];
    case ExprKind::LinForm: {
      Complex s{};
      const auto b = f.lin_coeffs();
      for (std::size_t k = 0; k < b.size(); ++k) s += z[k] * std::conj(b[k]);
      return s;
    }
    case ExprKind::Neg:
      return -eval(kids[0], z);
    case ExprKind::Add:
      return eval(kids[0], z) + eval(kids[1], z);
    case ExprKind::Sub:
      return eval(kids[0], z) - eval(kids[1], z);
    case ExprKind::Mul:
      return eval(kids[0], z) * eval(kids[1], z);
    case ExprKind::Div: {
      const Complex den = eval(kids[1], z);
      if (den == Complex{}) throw EvalError("division by zero", pretty_print(f));
      return eval(kids[0], z) / den;
    }
    case ExprKind::IntPow: {
      const Complex b = eval(kids[0], z);
      if (b == Complex{} && f.int_exponent() < 0) throw EvalError("pole", pretty_print(f));
      return int_power(b, f.int_exponent());
    }
    case ExprKind::RealPow: {
      const Complex b = eval(kids[0], z);
      const double t = f.real_exponent();
      if (b == Complex{}) {
        if (t > 0) return 0.0;
        throw EvalError("pole", pretty_print(f));
      }
      if (on_branch_cut(b)) throw EvalError("branch cut of principal power", pretty_print(f));
      return std::exp(t * std::log(b));
    }
    case ExprKind::Log: {
      const Complex b = eval(kids[0], z);
      if (on_branch_cut(b)) throw EvalError("branch cut of principal log", pretty_print(f));
      return std::log(b);
    }
    case ExprKind::Exp:
      return std::exp(eval(kids[0], z));
  }
  throw std::logic_error("unhandled expression kind");
}

// --- symbolic differentiation -----------------------------------------------

namespace {

// Simplifying builders used only by the differentiator so derivative trees
// stay small. They never change the value of an expression.
HoloExpr s_add(const HoloExpr& a, const HoloExpr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const) {
    return HoloExpr::constant(a.constant_value() + b.constant_value(), a.dimension());
  }
  return a + b;
}

HoloExpr s_neg(const HoloExpr& a) {
  if (a.kind() == ExprKind::Neg) return a.children()[0];
  return -a;
}

HoloExpr s_sub(const HoloExpr& a, const HoloExpr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return s_neg(b);
  if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const) {
    return HoloExpr::constant(a.constant_value() - b.constant_value(), a.dimension());
  }
  return a - b;
}

HoloExpr s_mul(const HoloExpr& a, const HoloExpr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return HoloExpr::constant(0.0, a.dimension());
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const) {
    return HoloExpr::constant(a.constant_value() * b.constant_value(), a.dimension());
  }
  // Constants move to the left and merge with a leading constant factor.
  if (b.kind() == ExprKind::Const) return s_mul(b, a);
  if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Mul &&
      b.children()[0].kind() == ExprKind::Const) {
    return s_mul(HoloExpr::constant(a.constant_value() * b.children()[0].constant_value(),
                                    a.dimension()),
                 b.children()[1]);
  }
  if (a.is_constant(-1.0)) return s_neg(b);
  return a * b;
}

HoloExpr s_int_pow(const HoloExpr& base, int m) {
  if (m == 0) return HoloExpr::constant(1.0, base.dimension());
  if (m == 1) return base;
  return HoloExpr::int_pow(base, m);
}

HoloExpr s_real_pow(const HoloExpr& base, double t) {
  if (is_integral_exponent(t)) return s_int_pow(base, static_cast<int>(t));
  return HoloExpr::real_pow(base, t);
}

}  // namespace

HoloExpr differentiate(const HoloExpr& f, std::size_t k) {
  const std::size_t n = f.dimension();
  if (k < 1 || k > n) {
    throw DomainError("derivative index " + std::to_string(k) + " outside dimension " +
                      std::to_string(n));
  }
  const auto zero = HoloExpr::constant(0.0, n);
  const auto kids = f.children();
  switch (f.kind()) {
    case ExprKind::Const:
      return zero;
    case ExprKind::Var:
      return HoloExpr::constant(f.var_index() == k ? 1.0 : 0.0, n);
    case ExprKind::LinForm:
      return HoloExpr::constant(std::conj(f.lin_coeffs()[k - 1]), n);
    case ExprKind::Neg:
      return s_neg(differentiate(kids[0], k));
    case ExprKind::Add:
      return s_add(differentiate(kids[0], k), differentiate(kids[1], k));
    case ExprKind::Sub:
      return s_sub(differentiate(kids[0], k), differentiate(kids[1], k));
    case ExprKind::Mul:
      return s_add(s_mul(differentiate(kids[0], k), kids[1]),
                   s_mul(kids[0], differentiate(kids[1], k)));
    case ExprKind::Div: {
      const auto da = differentiate(kids[0], k);
      const auto db = differentiate(kids[1], k);
      if (db.is_constant(0.0)) {
        if (da.is_constant(0.0)) return zero;
        return da / kids[1];
      }
      return s_sub(s_mul(da, kids[1]), s_mul(kids[0], db)) / s_int_pow(kids[1], 2);
    }
    case ExprKind::IntPow: {
      const int m = f.int_exponent();
      const auto dg = differentiate(kids[0], k);
      if (m == 0 || dg.is_constant(0.0)) return zero;
      return s_mul(HoloExpr::constant(static_cast<double>(m), n),
                   s_mul(s_int_pow(kids[0], m - 1), dg));
    }
    case ExprKind::RealPow: {
      const double t = f.real_exponent();
      const auto dg = differentiate(kids[0], k);
      if (dg.is_constant(0.0)) return zero;
      return s_mul(HoloExpr::constant(t, n), s_mul(s_real_pow(kids[0], t - 1.0), dg));
    }
    case ExprKind::Log: {
      const auto dg = differentiate(kids[0], k);
      if (dg.is_constant(0.0)) return zero;
      return dg / kids[0];
    }
    case ExprKind::Exp: {
      const auto dg = differentiate(kids[0], k);
      if (dg.is_constant(0.0)) return zero;
      return s_mul(dg, f);
    }
  }
  throw std::logic_error("unhandled expression kind");
}

HoloExpr radial_derivative(const HoloExpr& f) {
  const std::size_t n = f.dimension();
  HoloExpr acc = HoloExpr::constant(0.0, n);
  for (std::size_t k = 1; k <= n; ++k) {
    acc = s_add(acc, s_mul(HoloExpr::var(k, n), differentiate(f, k)));
  }
  return acc;
}

GradExpr gradient(const HoloExpr& f) {
  GradExpr g;
  g.components.reserve(f.dimension());
  for (std::size_t k = 1; k <= f.dimension(); ++k) g.components.push_back(differentiate(f, k));
  return g;
}

CVector GradExpr::eval(const BallPoint& z) const {
  CVector out(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) out[k] = npqs::eval(components[k], z);
  return out;
}

CVector invariant_gradient(const GradExpr& grad, const BallPoint& z) {
  return invariant_gradient(grad, z, 1.0 - z.norm_sq());
}

CVector invariant_gradient(const GradExpr& grad, const BallPoint& z, double one_minus_z_sq) {
  const MobiusMap phi_z(z, one_minus_z_sq);
  return phi_z.jacobian_at_zero().transpose_apply(grad.eval(z));
}

CVector invariant_gradient(const HoloExpr& f, const BallPoint& z) {
  return invariant_gradient(gradient(f), z);
}

}  // namespace npqs
