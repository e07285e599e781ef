#include "npqs/expr_parser.hpp"

#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <optional>
#include <vector>

namespace npqs {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::UnexpectedToken: return "UnexpectedToken";
    case ParseErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ParseErrorKind::ArityMismatch: return "ArityMismatch";
    case ParseErrorKind::DimensionExceeded: return "DimensionExceeded";
    case ParseErrorKind::BadNumber: return "BadNumber";
  }
  return "ParseError";
}

namespace {

enum class Tok {
  Number,     // real literal
  Imaginary,  // literal with an 'i' suffix, or the bare unit 'i'
  Ident,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  End,
};

struct Token {
  Tok kind;
  SourceSpan span;
  std::string_view text;
  double value = 0.0;
};

constexpr int kMaxNesting = 200;

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::End, {pos_, pos_}, {}, 0.0});
        return out;
      }
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        out.push_back(number());
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(ident());
      } else {
        out.push_back(punct());
      }
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Token number() {
    const std::size_t start = pos_;
    int dots = 0;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      if (text_[pos_] == '.') ++dots;
      ++pos_;
    }
    bool bad = dots > 1 || (pos_ - start == 1 && text_[start] == '.');
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      // An exponent marker must be followed by digits, optionally signed.
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
        pos_ = p;
      } else {
        pos_ = p;
        bad = true;
      }
    }
    // Trailing identifier characters glued to the number: "3i" is imaginary,
    // anything else ("1.5x", "2e") is a malformed number.
    bool imaginary = false;
    if (pos_ < text_.size() && text_[pos_] == 'i' &&
        !(pos_ + 1 < text_.size() &&
          (std::isalnum(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '_'))) {
      imaginary = true;
    }
    const std::size_t num_end = pos_;
    if (imaginary) ++pos_;
    while (!imaginary && pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == '_')) {
      ++pos_;
      bad = true;
    }
    const SourceSpan span{start, pos_};
    const std::string_view lexeme = text_.substr(start, pos_ - start);
    if (bad) {
      throw ParseError(ParseErrorKind::BadNumber, span,
                       "malformed number '" + std::string(lexeme) + "'");
    }
    double v = 0.0;
    const std::string digits(text_.substr(start, num_end - start));
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || !std::isfinite(v)) {
      throw ParseError(ParseErrorKind::BadNumber, span,
                       "malformed number '" + std::string(lexeme) + "'");
    }
    return {imaginary ? Tok::Imaginary : Tok::Number, span, lexeme, v};
  }

  Token ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view lexeme = text_.substr(start, pos_ - start);
    if (lexeme == "i") return {Tok::Imaginary, {start, pos_}, lexeme, 1.0};
    return {Tok::Ident, {start, pos_}, lexeme, 0.0};
  }

  Token punct() {
    const std::size_t start = pos_++;
    const SourceSpan span{start, pos_};
    const std::string_view lexeme = text_.substr(start, 1);
    switch (text_[start]) {
      case '+': return {Tok::Plus, span, lexeme};
      case '-': return {Tok::Minus, span, lexeme};
      case '*': return {Tok::Star, span, lexeme};
      case '/': return {Tok::Slash, span, lexeme};
      case '^': return {Tok::Caret, span, lexeme};
      case '(': return {Tok::LParen, span, lexeme};
      case ')': return {Tok::RParen, span, lexeme};
      case '[': return {Tok::LBracket, span, lexeme};
      case ']': return {Tok::RBracket, span, lexeme};
      case ',': return {Tok::Comma, span, lexeme};
      default: break;
    }
    // Report a whole UTF-8 sequence rather than a dangling lead byte.
    std::size_t end = pos_;
    while (end < text_.size() && (static_cast<unsigned char>(text_[end]) & 0xC0) == 0x80) ++end;
    pos_ = end;
    throw ParseError(ParseErrorKind::UnexpectedToken, {start, end},
                     "unexpected character '" + std::string(text_.substr(start, end - start)) +
                         "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::size_t n) : toks_(std::move(tokens)), n_(n) {}

  HoloExpr parse_all() {
    HoloExpr e = expr();
    if (peek().kind != Tok::End) unexpected(peek(), "expected end of input");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    advance();
    return true;
  }
  [[noreturn]] void unexpected(const Token& t, const std::string& what) const {
    const std::string lexeme = t.kind == Tok::End ? "end of input" : "'" + std::string(t.text) + "'";
    throw ParseError(ParseErrorKind::UnexpectedToken, t.span,
                     "unexpected " + lexeme + " (" + what + ")");
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) unexpected(peek(), what);
    return advance();
  }

  struct DepthGuard {
    DepthGuard(Parser& p, const Token& at) : p(p) {
      if (++p.depth_ > kMaxNesting) p.unexpected(at, "nesting too deep");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  HoloExpr expr() {
    HoloExpr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const bool plus = advance().kind == Tok::Plus;
      HoloExpr rhs = term();
      lhs = plus ? HoloExpr::add(std::move(lhs), std::move(rhs))
                 : HoloExpr::sub(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  HoloExpr term() {
    HoloExpr lhs = factor();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const bool star = advance().kind == Tok::Star;
      HoloExpr rhs = factor();
      lhs = star ? HoloExpr::mul(std::move(lhs), std::move(rhs))
                 : HoloExpr::div(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  HoloExpr factor() {
    if (peek().kind == Tok::Minus) {
      DepthGuard guard(*this, peek());
      advance();
      return HoloExpr::neg(factor());
    }
    HoloExpr base = atom();
    if (!accept(Tok::Caret)) return base;
    const double t = exponent_chain();
    return HoloExpr::real_pow(std::move(base), t);
  }

  // signed_number ('^' signed_number)*, folded right to left.
  double exponent_chain() {
    DepthGuard guard(*this, peek());
    double sign = 1.0;
    if (accept(Tok::Minus)) sign = -1.0;
    else accept(Tok::Plus);
    const Token& num = expect(Tok::Number, "expected a real exponent");
    double t = sign * num.value;
    if (accept(Tok::Caret)) t = std::pow(t, exponent_chain());
    if (!std::isfinite(t)) {
      throw ParseError(ParseErrorKind::BadNumber, num.span,
                       "exponent '" + std::string(num.text) + "' is not finite");
    }
    return t;
  }

  // '(' ['-'] number [('+'|'-') imaginary] ')' or '(' ['-'] imaginary ')'.
  std::optional<Complex> try_paren_complex() {
    const auto at = [this](std::size_t i) -> const Token& {
      return toks_[std::min(i, toks_.size() - 1)];
    };
    std::size_t p = pos_ + 1;
    double sign = 1.0;
    if (at(p).kind == Tok::Minus) {
      sign = -1.0;
      ++p;
    }
    Complex c;
    if (at(p).kind == Tok::Number) {
      c = sign * at(p).value;
      ++p;
      if ((at(p).kind == Tok::Plus || at(p).kind == Tok::Minus) &&
          at(p + 1).kind == Tok::Imaginary && at(p + 2).kind == Tok::RParen) {
        const double s2 = at(p).kind == Tok::Plus ? 1.0 : -1.0;
        c += Complex(0.0, s2 * at(p + 1).value);
        p += 2;
      }
    } else if (at(p).kind == Tok::Imaginary) {
      c = Complex(0.0, sign * at(p).value);
      ++p;
    } else {
      return std::nullopt;
    }
    if (at(p).kind != Tok::RParen) return std::nullopt;
    pos_ = p + 1;
    return c;
  }

  HoloExpr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        advance();
        return HoloExpr::constant(t.value, n_);
      case Tok::Imaginary:
        advance();
        return HoloExpr::constant(Complex(0.0, t.value), n_);
      case Tok::LParen: {
        if (auto c = try_paren_complex()) return HoloExpr::constant(*c, n_);
        DepthGuard guard(*this, t);
        advance();
        HoloExpr e = expr();
        expect(Tok::RParen, "expected ')'");
        return e;
      }
      case Tok::Ident:
        return identifier();
      default:
        unexpected(t, "expected a number, variable, call or '('");
    }
  }

  std::optional<std::size_t> variable_index(std::string_view s) const {
    if (s.size() < 2 || s[0] != 'z') return std::nullopt;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    }
    std::size_t k = 0;
    const auto res = std::from_chars(s.data() + 1, s.data() + s.size(), k);
    if (res.ec != std::errc()) return std::numeric_limits<std::size_t>::max();
    return k;
  }

  HoloExpr identifier() {
    const Token& t = advance();
    if (auto k = variable_index(t.text)) {
      if (*k < 1 || *k > n_) {
        throw ParseError(ParseErrorKind::DimensionExceeded, t.span,
                         "variable '" + std::string(t.text) + "' exceeds dimension " +
                             std::to_string(n_));
      }
      return HoloExpr::var(*k, n_);
    }
    if (t.text == "log" || t.text == "exp") {
      const bool is_log = t.text == "log";
      DepthGuard guard(*this, t);
      expect(Tok::LParen, "expected '(' after function name");
      HoloExpr arg = expr();
      if (peek().kind == Tok::Comma) {
        throw ParseError(ParseErrorKind::ArityMismatch, peek().span,
                         "'" + std::string(t.text) + "' takes exactly one argument");
      }
      expect(Tok::RParen, "expected ')'");
      return is_log ? HoloExpr::log(std::move(arg)) : HoloExpr::exp(std::move(arg));
    }
    if (t.text == "dot") return dot_call(t);
    throw ParseError(ParseErrorKind::UnknownIdentifier, t.span,
                     "unknown identifier '" + std::string(t.text) + "'");
  }

  HoloExpr dot_call(const Token& name) {
    expect(Tok::LParen, "expected '(' after 'dot'");
    const Token& zt = peek();
    if (zt.kind != Tok::Ident || zt.text != "z") unexpected(zt, "expected 'z' as first argument of dot");
    advance();
    expect(Tok::Comma, "expected ',' in dot");
    const Token& open = expect(Tok::LBracket, "expected '[' starting the coefficient vector");
    std::vector<Complex> coeffs;
    coeffs.push_back(complex_literal());
    while (accept(Tok::Comma)) coeffs.push_back(complex_literal());
    const Token& close = expect(Tok::RBracket, "expected ']' closing the coefficient vector");
    if (coeffs.size() != n_) {
      throw ParseError(ParseErrorKind::ArityMismatch, {open.span.start, close.span.end},
                       "'dot' vector has " + std::to_string(coeffs.size()) +
                           " entries, dimension is " + std::to_string(n_));
    }
    if (peek().kind == Tok::Comma) {
      throw ParseError(ParseErrorKind::ArityMismatch, peek().span,
                       "'" + std::string(name.text) + "' takes exactly two arguments");
    }
    expect(Tok::RParen, "expected ')'");
    return HoloExpr::lin_form(CVector(std::span<const Complex>(coeffs)));
  }

  // ['-'] number [('+'|'-') imaginary] | ['-'] imaginary
  Complex complex_literal() {
    double sign = 1.0;
    if (accept(Tok::Minus)) sign = -1.0;
    const Token& t = peek();
    if (t.kind == Tok::Imaginary) {
      advance();
      return {0.0, sign * t.value};
    }
    if (t.kind != Tok::Number) unexpected(t, "expected a complex number");
    advance();
    Complex c = sign * t.value;
    if ((peek().kind == Tok::Plus || peek().kind == Tok::Minus) &&
        peek(1).kind == Tok::Imaginary) {
      const double s2 = advance().kind == Tok::Plus ? 1.0 : -1.0;
      c += Complex(0.0, s2 * advance().value);
    }
    return c;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t n_;
  int depth_ = 0;
};

// --- printing ---------------------------------------------------------------

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

enum Prec { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

struct Printed {
  std::string text;
  int prec;
};

std::string wrap(const Printed& p, bool parens) { return parens ? "(" + p.text + ")" : p.text; }

std::string const_text(Complex c) {
  const double re = c.real();
  const double im = c.imag();
  if (im == 0.0 && !std::signbit(re)) return fmt_double(re);
  if (im == 0.0) return "(" + fmt_double(re) + ")";
  if (re == 0.0 && !std::signbit(re)) return "(" + fmt_double(im) + "i)";
  return "(" + fmt_double(re) + (std::signbit(im) ? "-" : "+") + fmt_double(std::abs(im)) + "i)";
}

Printed print(const HoloExpr& f) {
  const auto kids = f.children();
  switch (f.kind()) {
    case ExprKind::Const:
      return {const_text(f.constant_value()), kAtom};
    case ExprKind::Var:
      return {"z" + std::to_string(f.var_index()), kAtom};
    case ExprKind::LinForm: {
      std::string s = "dot(z,[";
      const auto b = f.lin_coeffs();
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (k) s += ", ";
        s += format_complex_literal(b[k]);
      }
      return {s + "])", kAtom};
    }
    case ExprKind::Log:
      return {"log(" + print(kids[0]).text + ")", kAtom};
    case ExprKind::Exp:
      return {"exp(" + print(kids[0]).text + ")", kAtom};
    case ExprKind::Neg: {
      const Printed a = print(kids[0]);
      return {"-" + wrap(a, a.prec < kUnary), kUnary};
    }
    case ExprKind::IntPow: {
      const Printed a = print(kids[0]);
      return {wrap(a, a.prec < kAtom) + "^" + std::to_string(f.int_exponent()), kPower};
    }
    case ExprKind::RealPow: {
      const Printed a = print(kids[0]);
      return {wrap(a, a.prec < kAtom) + "^" + fmt_double(f.real_exponent()), kPower};
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      const Printed a = print(kids[0]);
      const Printed b = print(kids[1]);
      const char* op = f.kind() == ExprKind::Add ? " + " : " - ";
      return {wrap(a, a.prec < kSum) + op + wrap(b, b.prec <= kSum), kSum};
    }
    case ExprKind::Mul:
    case ExprKind::Div: {
      const Printed a = print(kids[0]);
      const Printed b = print(kids[1]);
      const char* op = f.kind() == ExprKind::Mul ? "*" : "/";
      return {wrap(a, a.prec < kProduct) + op + wrap(b, b.prec <= kProduct), kProduct};
    }
  }
  throw std::logic_error("unhandled expression kind");
}

}  // namespace

HoloExpr parse(std::string_view text, std::size_t n) {
  if (n < 1) throw ParseError(ParseErrorKind::DimensionExceeded, {0, 0}, "dimension must be >= 1");
  if (n > kMaxDimension) {
    throw ParseError(ParseErrorKind::DimensionExceeded, {0, 0},
                     "dimension " + std::to_string(n) + " exceeds the supported maximum");
  }
  Parser parser(Lexer(text).run(), n);
  return parser.parse_all();
}

std::string pretty_print(const HoloExpr& f) { return print(f).text; }

std::string format_complex_literal(Complex c) {
  const double re = c.real();
  const double im = c.imag();
  if (im == 0.0) return fmt_double(re);
  if (re == 0.0 && !std::signbit(re)) return fmt_double(im) + "i";
  return fmt_double(re) + (std::signbit(im) ? "-" : "+") + fmt_double(std::abs(im)) + "i";
}

}  // namespace npqs
