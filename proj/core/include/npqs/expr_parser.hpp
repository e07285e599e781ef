#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "npqs/holo_expr.hpp"

namespace npqs {

/// Byte offsets [start, end) into the parsed text.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

enum class ParseErrorKind {
  UnexpectedToken,
  UnknownIdentifier,
  ArityMismatch,
  DimensionExceeded,
  BadNumber,
};

const char* to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, SourceSpan span, const std::string& message)
      : std::runtime_error(message), kind_(kind), span_(span) {}

  ParseErrorKind kind() const noexcept { return kind_; }
  SourceSpan span() const noexcept { return span_; }

 private:
  ParseErrorKind kind_;
  SourceSpan span_;
};

/// Parses the expression language
///
///   expr    := term (('+'|'-') term)*
///   term    := factor (('*'|'/') factor)*
///   factor  := '-' factor | atom ['^' signed_number]
///   atom    := number | imaginary | 'i' | var | call | '(' expr ')'
///   var     := 'z' digits            (one-based, <= n)
///   call    := ('log'|'exp') '(' expr ')' | 'dot' '(' 'z' ',' vector ')'
///   vector  := '[' complex (',' complex)* ']'
///
/// Unary minus binds looser than '^', so "-z1^2" is -(z1^2). Integral
/// exponents become IntPow, all others RealPow. '^' chains are right
/// associative and fold numerically.
HoloExpr parse(std::string_view text, std::size_t n);

/// Canonical text form; parse(pretty_print(f), n) == f.
std::string pretty_print(const HoloExpr& f);

/// Formats a complex constant the way the vector literal grammar reads it,
/// e.g. "0.5", "-2i", "0.25+1i".
std::string format_complex_literal(Complex c);

}  // namespace npqs
