#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "npqs/expr_parser.hpp"
#include "support/generators.hpp"

namespace npqs {
namespace {

using testing::Gen;

ParseError parse_error(const std::string& text, std::size_t n) {
  try {
    parse(text, n);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError for '" << text << "'";
  return ParseError(ParseErrorKind::UnexpectedToken, {}, "");
}

TEST(Parse, Structure) {
  const HoloExpr want = HoloExpr::add(HoloExpr::int_pow(HoloExpr::var(1, 2), 2),
                                      HoloExpr::mul(HoloExpr::constant(3.0, 2), HoloExpr::var(2, 2)));
  EXPECT_EQ(parse("z1^2 + 3*z2", 2), want);

  const HoloExpr kernel = HoloExpr::real_pow(
      HoloExpr::sub(HoloExpr::constant(1.0, 2), HoloExpr::lin_form(CVector{0.5, Complex(0, 0.5)})),
      -1.5);
  EXPECT_EQ(parse("(1 - dot(z,[0.5, 0.5i]))^-1.5", 2), kernel);
}

TEST(Parse, Precedence) {
  EXPECT_EQ(parse("-z1^2", 1), HoloExpr::neg(HoloExpr::int_pow(HoloExpr::var(1, 1), 2)));
  EXPECT_EQ(parse("z1 - z1*z1", 1),
            HoloExpr::sub(HoloExpr::var(1, 1), HoloExpr::mul(HoloExpr::var(1, 1), HoloExpr::var(1, 1))));
  // Right associative, folded numerically: 2^(3^2) = 2^9.
  EXPECT_EQ(parse("z1^3^2", 1), HoloExpr::int_pow(HoloExpr::var(1, 1), 9));
}

TEST(Parse, ComplexLiterals) {
  const BallPoint z{0.0};
  EXPECT_EQ(eval(parse("(2+3i)", 1), z), Complex(2, 3));
  EXPECT_EQ(eval(parse("i", 1), z), Complex(0, 1));
  EXPECT_EQ(eval(parse("2.5e-1i", 1), z), Complex(0, 0.25));
  EXPECT_EQ(eval(parse("0", 1), z), Complex(0));
  EXPECT_EQ(eval(parse("1e+22", 1), z), Complex(1e22));
}

TEST(Parse, DimensionExceededSpan) {
  const std::string text = "z1 + z3";
  const ParseError e = parse_error(text, 2);
  EXPECT_EQ(e.kind(), ParseErrorKind::DimensionExceeded);
  EXPECT_EQ(text.substr(e.span().start, e.span().end - e.span().start), "z3");
  EXPECT_NE(std::string(e.what()).find("z3"), std::string::npos);
}

TEST(Parse, ErrorKinds) {
  EXPECT_EQ(parse_error("sin(z1)", 1).kind(), ParseErrorKind::UnknownIdentifier);
  EXPECT_EQ(parse_error("dot(z, [1, 2])", 1).kind(), ParseErrorKind::ArityMismatch);
  EXPECT_EQ(parse_error("z1 +", 1).kind(), ParseErrorKind::UnexpectedToken);
  EXPECT_EQ(parse_error("(z1", 1).kind(), ParseErrorKind::UnexpectedToken);
  EXPECT_EQ(parse_error("1e999", 1).kind(), ParseErrorKind::BadNumber);
  EXPECT_EQ(parse_error("z0", 1).kind(), ParseErrorKind::DimensionExceeded);
}

TEST(Parse, MessageNamesLexeme) {
  const ParseError e = parse_error("z1 * foo", 1);
  EXPECT_NE(std::string(e.what()).find("foo"), std::string::npos);
}

TEST(PrettyPrint, Examples) {
  EXPECT_EQ(pretty_print(HoloExpr::int_pow(HoloExpr::var(1, 1), 2)), "z1^2");
  EXPECT_EQ(pretty_print(HoloExpr::constant(Complex(2, 3), 1)), "(2+3i)");
}

TEST(PrettyPrint, RoundTripsRandomTrees) {
  Gen gen(0x50a7);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = static_cast<std::size_t>(gen.integer(1, 3));
    const HoloExpr f = gen.expr(n, 6);
    const std::string text = pretty_print(f);
    EXPECT_EQ(parse(text, n), f) << text;
  }
}

TEST(PrettyPrint, RoundTripsLiteralsExactly) {
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.97}) {
    const HoloExpr c = HoloExpr::constant(Complex(v, -v / 7.0), 1);
    EXPECT_EQ(parse(pretty_print(c), 1), c) << pretty_print(c);
  }
}

// Totality: mutated and truncated inputs either parse or raise ParseError
// with a span inside the input.
TEST(Parse, TotalOnGarbage) {
  Gen gen(77);
  const std::string alphabet = "z123^*/+-()[],.ei dotlgxp";
  std::vector<std::string> inputs{"", "(", ")", "^", "z", "dot(", "dot(z,[", "1e", "--z1", "z1^-",
                                  "log()", "exp(z1,z2)", "[1]", "1..2", "((((((z1"};
  for (int i = 0; i < 2000; ++i) {
    std::string s = pretty_print(gen.expr(2, 4));
    const int edits = gen.integer(0, 4);
    for (int k = 0; k < edits && !s.empty(); ++k) {
      const auto pos = static_cast<std::size_t>(gen.integer(0, static_cast<int>(s.size()) - 1));
      s[pos] = alphabet[static_cast<std::size_t>(gen.integer(0, static_cast<int>(alphabet.size()) - 1))];
    }
    if (gen.coin(0.3)) s.resize(static_cast<std::size_t>(gen.integer(0, static_cast<int>(s.size()))));
    inputs.push_back(s);
  }
  for (const std::string& s : inputs) {
    try {
      parse(s, 2);
    } catch (const ParseError& e) {
      EXPECT_LE(e.span().start, e.span().end) << s;
      EXPECT_LE(e.span().end, s.size()) << s;
    }
  }
}

}  // namespace
}  // namespace npqs
