#pragma once

#include <stdexcept>
#include <string>

namespace npqs {

// Geometric precondition violated (a = 0 projections, points outside the ball,
// dimension mismatches).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid configuration or space parameters. The message names the violated
// constraint, e.g. "q>0".
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pole or branch-cut hit while evaluating an expression.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string subexpression)
      : std::runtime_error(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

// An integrand failed at a specific sample; carries the sample index and the
// printed point so the failure can be reproduced.
class SampleError : public std::runtime_error {
 public:
  SampleError(const std::string& what, std::size_t index, std::string point)
      : std::runtime_error(what + " at sample " + std::to_string(index) + " point " + point),
        index_(index),
        point_(std::move(point)) {}

  std::size_t index() const noexcept { return index_; }
  const std::string& point() const noexcept { return point_; }

 private:
  std::size_t index_;
  std::string point_;
};

}  // namespace npqs
