#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tepps {

/// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Line/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Violation {
  std::string entity;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  ValidationError(std::string entity, std::string rule);

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Raised when a brute-force enumeration would exceed its size guard.
class GuardError : public Error {
 public:
  using Error::Error;
};

/// A plan whose lower-level market clearing has no feasible dispatch.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, int scenario = -1);
  int scenario() const { return scenario_; }

 private:
  int scenario_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tepps
