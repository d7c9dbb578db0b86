#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvpol {

/// Input violates a documented type invariant or operation precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function (e.g. eof of a non-positive value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Bright-field linearization assumption does not hold for the requested configuration.
class RegimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Malformed file content. `line` and `column` are 1-based; 0 means "not applicable".
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(decorate(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string decorate(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace cvpol
