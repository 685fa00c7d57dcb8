#pragma once

#include <stdexcept>
#include <string>

namespace cfa {

/// Input that violates a documented precondition or file format.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear system that stayed singular or indefinite after every fallback.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double rcond = 0.0)
      : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

}  // namespace cfa
