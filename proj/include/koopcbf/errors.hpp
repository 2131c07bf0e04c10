#pragma once

#include <stdexcept>
#include <string>

namespace koopcbf {

// Base for every error raised by the library. Callers that only need to
// distinguish "ours" from foreign exceptions can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked on an object that is not in the required state
// (e.g. backprop without a cached forward pass).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class RankDeficiencyError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InstabilityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double best_margin)
      : Error(what), best_margin_(best_margin) {}

  // Largest attainable constraint value a*u + b over the input box (< 0).
  double best_margin() const noexcept { return best_margin_; }

 private:
  double best_margin_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class DomainExitError : public Error {
 public:
  using Error::Error;
};

}  // namespace koopcbf
