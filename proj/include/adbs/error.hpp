#pragma once

#include <stdexcept>
#include <string>

namespace adbs {

// Base of every error raised by the library. `kind()` is a stable short tag
// used in the CLI's machine-readable error record.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_input"; }
};

// Non-finite loss while training the reward network.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, int step) : Error(msg), step_(step) {}
  int step() const noexcept { return step_; }
  const char* kind() const noexcept override { return "divergence"; }

 private:
  int step_;
};

// A state invariant (e.g. positive definiteness of a covariance) was violated.
class InternalConsistency : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "internal_consistency"; }
};

class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined_correlation"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

}  // namespace adbs
