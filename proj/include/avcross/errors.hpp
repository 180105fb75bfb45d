#pragma once

#include <stdexcept>
#include <string>

namespace avcross {

// Base class for all toolkit errors. The CLI maps subclasses onto its
// exit-code contract: configuration/coverage -> 2, parse -> 3,
// fit convergence -> 4, instability -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model, drive, or run configuration. `path` names the offending
// field when known (e.g. "modes[1].kappa_mhz").
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg, std::string path = {})
      : Error(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Input data does not cover the region an algorithm needs (asymptotic
// windows, shared detunings, ...).
class CoverageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed input file (CSV/JSON). Carries a human-readable location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A fit failed to converge or found no usable structure in the data.
class FitError : public Error {
 public:
  explicit FitError(const std::string& msg, double best_residual = -1.0)
      : Error(msg), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

// Time-domain integration diverged (anti-damped regime).
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& msg, double time)
      : Error(msg), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace avcross
