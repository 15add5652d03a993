#pragma once

#include <stdexcept>
#include <string>

namespace rlsbias {

/// Bad shapes or arguments passed to a library routine.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that stem from the numbers themselves rather than the
/// caller's arguments: lost definiteness, non-convergence, divergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotSpdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EigenSolverError : public NumericalError {
 public:
  EigenSolverError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPersistentlyExcitingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  InstabilityError(const std::string& what, long step)
      : NumericalError(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Invalid scenario configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure while writing run outputs (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rlsbias
