#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hpglm {

// Process exit status for each error category.
enum class ExitStatus : int {
  kSuccess = 0,
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitStatus exit_status() const = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitStatus exit_status() const override { return ExitStatus::kConfig; }
};

class DataError : public Error {
 public:
  using Error::Error;
  ExitStatus exit_status() const override { return ExitStatus::kData; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  ExitStatus exit_status() const override { return ExitStatus::kNumeric; }
};

// Argument outside the canonical or mean domain of a family.
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ApproximationUnavailableError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UnsupportedDesignError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Inner maximum-likelihood fit failed; carries the last iterate.
class FitError : public NumericError {
 public:
  FitError(const std::string& what, Eigen::VectorXd last_iterate, bool diverged)
      : NumericError(what), last_iterate_(std::move(last_iterate)), diverged_(diverged) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  bool diverged() const { return diverged_; }

 private:
  Eigen::VectorXd last_iterate_;
  bool diverged_;
};

class StuckChainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InsufficientDrawsError : public NumericError {
 public:
  using NumericError::NumericError;
};

// A requested hyperprior variance that no member of the family can attain.
class InfeasibleVarianceError : public DataError {
 public:
  InfeasibleVarianceError(const std::string& what, std::size_t index)
      : DataError(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace hpglm
