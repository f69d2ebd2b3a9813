#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Newton failed within its iteration or line-search budget.
class NewtonDivergence : public Error {
 public:
  NewtonDivergence(const std::string& what, double last_residual, int time_index = -1)
      : Error(what), last_residual_(last_residual), time_index_(time_index) {}
  double last_residual() const { return last_residual_; }
  int time_index() const { return time_index_; }

 private:
  double last_residual_;
  int time_index_;
};

class LinearSolveFailure : public Error {
 public:
  LinearSolveFailure(const std::string& what, double residual, int time_index = -1)
      : Error(what), residual_(residual), time_index_(time_index) {}
  double residual() const { return residual_; }
  int time_index() const { return time_index_; }

 private:
  double residual_;
  int time_index_;
};

/// A Fokker-Planck step produced values below the positivity threshold.
class NegativityViolation : public Error {
 public:
  NegativityViolation(const std::string& what, double min_value, int time_index = -1)
      : Error(what), min_value_(min_value), time_index_(time_index) {}
  double min_value() const { return min_value_; }
  int time_index() const { return time_index_; }

 private:
  double min_value_;
  int time_index_;
};

class OracleDivergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfg
