#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace cvxifs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Rejected inputs: bad coefficient tables, maps leaving the domain box,
// malformed configuration values.
struct ValidationError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, std::string where)
      : Error(msg + " (at " + where + ")"), location(std::move(where)) {}
  std::string location;
};

// Exhaustive enumerations refuse to start when the requested depth would
// exceed the work cap.
struct BudgetError : Error {
  using Error::Error;
};

// Thrown when an iteration hits its cap without meeting the tolerance.
// Carries the last iterate so callers can inspect or resume.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& msg, long long iters, double resid,
                   Eigen::MatrixXd state = {})
      : Error(msg), iterations(iters), residual(resid),
        last_state(std::move(state)) {}
  long long iterations;
  double residual;
  Eigen::MatrixXd last_state;
};

}  // namespace cvxifs
