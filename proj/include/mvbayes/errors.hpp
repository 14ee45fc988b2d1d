/**
 * @file errors.hpp
 * @brief Exception types raised by the mvbayes library
 *
 * Precondition and dimension violations raise std::invalid_argument.
 * Failures that depend on the data (degenerate designs, infeasible
 * optimisation problems, malformed input files) derive from mvbayes::Error.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mvbayes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares design matrix is rank deficient.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Predictive covariance is singular because both the prior and the noise are degenerate.
class DegenerateFilterError : public Error {
 public:
  using Error::Error;
};

/// The mean-variance problem has no admissible frontier (Theta outside (0, 1),
/// singular second-moment matrix, target below the frontier domain).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (unknown key, out-of-range value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvbayes
