// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace geoflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: wrong ranks, slot mismatches, invalid parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

// Raised when the smallest eigenvalue of a metric drops below the floor.
class DegenerateMetricError : public Error {
 public:
  DegenerateMetricError(const std::string& what, Eigen::Index point,
                        double min_eigenvalue)
      : Error(what), point_(point), min_eigenvalue_(min_eigenvalue) {}

  Eigen::Index point() const { return point_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  Eigen::Index point_;
  double min_eigenvalue_;
};

class InconclusiveFitError : public Error {
 public:
  using Error::Error;
};

class DiffeomorphismError : public Error {
 public:
  using Error::Error;
};

// Failures during time integration or fixed-point iteration.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace geoflow
