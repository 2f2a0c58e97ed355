// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <span>

namespace geoflow {

// Periodic tensor-product cubic B-spline through every component of a field.
// The interpolation prefilter is applied in Fourier space, so the spline
// reproduces the samples at the nodes; queries that land exactly on a node
// return the stored value untouched.
class PeriodicSpline {
 public:
  explicit PeriodicSpline(const TensorField& f);

  const Grid& grid() const { return grid_; }
  Eigen::Index components() const { return coeffs_.rows(); }

  // All components at one point; coordinates are wrapped into the chart.
  void evaluate(std::span<const double> x, Eigen::Ref<Eigen::ArrayXd> out) const;

 private:
  Grid grid_;
  Eigen::ArrayXXd samples_;  // components x points
  Eigen::ArrayXXd coeffs_;   // components x points
};

// Values at each row of points (rows x dim); result is rows x components.
Eigen::ArrayXXd interpolate(const TensorField& f, const Eigen::ArrayXXd& points);

}  // namespace geoflow
