// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/tensor_field.hpp"

#include <vector>

namespace geoflow {

// Tensor field sampled at increasing times on one lattice.
struct TimeSeries {
  std::vector<double> times;
  std::vector<TensorField> slices;

  std::size_t size() const { return times.size(); }
  const Grid& grid() const { return slices.front().grid(); }

  // Throws UsageError on empty/unequal lengths, non-increasing times or
  // slices that differ in lattice or slot structure.
  void validate() const;
};

// Slice-wise a - b; the time grids must agree exactly.
TimeSeries difference(const TimeSeries& a, const TimeSeries& b);

// Zero series with the given times and the slot structure of like.
TimeSeries zero_series(const std::vector<double>& times, const TensorField& like);

// max over slices of max_abs.
double sup_norm(const TimeSeries& u);

}  // namespace geoflow
