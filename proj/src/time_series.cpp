// SPDX-License-Identifier: Apache-2.0
#include "geoflow/time_series.hpp"

#include "geoflow/errors.hpp"

#include <algorithm>

namespace geoflow {

void TimeSeries::validate() const {
  if (times.empty() || times.size() != slices.size()) {
    throw UsageError("time series: need one slice per time and at least one slice");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw UsageError("time series: times must increase");
    require_same_lattice(slices[i].grid(), slices[0].grid(), "time series");
    if (slices[i].slots() != slices[0].slots()) {
      throw UsageError("time series: slices differ in slot structure");
    }
  }
}

TimeSeries difference(const TimeSeries& a, const TimeSeries& b) {
  if (a.times != b.times) throw UsageError("difference: time grids differ");
  TimeSeries out;
  out.times = a.times;
  out.slices.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.slices.push_back(a.slices[i] - b.slices[i]);
  return out;
}

TimeSeries zero_series(const std::vector<double>& times, const TensorField& like) {
  TimeSeries out;
  out.times = times;
  out.slices.assign(times.size(), TensorField::zeros_like(like));
  return out;
}

double sup_norm(const TimeSeries& u) {
  double m = 0.0;
  for (const auto& s : u.slices) m = std::max(m, s.max_abs());
  return m;
}

}  // namespace geoflow
