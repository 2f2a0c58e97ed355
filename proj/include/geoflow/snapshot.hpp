// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/tensor_field.hpp"

#include <filesystem>
#include <iosfwd>

namespace geoflow {

struct Snapshot {
  TensorField field;
  double time = 0.0;
};

// One line of JSON
//   {"dim","sizes","periods","scheme","rank":[r,s],"slots","symmetric","time"}
// followed by the little-endian float64 payload, point-major. Symmetric
// rank-2 fields store only the packed upper triangle of each point.
void write_snapshot(std::ostream& os, const TensorField& field, double time);
Snapshot read_snapshot(std::istream& is);

void write_snapshot(const std::filesystem::path& path, const TensorField& field,
                    double time);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace geoflow
