// SPDX-License-Identifier: Apache-2.0
#include "geoflow/grid.hpp"

#include "geoflow/errors.hpp"

#include <string>

namespace geoflow {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Central2:
      return "central-2";
    case Scheme::Central4:
      return "central-4";
    case Scheme::Spectral:
      return "spectral";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "central-2" || name == "central2") return Scheme::Central2;
  if (name == "central-4" || name == "central4") return Scheme::Central4;
  if (name == "spectral") return Scheme::Spectral;
  throw UsageError("unknown differentiation scheme '" + std::string(name) +
                   "'");
}

int scheme_order(Scheme scheme) {
  switch (scheme) {
    case Scheme::Central2:
      return 2;
    case Scheme::Central4:
      return 4;
    case Scheme::Spectral:
      return 0;
  }
  return 0;
}

Grid::Grid(int dim, std::vector<int> sizes, std::vector<double> periods,
           Scheme scheme)
    : dim_(dim), scheme_(scheme) {
  if (dim < 2 || dim > kMaxDim) {
    throw UsageError("grid dimension must be 2, 3 or 4, got " +
                     std::to_string(dim));
  }
  if (static_cast<int>(sizes.size()) != dim ||
      static_cast<int>(periods.size()) != dim) {
    throw UsageError("grid sizes/periods must have one entry per axis");
  }
  points_ = 1;
  for (int a = 0; a < dim; ++a) {
    if (sizes[a] < 8) {
      throw UsageError("grid needs at least 8 points per axis, axis " +
                       std::to_string(a) + " has " + std::to_string(sizes[a]));
    }
    if (!(periods[a] > 0.0)) {
      throw UsageError("grid periods must be positive");
    }
    sizes_[a] = sizes[a];
    periods_[a] = periods[a];
    points_ *= sizes[a];
  }
  Eigen::Index s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= sizes_[a];
  }
}

Grid Grid::cube(int dim, int n, double period, Scheme scheme) {
  return Grid(dim, std::vector<int>(dim, n), std::vector<double>(dim, period),
              scheme);
}

Grid Grid::with_scheme(Scheme scheme) const {
  Grid g = *this;
  g.scheme_ = scheme;
  return g;
}

std::array<int, kMaxDim> Grid::unravel(Eigen::Index point) const {
  std::array<int, kMaxDim> idx{};
  for (int a = 0; a < dim_; ++a) {
    idx[a] = static_cast<int>((point / strides_[a]) % sizes_[a]);
  }
  return idx;
}

Eigen::Index Grid::ravel(std::span<const int> index) const {
  Eigen::Index p = 0;
  for (int a = 0; a < dim_; ++a) {
    int i = index[a] % sizes_[a];
    if (i < 0) i += sizes_[a];
    p += i * strides_[a];
  }
  return p;
}

Eigen::ArrayXd Grid::coordinate(int axis) const {
  Eigen::ArrayXd x(points_);
  const double h = spacing(axis);
  for (Eigen::Index p = 0; p < points_; ++p) {
    x[p] = h * static_cast<double>((p / strides_[axis]) % sizes_[axis]);
  }
  return x;
}

bool Grid::same_lattice(const Grid& other) const {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (sizes_[a] != other.sizes_[a] || periods_[a] != other.periods_[a]) {
      return false;
    }
  }
  return true;
}

void require_same_lattice(const Grid& a, const Grid& b, std::string_view what) {
  if (!a.same_lattice(b)) {
    throw GridMismatchError(std::string(what) +
                            ": operands live on different grids");
  }
}

}  // namespace geoflow
