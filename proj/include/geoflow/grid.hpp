// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoflow {

inline constexpr int kMaxDim = 4;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Scheme { Central2, Central4, Spectral };

std::string to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

// Formal convergence order of a scheme; spectral is reported as 0 (unbounded).
int scheme_order(Scheme scheme);

// Uniform periodic lattice on the flat torus T^n, n in {2,3,4}. Points are
// stored row-major: the last axis varies fastest.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::vector<int> sizes, std::vector<double> periods,
       Scheme scheme = Scheme::Spectral);

  static Grid cube(int dim, int n, double period = kTwoPi,
                   Scheme scheme = Scheme::Spectral);

  int dim() const { return dim_; }
  int size(int axis) const { return sizes_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  double spacing(int axis) const { return periods_[axis] / sizes_[axis]; }
  Scheme scheme() const { return scheme_; }
  const std::array<int, kMaxDim>& sizes() const { return sizes_; }
  const std::array<double, kMaxDim>& periods() const { return periods_; }

  Grid with_scheme(Scheme scheme) const;

  Eigen::Index points() const { return points_; }
  Eigen::Index stride(int axis) const { return strides_[axis]; }

  std::array<int, kMaxDim> unravel(Eigen::Index point) const;
  // Indices are wrapped periodically.
  Eigen::Index ravel(std::span<const int> index) const;

  // Coordinate x_axis at every grid point.
  Eigen::ArrayXd coordinate(int axis) const;
  // Angular wave number 2*pi*mode/L_axis.
  double wavenumber(int axis, int mode) const {
    return kTwoPi * mode / periods_[axis];
  }

  // Same dimension, sizes and periods; the scheme may differ.
  bool same_lattice(const Grid& other) const;
  bool operator==(const Grid& other) const {
    return same_lattice(other) && scheme_ == other.scheme_;
  }

 private:
  int dim_ = 0;
  std::array<int, kMaxDim> sizes_{};
  std::array<double, kMaxDim> periods_{};
  std::array<Eigen::Index, kMaxDim> strides_{};
  Eigen::Index points_ = 0;
  Scheme scheme_ = Scheme::Spectral;
};

// Throws GridMismatchError unless both grids share a lattice.
void require_same_lattice(const Grid& a, const Grid& b, std::string_view what);

}  // namespace geoflow
