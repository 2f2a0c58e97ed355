// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace geoflow {

enum class Variance : std::uint8_t { Up, Down };

// Index symmetry known to hold exactly for the stored components.
//   Symmetric          rank 2, T_ij = T_ji
//   LastPairSymmetric  rank 3, T_aij = T_aji (Christoffel symbols, grad of a
//                      symmetric two-tensor)
//   Curvature          rank 4, antisymmetric in (0,1) and (2,3), symmetric
//                      under pair exchange
enum class Symmetry : std::uint8_t { None, Symmetric, LastPairSymmetric, Curvature };

// Canonical representative of a component under the field's symmetry:
// T[c] == sign * T[index]. sign == 0 marks components that vanish identically.
struct CanonicalComponent {
  Eigen::Index index;
  int sign;
};

// Tensor-valued grid function. Storage is points x components, so each
// component is a contiguous column; component indices are row-major over the
// slots. Full components are stored even when a symmetry is declared.
class TensorField {
 public:
  TensorField() = default;
  TensorField(Grid grid, std::vector<Variance> slots,
              Symmetry symmetry = Symmetry::None);

  static TensorField scalar(const Grid& grid, double value = 0.0);
  static TensorField scalar(const Grid& grid, const Eigen::ArrayXd& values);
  static TensorField zeros_like(const TensorField& other);

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int rank() const { return static_cast<int>(slots_.size()); }
  int contravariant() const;
  int covariant() const;
  const std::vector<Variance>& slots() const { return slots_; }
  Variance variance(int slot) const { return slots_[slot]; }

  Symmetry symmetry() const { return symmetry_; }
  bool symmetric() const { return symmetry_ == Symmetry::Symmetric; }
  // Declares a symmetry; throws if the rank/variances do not allow it.
  void set_symmetry(Symmetry symmetry);

  Eigen::Index points() const { return data_.rows(); }
  Eigen::Index components() const { return data_.cols(); }

  Eigen::ArrayXXd& data() { return data_; }
  const Eigen::ArrayXXd& data() const { return data_; }
  auto comp(Eigen::Index c) { return data_.col(c); }
  auto comp(Eigen::Index c) const { return data_.col(c); }

  Eigen::Index index(std::initializer_list<int> idx) const;
  Eigen::Index index(std::span<const int> idx) const;
  // Writes the slot indices of component c into idx (size >= rank).
  void unravel(Eigen::Index c, std::span<int> idx) const;
  CanonicalComponent canonical(Eigen::Index c) const;

  // Values of the scalar component (rank 0 only).
  auto values() { return data_.col(0); }
  auto values() const { return data_.col(0); }

  TensorField& operator+=(const TensorField& other);
  TensorField& operator-=(const TensorField& other);
  TensorField& operator*=(double s);
  // Pointwise multiplication by a scalar field.
  TensorField& scale_by(const Eigen::ArrayXd& factor);
  // this += s * other
  TensorField& add_scaled(double s, const TensorField& other);

  bool all_finite() const;
  void require_finite(std::string_view what) const;
  double max_abs() const;

 private:
  void require_compatible(const TensorField& other, std::string_view what) const;

  Grid grid_;
  std::vector<Variance> slots_;
  Symmetry symmetry_ = Symmetry::None;
  Eigen::ArrayXXd data_;
};

TensorField operator+(TensorField a, const TensorField& b);
TensorField operator-(TensorField a, const TensorField& b);
TensorField operator*(double s, TensorField a);

// Symmetric part of a rank-2 tensor with equal slot variances.
TensorField symmetrize(const TensorField& t);

// Index of the unordered pair (a,b) in packed upper-triangular order:
// (0,0),(0,1),...,(0,n-1),(1,1),...
int packed_index(int a, int b, int n);
int packed_size(int n);

// Sup-norm of the difference, over all points and components.
double max_abs_difference(const TensorField& a, const TensorField& b);

}  // namespace geoflow
