// SPDX-License-Identifier: Apache-2.0
#include "geoflow/tensor_field.hpp"

#include "geoflow/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace geoflow {

namespace {

Eigen::Index ipow(int base, int exp) {
  Eigen::Index r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

TensorField::TensorField(Grid grid, std::vector<Variance> slots,
                         Symmetry symmetry)
    : grid_(std::move(grid)), slots_(std::move(slots)) {
  data_.setZero(grid_.points(), ipow(grid_.dim(), rank()));
  set_symmetry(symmetry);
}

TensorField TensorField::scalar(const Grid& grid, double value) {
  TensorField t(grid, {});
  t.data_.setConstant(value);
  return t;
}

TensorField TensorField::scalar(const Grid& grid, const Eigen::ArrayXd& values) {
  if (values.size() != grid.points()) {
    throw UsageError("scalar field: value count does not match grid");
  }
  TensorField t(grid, {});
  t.data_.col(0) = values;
  return t;
}

TensorField TensorField::zeros_like(const TensorField& other) {
  return TensorField(other.grid_, other.slots_, other.symmetry_);
}

int TensorField::contravariant() const {
  return static_cast<int>(std::count(slots_.begin(), slots_.end(), Variance::Up));
}

int TensorField::covariant() const { return rank() - contravariant(); }

void TensorField::set_symmetry(Symmetry symmetry) {
  switch (symmetry) {
    case Symmetry::None:
      break;
    case Symmetry::Symmetric:
      if (rank() != 2 || slots_[0] != slots_[1]) {
        throw UsageError("symmetric flag needs a rank-2 tensor with equal variances");
      }
      break;
    case Symmetry::LastPairSymmetric:
      if (rank() != 3 || slots_[1] != slots_[2]) {
        throw UsageError("last-pair symmetry needs rank 3 with equal trailing variances");
      }
      break;
    case Symmetry::Curvature:
      if (rank() != 4 || slots_[0] != slots_[1] || slots_[2] != slots_[3] ||
          slots_[0] != slots_[2]) {
        throw UsageError("curvature symmetry needs rank 4 with equal variances");
      }
      break;
  }
  symmetry_ = symmetry;
}

Eigen::Index TensorField::index(std::initializer_list<int> idx) const {
  return index(std::span<const int>(idx.begin(), idx.size()));
}

Eigen::Index TensorField::index(std::span<const int> idx) const {
  const int n = dim();
  Eigen::Index c = 0;
  for (int q = 0; q < rank(); ++q) c = c * n + idx[q];
  return c;
}

void TensorField::unravel(Eigen::Index c, std::span<int> idx) const {
  const int n = dim();
  for (int q = rank() - 1; q >= 0; --q) {
    idx[q] = static_cast<int>(c % n);
    c /= n;
  }
}

CanonicalComponent TensorField::canonical(Eigen::Index c) const {
  if (symmetry_ == Symmetry::None) return {c, 1};
  std::array<int, 4> idx{};
  unravel(c, idx);
  int sign = 1;
  switch (symmetry_) {
    case Symmetry::Symmetric:
      if (idx[0] > idx[1]) std::swap(idx[0], idx[1]);
      break;
    case Symmetry::LastPairSymmetric:
      if (idx[1] > idx[2]) std::swap(idx[1], idx[2]);
      break;
    case Symmetry::Curvature:
      if (idx[0] == idx[1] || idx[2] == idx[3]) return {c, 0};
      if (idx[0] > idx[1]) {
        std::swap(idx[0], idx[1]);
        sign = -sign;
      }
      if (idx[2] > idx[3]) {
        std::swap(idx[2], idx[3]);
        sign = -sign;
      }
      if (std::make_pair(idx[0], idx[1]) > std::make_pair(idx[2], idx[3])) {
        std::swap(idx[0], idx[2]);
        std::swap(idx[1], idx[3]);
      }
      break;
    case Symmetry::None:
      break;
  }
  return {index(std::span<const int>(idx.data(), rank())), sign};
}

void TensorField::require_compatible(const TensorField& other,
                                     std::string_view what) const {
  require_same_lattice(grid_, other.grid_, what);
  if (slots_ != other.slots_) {
    throw UsageError(std::string(what) + ": tensor slots do not match");
  }
}

TensorField& TensorField::operator+=(const TensorField& other) {
  require_compatible(other, "tensor addition");
  data_ += other.data_;
  if (symmetry_ != other.symmetry_) symmetry_ = Symmetry::None;
  return *this;
}

TensorField& TensorField::operator-=(const TensorField& other) {
  require_compatible(other, "tensor subtraction");
  data_ -= other.data_;
  if (symmetry_ != other.symmetry_) symmetry_ = Symmetry::None;
  return *this;
}

TensorField& TensorField::operator*=(double s) {
  data_ *= s;
  return *this;
}

TensorField& TensorField::scale_by(const Eigen::ArrayXd& factor) {
  data_.colwise() *= factor;
  return *this;
}

TensorField& TensorField::add_scaled(double s, const TensorField& other) {
  require_compatible(other, "tensor addition");
  data_ += s * other.data_;
  if (symmetry_ != other.symmetry_) symmetry_ = Symmetry::None;
  return *this;
}

bool TensorField::all_finite() const { return data_.allFinite(); }

void TensorField::require_finite(std::string_view what) const {
  if (!all_finite()) {
    throw NonFiniteError(std::string(what) + ": non-finite tensor components");
  }
}

double TensorField::max_abs() const {
  return data_.size() == 0 ? 0.0 : data_.abs().maxCoeff();
}

TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
TensorField operator*(double s, TensorField a) { return a *= s; }

TensorField symmetrize(const TensorField& t) {
  if (t.rank() != 2 || t.variance(0) != t.variance(1)) {
    throw UsageError("symmetrize: needs a rank-2 tensor with equal variances");
  }
  TensorField out(t.grid(), t.slots(), Symmetry::Symmetric);
  const int n = t.dim();
  for (int i = 0; i < n; ++i) {
    out.comp(t.index({i, i})) = t.comp(t.index({i, i}));
    for (int j = i + 1; j < n; ++j) {
      Eigen::ArrayXd avg = 0.5 * (t.comp(t.index({i, j})) + t.comp(t.index({j, i})));
      out.comp(out.index({i, j})) = avg;
      out.comp(out.index({j, i})) = avg;
    }
  }
  return out;
}

int packed_index(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return a * n - a * (a - 1) / 2 + (b - a);
}

int packed_size(int n) { return n * (n + 1) / 2; }

double max_abs_difference(const TensorField& a, const TensorField& b) {
  require_same_lattice(a.grid(), b.grid(), "max_abs_difference");
  if (a.components() != b.components()) {
    throw UsageError("max_abs_difference: component counts differ");
  }
  return (a.data() - b.data()).abs().maxCoeff();
}

}  // namespace geoflow
