// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/grid.hpp"
#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <memory>
#include <span>

namespace geoflow {

// Real-to-complex transforms on the lattice of a Grid. The spectrum uses the
// half-complex layout: the last axis keeps modes 0..N/2, the others are full.
// Instances are cached per lattice and safe to share between threads.
class SpectralBasis {
 public:
  static std::shared_ptr<const SpectralBasis> of(const Grid& grid);

  explicit SpectralBasis(const Grid& grid);
  ~SpectralBasis();
  SpectralBasis(const SpectralBasis&) = delete;
  SpectralBasis& operator=(const SpectralBasis&) = delete;

  const Grid& grid() const { return grid_; }
  Eigen::Index modes() const { return modes_; }

  Eigen::ArrayXcd forward(const Eigen::Ref<const Eigen::ArrayXd>& f) const;
  // Unnormalized input is not expected: forward() already divides by the
  // number of points, so inverse(forward(f)) == f.
  Eigen::ArrayXd inverse(const Eigen::ArrayXcd& spectrum) const;

  // Signed integer mode along an axis for half-complex entry q; in (-N/2, N/2].
  int mode(Eigen::Index q, int axis) const { return mode_(q, axis); }
  // Angular wave number along an axis for entry q.
  double wavenumber(Eigen::Index q, int axis) const;
  // Squared Euclidean length of the angular wave vector of entry q.
  const Eigen::ArrayXd& k_squared() const { return k2_; }
  // True if entry q sits on the Nyquist plane of the axis (N even).
  bool nyquist(Eigen::Index q, int axis) const {
    return 2 * mode_(q, axis) == grid_.size(axis);
  }

  // Spectral multiplier for the mixed derivative with multiplicities
  // beta[axis]; Nyquist entries of odd-order axes are zeroed.
  Eigen::ArrayXcd derivative_multiplier(std::span<const int> beta) const;
  // Cached form of derivative_multiplier; beta has kMaxDim entries.
  const Eigen::ArrayXcd& derivative_table(const std::array<int, kMaxDim>& beta) const;

 private:
  Grid grid_;
  Eigen::Index modes_ = 0;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic> mode_;
  Eigen::ArrayXd k2_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
  struct TableCache;
  std::unique_ptr<TableCache> tables_;
};

// Symbol of a real Fourier multiplier: angular wave vector (length dim) -> m.
using Symbol = std::function<double(std::span<const double>)>;

// Tabulates m on the half-complex spectrum, symmetrized as (m(k) + m(-k))/2 so
// that the filtered field stays real.
Eigen::ArrayXd multiplier_table(const SpectralBasis& basis, const Symbol& m);

// Componentwise forward transform, multiplication by m(k), inverse transform.
TensorField fourier_multiplier(const TensorField& f, const Symbol& m);
TensorField fourier_multiplier(const TensorField& f, const Eigen::ArrayXd& table);

}  // namespace geoflow
