// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace geoflow {

// Smallest admissible eigenvalue of a metric at any grid point.
inline constexpr double kEigenFloor = 1e-10;

// Symmetric positive-definite rank-(0,2) field with its inverse cached.
class MetricField {
 public:
  MetricField() = default;
  // Throws UsageError unless g is rank (0,2) and exactly symmetric, and
  // DegenerateMetricError at the worst point if an eigenvalue is <= floor.
  explicit MetricField(TensorField g);

  static MetricField flat(const Grid& grid);
  // e^{2u} delta
  static MetricField conformal(const Grid& grid, const Eigen::ArrayXd& u);

  const TensorField& value() const { return g_; }
  const TensorField& inverse() const { return inv_; }
  const Grid& grid() const { return g_.grid(); }
  int dim() const { return g_.dim(); }

  auto g(int i, int j) const { return g_.comp(g_.index({i, j})); }
  auto inv(int i, int j) const { return inv_.comp(inv_.index({i, j})); }

  // Pointwise smallest eigenvalue.
  Eigen::ArrayXd min_eigenvalue() const;
  // Pointwise sqrt(det g).
  Eigen::ArrayXd volume_density() const;

 private:
  TensorField g_;
  TensorField inv_;
};

// Pointwise inverse of g, as a symmetric rank-(2,0) field.
TensorField invert_metric(const MetricField& g);

// Pairs of slots to contract, e.g. {{0,2}} contracts the first and third slot.
struct IndexSpec {
  std::vector<std::array<int, 2>> pairs;
};

// Contracts each listed pair. Mixed-variance pairs contract directly;
// same-variance pairs need the metric (g^{ab} for two lower slots, g_ab for two
// upper slots) and throw UsageError without it.
TensorField contract(const TensorField& t, const IndexSpec& spec,
                     const MetricField* g = nullptr);

TensorField raise(const TensorField& t, int slot, const MetricField& g);
TensorField lower(const TensorField& t, int slot, const MetricField& g);

// g-trace of a rank-2 tensor (any variances).
TensorField trace(const TensorField& t, const MetricField& g);

// Pointwise |T|_g.
TensorField tensor_norm(const TensorField& t, const MetricField& g);

// Full contraction of a and b (same slots) through g.
TensorField inner(const TensorField& a, const TensorField& b, const MetricField& g);

TensorField outer(const TensorField& a, const TensorField& b);

// Kronecker delta as a (1,1) field.
TensorField identity(const Grid& grid);

// Sup over points of the matrix max-norm of g g^{-1} - I.
double inverse_residual(const TensorField& g, const TensorField& ginv);

}  // namespace geoflow
