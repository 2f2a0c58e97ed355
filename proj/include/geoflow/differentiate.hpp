// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/grid.hpp"
#include "geoflow/spectral.hpp"
#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <span>

namespace geoflow {

// Multi-index as per-axis multiplicities, e.g. {2,0,1} is d^3/dx0^2 dx2.
using MultiIndex = std::array<int, kMaxDim>;

// Derivatives of one grid function under the grid's scheme. The spectral
// scheme transforms once and reuses the spectrum for every request; finite
// differences nest one-dimensional stencils (second derivatives use the
// dedicated d2 stencil on repeated axes).
class ColumnDerivatives {
 public:
  ColumnDerivatives(const Grid& grid, const Eigen::Ref<const Eigen::ArrayXd>& f);

  Eigen::ArrayXd operator()(const MultiIndex& beta) const;
  Eigen::ArrayXd first(int axis) const;
  Eigen::ArrayXd second(int a, int b) const;

 private:
  Grid grid_;
  Eigen::ArrayXd f_;
  std::shared_ptr<const SpectralBasis> basis_;
  Eigen::ArrayXcd spectrum_;
};

// Finite-difference stencils along one axis (periodic).
Eigen::ArrayXd stencil_d1(const Grid& grid, const Eigen::ArrayXd& f, int axis);
Eigen::ArrayXd stencil_d2(const Grid& grid, const Eigen::ArrayXd& f, int axis);

Eigen::ArrayXd derivative(const Grid& grid, const Eigen::Ref<const Eigen::ArrayXd>& f,
                          const MultiIndex& beta);

// Componentwise d^order/dx_axis^order, order in {1,2}.
TensorField partial_derivative(const TensorField& f, int axis, int order);

// Componentwise coordinate gradient; the new covariant slot comes first.
TensorField gradient(const TensorField& f);

// Componentwise mixed derivative of arbitrary order.
TensorField multi_derivative(const TensorField& f, const MultiIndex& beta);

// All multi-indices of total order k in dim variables, lexicographic.
std::vector<MultiIndex> multi_indices(int dim, int order);

}  // namespace geoflow
