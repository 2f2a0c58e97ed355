// SPDX-License-Identifier: Apache-2.0
#include "geoflow/differentiate.hpp"

#include "geoflow/errors.hpp"

#include <string>

namespace geoflow {

namespace {

// out[p] = f[p + s e_axis], periodic.
Eigen::ArrayXd shifted(const Grid& grid, const Eigen::ArrayXd& f, int axis, int s) {
  const Eigen::Index stride = grid.stride(axis);
  const int n = grid.size(axis);
  const Eigen::Index block = stride * n;
  const Eigen::Index outer = grid.points() / block;
  Eigen::ArrayXd out(f.size());
  for (Eigen::Index o = 0; o < outer; ++o) {
    for (int i = 0; i < n; ++i) {
      int j = (i + s) % n;
      if (j < 0) j += n;
      out.segment(o * block + i * stride, stride) =
          f.segment(o * block + j * stride, stride);
    }
  }
  return out;
}

}  // namespace

Eigen::ArrayXd stencil_d1(const Grid& grid, const Eigen::ArrayXd& f, int axis) {
  const double h = grid.spacing(axis);
  if (grid.scheme() == Scheme::Central2) {
    return (shifted(grid, f, axis, 1) - shifted(grid, f, axis, -1)) / (2.0 * h);
  }
  return (8.0 * (shifted(grid, f, axis, 1) - shifted(grid, f, axis, -1)) -
          (shifted(grid, f, axis, 2) - shifted(grid, f, axis, -2))) /
         (12.0 * h);
}

Eigen::ArrayXd stencil_d2(const Grid& grid, const Eigen::ArrayXd& f, int axis) {
  const double h = grid.spacing(axis);
  if (grid.scheme() == Scheme::Central2) {
    return (shifted(grid, f, axis, 1) - 2.0 * f + shifted(grid, f, axis, -1)) / (h * h);
  }
  return (16.0 * (shifted(grid, f, axis, 1) + shifted(grid, f, axis, -1)) -
          (shifted(grid, f, axis, 2) + shifted(grid, f, axis, -2)) - 30.0 * f) /
         (12.0 * h * h);
}

ColumnDerivatives::ColumnDerivatives(const Grid& grid,
                                     const Eigen::Ref<const Eigen::ArrayXd>& f)
    : grid_(grid) {
  if (f.size() != grid.points()) {
    throw GridMismatchError("derivative: column size does not match grid");
  }
  if (!f.allFinite()) throw NonFiniteError("derivative: non-finite input");
  if (grid.scheme() == Scheme::Spectral) {
    basis_ = SpectralBasis::of(grid);
    spectrum_ = basis_->forward(f);
  } else {
    f_ = f;
  }
}

Eigen::ArrayXd ColumnDerivatives::operator()(const MultiIndex& beta) const {
  if (basis_) {
    bool zero_order = true;
    for (int a = 0; a < grid_.dim(); ++a) zero_order = zero_order && beta[a] == 0;
    if (zero_order) return basis_->inverse(spectrum_);
    return basis_->inverse(spectrum_ * basis_->derivative_table(beta));
  }
  Eigen::ArrayXd g = f_;
  for (int a = 0; a < grid_.dim(); ++a) {
    int b = beta[a];
    for (; b >= 2; b -= 2) g = stencil_d2(grid_, g, a);
    if (b == 1) g = stencil_d1(grid_, g, a);
  }
  return g;
}

Eigen::ArrayXd ColumnDerivatives::first(int axis) const {
  MultiIndex beta{};
  beta[axis] = 1;
  return (*this)(beta);
}

Eigen::ArrayXd ColumnDerivatives::second(int a, int b) const {
  MultiIndex beta{};
  beta[a] += 1;
  beta[b] += 1;
  return (*this)(beta);
}

Eigen::ArrayXd derivative(const Grid& grid, const Eigen::Ref<const Eigen::ArrayXd>& f,
                          const MultiIndex& beta) {
  return ColumnDerivatives(grid, f)(beta);
}

TensorField multi_derivative(const TensorField& f, const MultiIndex& beta) {
  f.require_finite("derivative");
  TensorField out = TensorField::zeros_like(f);
  for (Eigen::Index c = 0; c < f.components(); ++c) {
    const CanonicalComponent cc = f.canonical(c);
    if (cc.sign == 0) continue;
    if (cc.index != c) {
      out.comp(c) = cc.sign * out.comp(cc.index);
      continue;
    }
    out.comp(c) = derivative(f.grid(), f.comp(c), beta);
  }
  return out;
}

TensorField partial_derivative(const TensorField& f, int axis, int order) {
  if (axis < 0 || axis >= f.dim()) {
    throw UsageError("partial_derivative: axis " + std::to_string(axis) +
                     " out of range");
  }
  if (order != 1 && order != 2) {
    throw UsageError("partial_derivative: order must be 1 or 2");
  }
  MultiIndex beta{};
  beta[axis] = order;
  return multi_derivative(f, beta);
}

TensorField gradient(const TensorField& f) {
  f.require_finite("gradient");
  const int n = f.dim();
  std::vector<Variance> slots{Variance::Down};
  slots.insert(slots.end(), f.slots().begin(), f.slots().end());
  Symmetry sym = f.symmetric() ? Symmetry::LastPairSymmetric : Symmetry::None;
  TensorField out(f.grid(), slots, sym);
  const Eigen::Index block = f.components();
  for (Eigen::Index c = 0; c < block; ++c) {
    const CanonicalComponent cc = f.canonical(c);
    if (cc.sign == 0) continue;
    if (cc.index != c) {
      for (int a = 0; a < n; ++a) {
        out.comp(a * block + c) = cc.sign * out.comp(a * block + cc.index);
      }
      continue;
    }
    ColumnDerivatives d(f.grid(), f.comp(c));
    for (int a = 0; a < n; ++a) out.comp(a * block + c) = d.first(a);
  }
  return out;
}

std::vector<MultiIndex> multi_indices(int dim, int order) {
  std::vector<MultiIndex> out;
  MultiIndex beta{};
  auto rec = [&](auto& self, int axis, int left) -> void {
    if (axis == dim - 1) {
      beta[axis] = left;
      out.push_back(beta);
      return;
    }
    for (int b = left; b >= 0; --b) {
      beta[axis] = b;
      self(self, axis + 1, left - b);
    }
  };
  rec(rec, 0, order);
  return out;
}

}  // namespace geoflow
