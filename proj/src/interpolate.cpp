// SPDX-License-Identifier: Apache-2.0
#include "geoflow/interpolate.hpp"

#include "geoflow/errors.hpp"
#include "geoflow/spectral.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>

namespace geoflow {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}  // namespace

PeriodicSpline::PeriodicSpline(const TensorField& f) : grid_(f.grid()) {
  f.require_finite("interpolate");
  samples_ = f.data().transpose();
  auto basis = SpectralBasis::of(grid_);
  const int d = grid_.dim();
  // Fourier symbol of the sampled cubic B-spline: prod (4 + 2 cos(2 pi m/N))/6.
  Eigen::ArrayXd inv_symbol(basis->modes());
  for (Eigen::Index q = 0; q < basis->modes(); ++q) {
    double s = 1.0;
    for (int a = 0; a < d; ++a) {
      s *= (4.0 + 2.0 * std::cos(kTwoPi * basis->mode(q, a) / grid_.size(a))) / 6.0;
    }
    inv_symbol[q] = 1.0 / s;
  }
  coeffs_.resize(f.components(), grid_.points());
  for (Eigen::Index c = 0; c < f.components(); ++c) {
    coeffs_.row(c) = basis->inverse(basis->forward(f.comp(c)) * inv_symbol).transpose();
  }
}

void PeriodicSpline::evaluate(std::span<const double> x,
                              Eigen::Ref<Eigen::ArrayXd> out) const {
  const int d = grid_.dim();
  std::array<int, kMaxDim> base{};
  std::array<std::array<double, 4>, kMaxDim> w{};
  bool on_node = true;
  for (int a = 0; a < d; ++a) {
    double t = x[a] / grid_.spacing(a);
    // x/h for a node coordinate may be off by an ulp
    const double nearest = std::round(t);
    if (std::abs(t - nearest) <= 16.0 * kEps * std::max(1.0, std::abs(t))) t = nearest;
    const double fl = std::floor(t);
    const double u = t - fl;
    base[a] = static_cast<int>(fl);
    on_node = on_node && u == 0.0;
    const double u2 = u * u;
    const double u3 = u2 * u;
    w[a][0] = (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0;
    w[a][1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
    w[a][2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
    w[a][3] = u3 / 6.0;
  }
  if (on_node) {
    out = samples_.col(grid_.ravel(std::span<const int>(base.data(), d)));
    return;
  }
  out.setZero();
  std::array<int, kMaxDim> off{};
  std::array<int, kMaxDim> idx{};
  const int corners = 1 << (2 * d);
  for (int k = 0; k < corners; ++k) {
    double weight = 1.0;
    for (int a = 0; a < d; ++a) {
      off[a] = (k >> (2 * a)) & 3;
      idx[a] = base[a] + off[a] - 1;
      weight *= w[a][off[a]];
    }
    out += weight * coeffs_.col(grid_.ravel(std::span<const int>(idx.data(), d)));
  }
}

Eigen::ArrayXXd interpolate(const TensorField& f, const Eigen::ArrayXXd& points) {
  if (points.cols() != f.dim()) {
    throw UsageError("interpolate: points need one column per axis");
  }
  if (!points.allFinite()) throw NonFiniteError("interpolate: non-finite query point");
  PeriodicSpline spline(f);
  Eigen::ArrayXXd out(points.rows(), f.components());
  Eigen::ArrayXd x(f.dim());
  Eigen::ArrayXd v(f.components());
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    x = points.row(r).transpose();
    spline.evaluate(std::span<const double>(x.data(), f.dim()), v);
    out.row(r) = v.transpose();
  }
  return out;
}

}  // namespace geoflow
