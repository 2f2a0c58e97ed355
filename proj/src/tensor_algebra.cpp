// SPDX-License-Identifier: Apache-2.0
#include "geoflow/tensor_algebra.hpp"

#include "geoflow/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace geoflow {

namespace {

template <int N>
void invert_pointwise(const TensorField& g, TensorField& inv) {
  using Mat = Eigen::Matrix<double, N, N>;
  Mat m;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  double worst = std::numeric_limits<double>::infinity();
  Eigen::Index worst_point = -1;
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) m(i, j) = g.data()(p, i * N + j);
    }
    es.compute(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()[0];
    if (!(lo > kEigenFloor) && !(lo >= worst)) {
      worst = lo;
      worst_point = p;
    }
    Mat mi = m.inverse();
    for (int i = 0; i < N; ++i) {
      inv.data()(p, i * N + i) = mi(i, i);
      for (int j = i + 1; j < N; ++j) {
        const double v = 0.5 * (mi(i, j) + mi(j, i));
        inv.data()(p, i * N + j) = v;
        inv.data()(p, j * N + i) = v;
      }
    }
  }
  if (worst_point >= 0) {
    throw DegenerateMetricError("metric is not positive definite at grid point " +
                                    std::to_string(worst_point) +
                                    " (smallest eigenvalue " + std::to_string(worst) + ")",
                                worst_point, worst);
  }
}

template <int N>
Eigen::ArrayXd pointwise_min_eig(const TensorField& g) {
  using Mat = Eigen::Matrix<double, N, N>;
  Mat m;
  Eigen::SelfAdjointEigenSolver<Mat> es;
  Eigen::ArrayXd out(g.points());
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) m(i, j) = g.data()(p, i * N + j);
    }
    es.compute(m, Eigen::EigenvaluesOnly);
    out[p] = es.eigenvalues()[0];
  }
  return out;
}

template <int N>
Eigen::ArrayXd pointwise_det(const TensorField& g) {
  Eigen::Matrix<double, N, N> m;
  Eigen::ArrayXd out(g.points());
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) m(i, j) = g.data()(p, i * N + j);
    }
    out[p] = m.determinant();
  }
  return out;
}

// Contract slots s1 < s2 with weights w(a,b) (nullptr weights = delta).
TensorField contract_pair(const TensorField& t, int s1, int s2, const TensorField* w) {
  const int n = t.dim();
  std::vector<Variance> slots;
  for (int s = 0; s < t.rank(); ++s) {
    if (s != s1 && s != s2) slots.push_back(t.variance(s));
  }
  TensorField out(t.grid(), slots);
  std::array<int, 8> rest{};
  std::array<int, 8> full{};
  for (Eigen::Index o = 0; o < out.components(); ++o) {
    out.unravel(o, rest);
    for (int s = 0, r = 0; s < t.rank(); ++s) {
      if (s != s1 && s != s2) full[s] = rest[r++];
    }
    auto acc = out.comp(o);
    for (int a = 0; a < n; ++a) {
      full[s1] = a;
      if (w == nullptr) {
        full[s2] = a;
        acc += t.comp(t.index(std::span<const int>(full.data(), t.rank())));
        continue;
      }
      for (int b = 0; b < n; ++b) {
        full[s2] = b;
        acc += w->comp(w->index({a, b})) *
               t.comp(t.index(std::span<const int>(full.data(), t.rank())));
      }
    }
  }
  return out;
}

// Move slot s with the weights w (rank 2, applied as out[..a..] = w_ab t[..b..]).
TensorField move_slot(const TensorField& t, int slot, const TensorField& w,
                      Variance target) {
  const int n = t.dim();
  std::vector<Variance> slots = t.slots();
  slots[slot] = target;
  TensorField out(t.grid(), slots);
  std::array<int, 8> idx{};
  for (Eigen::Index o = 0; o < out.components(); ++o) {
    out.unravel(o, idx);
    const int a = idx[slot];
    auto acc = out.comp(o);
    for (int b = 0; b < n; ++b) {
      idx[slot] = b;
      acc += w.comp(w.index({a, b})) * t.comp(t.index(std::span<const int>(idx.data(), t.rank())));
    }
  }
  return out;
}

}  // namespace

MetricField::MetricField(TensorField g) : g_(std::move(g)) {
  if (g_.rank() != 2 || g_.variance(0) != Variance::Down ||
      g_.variance(1) != Variance::Down) {
    throw UsageError("metric must be a rank-(0,2) tensor");
  }
  g_.require_finite("metric");
  const int n = g_.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((g_.comp(g_.index({i, j})) != g_.comp(g_.index({j, i}))).any()) {
        throw UsageError("metric components are not symmetric");
      }
    }
  }
  g_.set_symmetry(Symmetry::Symmetric);
  inv_ = TensorField(g_.grid(), {Variance::Up, Variance::Up}, Symmetry::Symmetric);
  switch (n) {
    case 2:
      invert_pointwise<2>(g_, inv_);
      break;
    case 3:
      invert_pointwise<3>(g_, inv_);
      break;
    default:
      invert_pointwise<4>(g_, inv_);
      break;
  }
}

MetricField MetricField::flat(const Grid& grid) {
  TensorField g(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  for (int i = 0; i < grid.dim(); ++i) g.comp(g.index({i, i})).setOnes();
  return MetricField(std::move(g));
}

MetricField MetricField::conformal(const Grid& grid, const Eigen::ArrayXd& u) {
  TensorField g(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  const Eigen::ArrayXd e = (2.0 * u).exp();
  for (int i = 0; i < grid.dim(); ++i) g.comp(g.index({i, i})) = e;
  return MetricField(std::move(g));
}

Eigen::ArrayXd MetricField::min_eigenvalue() const {
  switch (dim()) {
    case 2:
      return pointwise_min_eig<2>(g_);
    case 3:
      return pointwise_min_eig<3>(g_);
    default:
      return pointwise_min_eig<4>(g_);
  }
}

Eigen::ArrayXd MetricField::volume_density() const {
  switch (dim()) {
    case 2:
      return pointwise_det<2>(g_).sqrt();
    case 3:
      return pointwise_det<3>(g_).sqrt();
    default:
      return pointwise_det<4>(g_).sqrt();
  }
}

TensorField invert_metric(const MetricField& g) { return g.inverse(); }

TensorField contract(const TensorField& t, const IndexSpec& spec, const MetricField* g) {
  // Track where the original slots end up as pairs are removed.
  std::vector<int> position(t.rank());
  for (int s = 0; s < t.rank(); ++s) position[s] = s;
  std::vector<bool> used(t.rank(), false);
  for (const auto& pr : spec.pairs) {
    for (int s : pr) {
      if (s < 0 || s >= t.rank() || used[s]) {
        throw UsageError("contract: slots must be distinct and within rank");
      }
      used[s] = true;
    }
    if (pr[0] == pr[1]) throw UsageError("contract: a slot cannot pair with itself");
  }
  TensorField out = t;
  for (const auto& pr : spec.pairs) {
    int s1 = position[pr[0]];
    int s2 = position[pr[1]];
    if (s1 > s2) std::swap(s1, s2);
    const Variance v1 = out.variance(s1);
    const Variance v2 = out.variance(s2);
    const TensorField* w = nullptr;
    if (v1 == v2) {
      if (g == nullptr) {
        throw UsageError("contract: same-variance slots need a metric");
      }
      w = v1 == Variance::Down ? &g->inverse() : &g->value();
      require_same_lattice(t.grid(), g->grid(), "contract");
    }
    out = contract_pair(out, s1, s2, w);
    for (int& p : position) {
      if (p > s2) p -= 2;
      else if (p > s1) p -= 1;
    }
  }
  return out;
}

TensorField raise(const TensorField& t, int slot, const MetricField& g) {
  if (slot < 0 || slot >= t.rank() || t.variance(slot) != Variance::Down) {
    throw UsageError("raise: slot must be a covariant slot");
  }
  require_same_lattice(t.grid(), g.grid(), "raise");
  return move_slot(t, slot, g.inverse(), Variance::Up);
}

TensorField lower(const TensorField& t, int slot, const MetricField& g) {
  if (slot < 0 || slot >= t.rank() || t.variance(slot) != Variance::Up) {
    throw UsageError("lower: slot must be a contravariant slot");
  }
  require_same_lattice(t.grid(), g.grid(), "lower");
  return move_slot(t, slot, g.value(), Variance::Down);
}

TensorField trace(const TensorField& t, const MetricField& g) {
  if (t.rank() != 2) throw UsageError("trace: needs a rank-2 tensor");
  return contract(t, IndexSpec{{{0, 1}}}, &g);
}

TensorField inner(const TensorField& a, const TensorField& b, const MetricField& g) {
  if (a.slots() != b.slots()) throw UsageError("inner: slot variances differ");
  require_same_lattice(a.grid(), b.grid(), "inner");
  TensorField bb = b;
  for (int s = 0; s < b.rank(); ++s) {
    bb = b.variance(s) == Variance::Down ? raise(bb, s, g) : lower(bb, s, g);
  }
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(a.points());
  for (Eigen::Index c = 0; c < a.components(); ++c) acc += a.comp(c) * bb.comp(c);
  return TensorField::scalar(a.grid(), acc);
}

TensorField tensor_norm(const TensorField& t, const MetricField& g) {
  TensorField sq = inner(t, t, g);
  // rounding can leave tiny negatives for near-zero tensors
  sq.values() = sq.values().max(0.0).sqrt();
  return sq;
}

TensorField outer(const TensorField& a, const TensorField& b) {
  require_same_lattice(a.grid(), b.grid(), "outer");
  std::vector<Variance> slots = a.slots();
  slots.insert(slots.end(), b.slots().begin(), b.slots().end());
  TensorField out(a.grid(), slots);
  for (Eigen::Index i = 0; i < a.components(); ++i) {
    for (Eigen::Index j = 0; j < b.components(); ++j) {
      out.comp(i * b.components() + j) = a.comp(i) * b.comp(j);
    }
  }
  return out;
}

TensorField identity(const Grid& grid) {
  TensorField d(grid, {Variance::Up, Variance::Down});
  for (int i = 0; i < grid.dim(); ++i) d.comp(d.index({i, i})).setOnes();
  return d;
}

double inverse_residual(const TensorField& g, const TensorField& ginv) {
  const int n = g.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      Eigen::ArrayXd s = Eigen::ArrayXd::Zero(g.points());
      for (int j = 0; j < n; ++j) {
        s += g.comp(g.index({i, j})) * ginv.comp(ginv.index({j, k}));
      }
      if (i == k) s -= 1.0;
      worst = std::max(worst, s.abs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace geoflow
