// SPDX-License-Identifier: Apache-2.0
// Test metrics shared by the unit and acceptance suites.
#pragma once

#include "geoflow/tensor_algebra.hpp"

#include <cmath>
#include <random>

namespace geoflow::testing {

inline Eigen::ArrayXd sup_abs(const TensorField& t) {
  return t.data().abs().colwise().maxCoeff().transpose();
}

inline double sup(const Eigen::ArrayXd& a) { return a.abs().maxCoeff(); }

// Smooth random field: sum of a few low modes with random phases, per axis
// wave numbers 2*pi*m/L with |m| <= max_mode.
class SmoothField {
 public:
  SmoothField(int dim, unsigned seed, int terms = 4, int max_mode = 1)
      : dim_(dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<int> mode(-max_mode, max_mode);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
    for (int t = 0; t < terms; ++t) {
      Term term;
      for (int a = 0; a < dim; ++a) term.m[a] = mode(rng);
      term.amp = n01(rng) / terms;
      term.phase = phase(rng);
      terms_.push_back(term);
    }
  }

  Eigen::ArrayXd sample(const Grid& g) const {
    Eigen::ArrayXd v = Eigen::ArrayXd::Zero(g.points());
    for (const auto& t : terms_) {
      Eigen::ArrayXd arg = Eigen::ArrayXd::Constant(g.points(), t.phase);
      for (int a = 0; a < dim_; ++a) arg += g.wavenumber(a, t.m[a]) * g.coordinate(a);
      v += t.amp * arg.sin();
    }
    return v;
  }

 private:
  struct Term {
    std::array<int, 4> m{};
    double amp = 0.0;
    double phase = 0.0;
  };
  int dim_;
  std::vector<Term> terms_;
};

// delta + amp * (smooth random symmetric field); resolution independent.
inline MetricField random_metric(const Grid& g, double amp, unsigned seed,
                                 int max_mode = 1) {
  const int n = g.dim();
  TensorField t(g, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  unsigned s = seed;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Eigen::ArrayXd v = amp * SmoothField(n, s++, 4, max_mode).sample(g);
      if (i == j) v += 1.0;
      t.comp(t.index({i, j})) = v;
      t.comp(t.index({j, i})) = v;
    }
  }
  return MetricField(t);
}

// u = amp * sin(x0) cos(x1) + amp/2 * sin(x_{n-1}) on the 2*pi torus
inline Eigen::ArrayXd bump(const Grid& g, double amp) {
  const int n = g.dim();
  return amp * (g.coordinate(0).sin() * g.coordinate(1).cos() +
                0.5 * g.coordinate(n - 1).sin());
}

// Flat Laplacian of bump().
inline Eigen::ArrayXd bump_laplacian(const Grid& g, double amp) {
  const int n = g.dim();
  return -2.0 * amp * g.coordinate(0).sin() * g.coordinate(1).cos() -
         0.5 * amp * g.coordinate(n - 1).sin();
}

}  // namespace geoflow::testing
