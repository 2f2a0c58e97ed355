// SPDX-License-Identifier: Apache-2.0
#include "geoflow/curvature.hpp"
#include "geoflow/differentiate.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/flows.hpp"
#include "geoflow/symbol_lab.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>

using namespace geoflow;
using geoflow::testing::bump;
using geoflow::testing::random_metric;

namespace {

TensorField random_direction(const Grid& g, unsigned seed) {
  return random_metric(g, 0.1, seed).value() - MetricField::flat(g).value();
}

Eigen::MatrixXd random_eta(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd e(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) e(a, b) = e(b, a) = n01(rng);
  }
  return e;
}

// flat coordinate Laplacian, componentwise
TensorField flat_laplacian(const TensorField& v) {
  TensorField out = TensorField::zeros_like(v);
  for (Eigen::Index c = 0; c < v.components(); ++c) {
    ColumnDerivatives d(v.grid(), v.comp(c));
    for (int a = 0; a < v.dim(); ++a) out.comp(c) += d.second(a, a);
  }
  return out;
}

}  // namespace

TEST(Linearize, ZeroDirection) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  TensorField z(g, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  EXPECT_EQ(linearize_at(f, FlowSpec::plap(f, 0), z).max_abs(), 0.0);
}

TEST(Linearize, RicciDeTurckAtFlatIsLaplacian) {
  // independent oracle: componentwise second differences of v
  Grid g = Grid::cube(3, 12, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  const TensorField v = random_direction(g, 3);
  const TensorField lin = linearize_at(f, FlowSpec::plap(f, 0), v);
  const TensorField lap = flat_laplacian(v);
  EXPECT_LT(max_abs_difference(lin, lap), 1e-8 * lap.max_abs());
}

TEST(Linearize, IsLinear) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = MetricField::conformal(g, bump(g, 0.1));
  FlowSpec spec = FlowSpec::plap(h, 1);
  const TensorField v1 = random_direction(g, 4);
  const TensorField v2 = random_direction(g, 5);
  const TensorField lhs = linearize_at(h, spec, 0.7 * v1 - 1.9 * v2);
  const TensorField rhs = 0.7 * linearize_at(h, spec, v1) - 1.9 * linearize_at(h, spec, v2);
  EXPECT_LT(max_abs_difference(lhs, rhs), 1e-8 * rhs.max_abs());
}

TEST(TaylorSplit, FlatAndReconstruction) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  EXPECT_EQ(taylor_split(f, FlowSpec::plap(f, 1)).inhomogeneous.max_abs(), 0.0);

  MetricField h = MetricField::conformal(g, bump(g, 0.1));
  FlowSpec spec = FlowSpec::plap(h, 1);
  TaylorSplit split = taylor_split(h, spec);
  EXPECT_EQ(max_abs_difference(split.inhomogeneous, adjusted_rhs(h, spec)), 0.0);
  const TensorField v = 0.01 * random_direction(g, 6);
  TensorField rebuilt = split.inhomogeneous + split.linear_apply(v) + split.quadratic_apply(v);
  const TensorField direct = adjusted_rhs(MetricField(h.value() + v), spec);
  EXPECT_LT(max_abs_difference(rebuilt, direct), 1e-12 * direct.max_abs());
}

TEST(TaylorSplit, QuadraticScaling) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = MetricField::conformal(g, bump(g, 0.1));
  TaylorSplit split = taylor_split(h, FlowSpec::plap(h, 0));
  const TensorField v = random_direction(g, 7);
  std::vector<double> q;
  for (double s : {0.04, 0.02, 0.01}) q.push_back(split.quadratic_apply(s * v).max_abs() / (s * s));
  EXPECT_NEAR(q[1] / q[0], 1.0, 0.1);
  EXPECT_NEAR(q[2] / q[1], 1.0, 0.05);
}

TEST(TaylorSplit, DifferenceOfSquares) {
  // ‖𝒬(u) − 𝒬(v)‖ ≤ C max(‖u‖,‖v‖) ‖u − v‖ with C measured on a family
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = MetricField::conformal(g, bump(g, 0.1));
  TaylorSplit split = taylor_split(h, FlowSpec::plap(h, 0));
  const TensorField a = random_direction(g, 8);
  const TensorField b = random_direction(g, 9);
  std::vector<double> c;
  for (double s : {0.02, 0.01, 0.005}) {
    const TensorField u = s * a;
    const TensorField v = s * (a + 0.3 * b);
    const double num = max_abs_difference(split.quadratic_apply(u), split.quadratic_apply(v));
    c.push_back(num / (std::max(u.max_abs(), v.max_abs()) * max_abs_difference(u, v)));
  }
  EXPECT_LT(c[2], 1.2 * c[0]);
  EXPECT_GT(c[2], 0.0);
}

TEST(Symbol, PLapFlatExact) {
  Grid g = Grid::cube(2, 32, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  const std::vector<int> xi{2, -3};
  const Eigen::MatrixXd eta = random_eta(2, 1);
  const double xi2 = 13.0;
  for (int p : {0, 1, 2}) {
    const double val = principal_symbol(f, FlowSpec::plap(f, p), xi, eta);
    const double expect = std::pow(xi2, p + 1) * eta.squaredNorm();
    EXPECT_NEAR(val / expect, 1.0, 1e-8) << "p=" << p;
  }
  EXPECT_EQ(principal_symbol(f, FlowSpec::plap(f, 0), xi, Eigen::MatrixXd::Zero(2, 2)), 0.0);
}

TEST(Symbol, HomogeneityAndIsotropy) {
  Grid g = Grid::cube(2, 64, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  FlowSpec spec = FlowSpec::plap(f, 1);
  const Eigen::MatrixXd eta = random_eta(2, 2);
  const std::vector<int> xi{1, 2};
  const std::vector<int> xi2{2, 4};
  const std::vector<int> rot{-2, 1};
  const double a = principal_symbol(f, spec, xi, eta);
  EXPECT_NEAR(principal_symbol(f, spec, xi2, eta) / a, 16.0, 16e-6);
  EXPECT_NEAR(principal_symbol(f, spec, xi, 3.0 * eta) / a, 9.0, 9e-6);
  EXPECT_NEAR(principal_symbol(f, spec, rot, eta) / a, 1.0, 1e-8);
}

TEST(Symbol, ObstructionFlatIsQuarterBiharmonic) {
  Grid g = Grid::cube(4, 12, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  const std::vector<int> xi{1, 0, -1, 1};
  const Eigen::MatrixXd eta = random_eta(4, 3);
  const double val = principal_symbol(f, FlowSpec::obstruction4(f), xi, eta);
  EXPECT_NEAR(val / (9.0 * eta.squaredNorm()), 0.25, 1e-8);
}

TEST(Ellipticity, PLapFlatLambdaOne) {
  Grid g = Grid::cube(2, 64, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  for (int p : {0, 1}) {
    SymbolReport rep = ellipticity_check(f, FlowSpec::plap(f, p), 60, 0);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.lambda_est, 1.0, 1e-6) << "p=" << p;
    EXPECT_EQ(rep.order_2m, 2 * (p + 1));
    for (const auto& s : rep.samples) EXPECT_NEAR(s.normalized, 1.0, 1e-6);
  }
}

TEST(Ellipticity, GaugeDegeneracyWithoutDeTurck) {
  Grid g = Grid::cube(2, 64, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  SymbolReport off = ellipticity_check(f, FlowSpec::plap(f, 0, false), 60, 0);
  EXPECT_FALSE(off.pass);
  EXPECT_LT(off.lambda_est, 1e-3);
  double gauge_max = 0.0;
  for (const auto& s : off.samples) {
    if (s.gauge) gauge_max = std::max(gauge_max, std::abs(s.normalized));
  }
  EXPECT_LT(gauge_max, 1e-3);
  EXPECT_TRUE(ellipticity_check(f, FlowSpec::plap(f, 0, true), 60, 0).pass);
}

TEST(Ellipticity, FrozenNonFlatMetric) {
  Grid g = Grid::cube(2, 32, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.2, 11);
  // h frozen at a point: symbol is |ξ|_h^{2m} |η|_h^2, so normalized values are one
  SymbolReport rep = ellipticity_check(h, FlowSpec::plap(h, 1), 50, 3, 17);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.lambda_est, 1.0, 1e-6);
}

TEST(Ellipticity, RescalingInvariance) {
  Grid g = Grid::cube(2, 32, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  TensorField c2 = 2.0 * f.value();
  MetricField h(c2);
  SymbolReport a = ellipticity_check(f, FlowSpec::plap(f, 0), 50, 5);
  SymbolReport b = ellipticity_check(h, FlowSpec::plap(h, 0), 50, 5);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    // L_{ch} = c^{-m} L_h at top order; η pairing adds c^{-2}
    EXPECT_NEAR(b.samples[i].value / a.samples[i].value, std::pow(2.0, -3), 1e-6);
  }
  EXPECT_NEAR(a.lambda_est, b.lambda_est, 1e-6);
}

TEST(Ellipticity, RejectsFewSamplesAndSerializes) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  EXPECT_THROW(ellipticity_check(f, FlowSpec::plap(f, 0), 10), UsageError);
  auto j = nlohmann::json::parse(to_json(ellipticity_check(f, FlowSpec::plap(f, 0), 50)));
  EXPECT_EQ(j["order"], 2);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["samples"].size(), 50u);
}

TEST(LeadingCancellation, FlatIsExact) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  const std::vector<int> k{1, 1};
  for (int p : {0, 1}) {
    CancellationReport r = verify_leading_cancellation(f, p, k);
    for (double x : r.residuals) EXPECT_LT(x, 1e-10);
  }
}

TEST(LeadingCancellation, ConformalOneOrderGap) {
  Grid g = Grid::cube(2, 64, kTwoPi, Scheme::Spectral);
  MetricField h = MetricField::conformal(g, bump(g, 0.1));
  const std::vector<int> k{2, 1};
  for (int p : {0, 1}) {
    CancellationReport r = verify_leading_cancellation(h, p, k);
    ASSERT_EQ(r.ratios.size(), 2u);
    for (double q : r.ratios) {
      EXPECT_LT(q, 0.6) << "p=" << p;
      EXPECT_GT(q, 0.35) << "p=" << p;
    }
  }
}
