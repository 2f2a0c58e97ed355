// SPDX-License-Identifier: Apache-2.0
#include "geoflow/curvature.hpp"
#include "geoflow/differentiate.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/flows.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace geoflow;
using geoflow::testing::bump;
using geoflow::testing::random_metric;
using geoflow::testing::SmoothField;

namespace {

// analytic gradient of bump() on T^n
std::vector<Eigen::ArrayXd> bump_grad(const Grid& g, double a) {
  const int n = g.dim();
  std::vector<Eigen::ArrayXd> d(n, Eigen::ArrayXd::Zero(g.points()));
  d[0] += a * g.coordinate(0).cos() * g.coordinate(1).cos();
  d[1] -= a * g.coordinate(0).sin() * g.coordinate(1).sin();
  d[n - 1] += 0.5 * a * g.coordinate(n - 1).cos();
  return d;
}

// symmetric direction with smooth random components of size ~1
TensorField random_direction(const Grid& g, unsigned seed) {
  return random_metric(g, 0.1, seed).value() - MetricField::flat(g).value();
}

TensorField smooth_displacement(const Grid& g, double amp, unsigned seed) {
  TensorField d(g, {Variance::Up});
  for (int a = 0; a < g.dim(); ++a) d.comp(a) = amp * SmoothField(g.dim(), seed + a).sample(g);
  return d;
}

}  // namespace

TEST(FlowSpec, OrdersAndParsing) {
  Grid g2 = Grid::cube(2, 8);
  Grid g4 = Grid::cube(4, 8);
  EXPECT_EQ(FlowSpec::plap(MetricField::flat(g2), 0).order(), 2);
  EXPECT_EQ(FlowSpec::plap(MetricField::flat(g2), 2).order(), 6);
  EXPECT_EQ(FlowSpec::obstruction4(MetricField::flat(g4)).order(), 4);
  EXPECT_THROW(FlowSpec::obstruction4(MetricField::flat(g2)), UsageError);
  EXPECT_THROW(FlowSpec::plap(MetricField::flat(g2), -1), UsageError);
  EXPECT_EQ(std::get<PLapRic>(parse_flow_kind("plap:3")).p, 3);
  EXPECT_TRUE(std::holds_alternative<Obstruction4>(parse_flow_kind("obstruction4")));
  EXPECT_THROW(parse_flow_kind("plap:x"), UsageError);
  EXPECT_EQ(FlowSpec::plap(MetricField::flat(g2), 1).name(), "plap:1");
}

TEST(Cn, Values) {
  EXPECT_DOUBLE_EQ(cn(4), 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(cn(6), 1.0 / 80.0);
  EXPECT_DOUBLE_EQ(cn(8), 1.0 / (8.0 * 2.0 * 6.0 * 7.0));
  EXPECT_THROW(cn(5), UsageError);
  EXPECT_THROW(cn(2), UsageError);
}

TEST(PLapRic, FlatIsZero) {
  Grid g = Grid::cube(3, 8);
  for (int p : {0, 1, 2}) EXPECT_EQ(plapric_rhs(MetricField::flat(g), p).max_abs(), 0.0);
}

TEST(PLapRic, PZeroIsMinusTwoRicci) {
  Grid g = Grid::cube(3, 8, kTwoPi, Scheme::Spectral);
  MetricField m = random_metric(g, 0.1, 3);
  TensorField ric = riemann_ricci_scalar(m).ricci;
  EXPECT_LT(max_abs_difference(plapric_rhs(m, 0), -2.0 * ric), 1e-14);
}

TEST(PLapRic, EinsteinInputHasZeroLaplacian) {
  // Ric = λ g synthetic: Δ(λ g) = 0 because ∇g = 0
  Grid g = Grid::cube(3, 12, kTwoPi, Scheme::Spectral);
  MetricField m = random_metric(g, 0.1, 5);
  TensorField lg = 0.7 * m.value();
  EXPECT_LT(laplacian(lg, Connection(m)).max_abs(), 1e-11);
}

TEST(PLapRic, POneSignAndComposition) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField m = random_metric(g, 0.05, 9);
  TensorField ric = riemann_ricci_scalar(m).ricci;
  TensorField expect = 2.0 * laplacian(ric, Connection(m));
  EXPECT_LT(max_abs_difference(plapric_rhs(m, 1), expect), 1e-12);
}

TEST(Obstruction, FlatIsZeroAndWrongDimension) {
  EXPECT_EQ(obstruction_rhs(MetricField::flat(Grid::cube(4, 8))).max_abs(), 0.0);
  EXPECT_THROW(obstruction_rhs(MetricField::flat(Grid::cube(3, 6))), UsageError);
}

TEST(Obstruction, ConformallyFlatIsPureTrace) {
  Grid g = Grid::cube(4, 12, kTwoPi, Scheme::Spectral);
  MetricField m = MetricField::conformal(g, bump(g, 0.1));
  Connection conn(m);
  TensorField s = ricci_scalar(conn).scalar;
  TensorField expect = m.value();
  expect.scale_by(laplacian(s, conn).values() / 12.0);
  const TensorField rhs = obstruction_rhs(m);
  EXPECT_LT(max_abs_difference(rhs, expect), 1e-5 * expect.max_abs());
}

TEST(Obstruction, TraceIsThirdOfLaplacianOfS) {
  std::vector<double> err;
  for (int n : {8, 12}) {
    Grid g = Grid::cube(4, n, kTwoPi, Scheme::Spectral);
    MetricField m = random_metric(g, 0.08, 21);
    Connection conn(m);
    TensorField ls = laplacian(ricci_scalar(conn).scalar, conn);
    TensorField tr = trace(obstruction_rhs(conn), m);
    err.push_back((tr.values() - ls.values() / 3.0).abs().maxCoeff() /
                  ls.values().abs().maxCoeff());
  }
  EXPECT_LT(err[1], err[0] / 4.0);
  EXPECT_LT(err[1], 1e-3);
}

TEST(DeTurckV, VanishesAtBackground) {
  Grid g = Grid::cube(3, 8);
  MetricField m = random_metric(g, 0.1, 2);
  EXPECT_LT(deturck_V(m, m).w.max_abs(), 1e-15);
}

TEST(DeTurckV, ConformalOracle) {
  for (int n : {2, 3}) {
    Grid g = Grid::cube(n, 24, kTwoPi, Scheme::Spectral);
    const Eigen::ArrayXd u = bump(g, 0.2);
    MetricField m = MetricField::conformal(g, u);
    const auto du = bump_grad(g, 0.2);
    const TensorField v = deturck_V(m, MetricField::flat(g)).w;
    for (int k = 0; k < n; ++k) {
      const Eigen::ArrayXd expect = -(n - 2.0) * (-2.0 * u).exp() * du[k];
      EXPECT_LT((v.comp(k) - expect).abs().maxCoeff(), 1e-12) << "n=" << n << " k=" << k;
    }
  }
}

TEST(DeTurckV, LinearResponse) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.1, 4);
  const TensorField v = random_direction(g, 40);
  auto at = [&](double s) {
    return deturck_V(MetricField(symmetrize(h.value() + s * v)), h).w.max_abs();
  };
  const double r = at(2e-4) / at(1e-4);
  EXPECT_NEAR(r, 2.0, 1e-3);
}

TEST(DeTurckW, FlatAndBackground) {
  Grid g4 = Grid::cube(4, 8);
  MetricField f4 = MetricField::flat(g4);
  EXPECT_EQ(deturck_W(f4, f4, FlowSpec::obstruction4(f4)).w.max_abs(), 0.0);
  Grid g2 = Grid::cube(2, 8);
  MetricField f2 = MetricField::flat(g2);
  for (int p : {0, 1, 2}) EXPECT_EQ(deturck_W(f2, f2, FlowSpec::plap(f2, p)).w.max_abs(), 0.0);
}

TEST(DeTurckW, PZeroIsV) {
  Grid g = Grid::cube(3, 8, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.1, 6);
  MetricField m = random_metric(g, 0.1, 7);
  const VectorFieldW w = deturck_W(m, h, FlowSpec::plap(h, 0));
  EXPECT_EQ(w.source, WSource::V);
  EXPECT_EQ(max_abs_difference(w.w, deturck_V(m, h).w), 0.0);
}

TEST(DeTurckW, PlapSignAndOrder) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = MetricField::flat(g);
  MetricField m = random_metric(g, 0.05, 8);
  Connection conn(m);
  const TensorField v = deturck_V(m, h).w;
  const TensorField w1 = deturck_W(m, h, FlowSpec::plap(h, 1)).w;
  EXPECT_LT(max_abs_difference(w1, -1.0 * laplacian(v, conn)), 1e-13);
}

TEST(DeTurckW, ObstructionAtBackgroundIsScalarGradient) {
  Grid g = Grid::cube(4, 8, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.05, 12);
  Connection conn(h);
  TensorField expect = gradient_sharp(ricci_scalar(conn).scalar, conn);
  expect *= 1.0 / 12.0;
  const TensorField w = deturck_W(h, h, FlowSpec::obstruction4(h)).w;
  EXPECT_GT(expect.max_abs(), 1e-4);
  EXPECT_LT(max_abs_difference(w, expect), 1e-10);
}

TEST(DeTurckW, BackgroundLaplacianFlag) {
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.05, 13);
  MetricField m = random_metric(g, 0.05, 14);
  FlowSpec evolving = FlowSpec::plap(h, 1);
  FlowSpec background(PLapRic{1}, h, true, WLaplacian::Background);
  const TensorField v = deturck_V(m, h).w;
  EXPECT_LT(max_abs_difference(deturck_W(m, h, background).w,
                               -1.0 * laplacian(v, Connection(h))),
            1e-13);
  EXPECT_GT(max_abs_difference(deturck_W(m, h, background).w, deturck_W(m, h, evolving).w),
            1e-6);
}

TEST(LieDerivative, FlatSineOracle) {
  const double len = 3.0;
  Grid g = Grid::cube(2, 32, len, Scheme::Spectral);
  TensorField w(g, {Variance::Up});
  const double k = kTwoPi / len;
  w.comp(0) = (k * g.coordinate(0)).sin();
  TensorField l = lie_derivative_metric(w, MetricField::flat(g));
  EXPECT_LT((l.comp(l.index({0, 0})) - 2.0 * k * (k * g.coordinate(0)).cos()).abs().maxCoeff(),
            1e-12);
  EXPECT_LT(l.comp(l.index({0, 1})).abs().maxCoeff(), 1e-12);
  EXPECT_LT(l.comp(l.index({1, 1})).abs().maxCoeff(), 1e-12);
}

TEST(LieDerivative, ZeroAndKilling) {
  Grid g = Grid::cube(3, 8);
  MetricField f = MetricField::flat(g);
  TensorField w(g, {Variance::Up});
  EXPECT_EQ(lie_derivative_metric(w, f).max_abs(), 0.0);
  w.comp(0).setConstant(0.3);
  w.comp(2).setConstant(-1.1);
  EXPECT_EQ(lie_derivative_metric(w, f).max_abs(), 0.0);
}

TEST(LieDerivative, MatchesCovariantForm) {
  Grid g = Grid::cube(3, 12, kTwoPi, Scheme::Spectral);
  MetricField m = random_metric(g, 0.1, 15);
  TensorField w(g, {Variance::Up});
  for (int a = 0; a < 3; ++a) w.comp(a) = SmoothField(3, 60 + a).sample(g);
  TensorField dw = covariant_derivative(lower(w, 0, m), m);  // ∇_i W_j
  TensorField expect = 2.0 * symmetrize(dw);
  EXPECT_LT(max_abs_difference(lie_derivative_metric(w, m), expect), 1e-11);
}

TEST(AdjustedRhs, FlatIsZero) {
  Grid g2 = Grid::cube(2, 8);
  for (int p : {0, 1}) {
    MetricField f = MetricField::flat(g2);
    EXPECT_EQ(adjusted_rhs(f, FlowSpec::plap(f, p)).max_abs(), 0.0);
  }
  MetricField f4 = MetricField::flat(Grid::cube(4, 8));
  EXPECT_EQ(adjusted_rhs(f4, FlowSpec::obstruction4(f4)).max_abs(), 0.0);
}

TEST(AdjustedRhs, RicciDeTurck) {
  Grid g = Grid::cube(3, 8, kTwoPi, Scheme::Spectral);
  MetricField h = random_metric(g, 0.1, 16);
  MetricField m = random_metric(g, 0.1, 17);
  FlowSpec spec = FlowSpec::plap(h, 0);
  TensorField expect = -2.0 * riemann_ricci_scalar(m).ricci +
                       lie_derivative_metric(deturck_V(m, h), m);
  EXPECT_LT(max_abs_difference(adjusted_rhs(m, spec), expect), 1e-13);
  EXPECT_LT(max_abs_difference(adjusted_rhs(m, spec.with_deturck(false)), flow_rhs(m, spec)),
            1e-15);
}

TEST(AdjustedRhs, LinearizationAtFlatIsLaplacian) {
  // p = 0 Ricci-DeTurck at flat h: the first variation is Δ0 v componentwise
  Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  FlowSpec spec = FlowSpec::plap(f, 0);
  const TensorField v = random_direction(g, 18);
  const double s = 1e-4;
  TensorField plus = adjusted_rhs(MetricField(f.value() + s * v), spec);
  TensorField minus = adjusted_rhs(MetricField(f.value() - s * v), spec);
  TensorField lin = (1.0 / (2.0 * s)) * (plus - minus);
  TensorField lap(g, v.slots());
  for (Eigen::Index c = 0; c < v.components(); ++c) {
    ColumnDerivatives d(g, v.comp(c));
    lap.comp(c) = d.second(0, 0) + d.second(1, 1);
  }
  EXPECT_LT(max_abs_difference(lin, lap), 1e-6 * lap.max_abs());
}

TEST(PullBack, IdentityAndJacobianGuard) {
  Grid g = Grid::cube(2, 16);
  MetricField m = random_metric(g, 0.1, 19);
  TensorField zero(g, {Variance::Up});
  EXPECT_EQ(max_abs_difference(pull_back(m, zero).value(), m.value()), 0.0);
  TensorField fold(g, {Variance::Up});
  fold.comp(0) = 2.0 * g.coordinate(0).sin();  // 1 + 2 cos x < 0 somewhere
  EXPECT_THROW(pull_back(m, fold), DiffeomorphismError);
}

TEST(Naturality, IdentityIsExact) {
  Grid g = Grid::cube(2, 16);
  MetricField m = random_metric(g, 0.1, 22);
  TensorField zero(g, {Variance::Up});
  auto ric = [](const MetricField& x) { return riemann_ricci_scalar(x).ricci; };
  EXPECT_EQ(naturality_check(ric, m, zero), 0.0);
}

TEST(Naturality, TranslationWithinInterpolationError) {
  auto ric = [](const MetricField& x) { return riemann_ricci_scalar(x).ricci; };
  std::vector<double> res;
  for (int n : {16, 32}) {
    Grid g = Grid::cube(2, n, kTwoPi, Scheme::Central4);
    MetricField m = random_metric(g, 0.1, 23);
    TensorField shift(g, {Variance::Up});
    shift.comp(0).setConstant(0.37 * g.spacing(0));
    shift.comp(1).setConstant(-0.21 * g.spacing(1));
    res.push_back(naturality_check(ric, m, shift));
  }
  EXPECT_LT(res[0], 1e-3);
  EXPECT_GT(std::log2(res[0] / res[1]), 3.0);
}

TEST(Naturality, RicciConvergesAtSchemeOrder) {
  auto ric = [](const MetricField& x) { return riemann_ricci_scalar(x).ricci; };
  std::vector<double> res;
  for (int n : {16, 32}) {
    Grid g = Grid::cube(2, n, kTwoPi, Scheme::Central4);
    MetricField m = random_metric(g, 0.1, 24);
    res.push_back(naturality_check(ric, m, smooth_displacement(g, 0.05, 80)));
  }
  EXPECT_GT(std::log2(res[0] / res[1]), 3.0);
}

TEST(ConformalRho, FlatAndConstantPhi) {
  Grid g = Grid::cube(4, 8, kTwoPi, Scheme::Spectral);
  MetricField f = MetricField::flat(g);
  const std::vector<double> t{0.0, 0.1, 0.3};
  for (const auto& r : conformal_rho(t, {f, f, f})) EXPECT_EQ((r - 1.0).abs().maxCoeff(), 0.0);

  MetricField m = MetricField::conformal(g, bump(g, 0.1));
  Connection conn(m);
  const Eigen::ArrayXd phi = laplacian(ricci_scalar(conn).scalar, conn).values() / 12.0;
  const auto rho = conformal_rho(t, {m, m, m});
  ASSERT_EQ(rho.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((rho[i] - (-0.5 * phi * t[i]).exp()).abs().maxCoeff(), 1e-14);
  }
  EXPECT_THROW(conformal_rho({}, {}), UsageError);
}

TEST(ConformalRho, RescaledFlowLosesPureTracePart) {
  // Explicit Euler path of the obstruction flow; ĝ = ρ² g should evolve by
  // ρ² B(g), which is trace free.
  Grid g = Grid::cube(4, 8, kTwoPi, Scheme::Spectral);
  std::vector<MetricField> path{MetricField::conformal(g, bump(g, 0.15))};
  std::vector<double> t{0.0};
  const double dt = 1e-3;
  for (int i = 0; i < 4; ++i) {
    path.emplace_back(path.back().value() + dt * obstruction_rhs(path.back()));
    t.push_back(t.back() + dt);
  }
  const auto rho = conformal_rho(t, path);
  auto hat = [&](int i) {
    TensorField v = path[i].value();
    v.scale_by(rho[i] * rho[i]);
    return MetricField(v);
  };
  const int mid = 2;
  TensorField dhat = (1.0 / (2 * dt)) * (hat(mid + 1).value() - hat(mid - 1).value());
  TensorField dg = (1.0 / (2 * dt)) * (path[mid + 1].value() - path[mid - 1].value());
  const double tr_hat = trace(dhat, hat(mid)).max_abs();
  const double tr_raw = trace(dg, path[mid]).max_abs();
  EXPECT_GT(tr_raw, 1e-3);
  EXPECT_LT(tr_hat, 1e-2 * tr_raw);
}
