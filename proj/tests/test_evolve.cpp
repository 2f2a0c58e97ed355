// SPDX-License-Identifier: Apache-2.0
#include "geoflow/curvature.hpp"
#include "geoflow/diagnostics.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/evolve.hpp"
#include "geoflow/spectral.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace geoflow;
using geoflow::testing::bump;

namespace {

TensorField mode_field(const Grid& g, int m0, int m1) {
  TensorField t(g, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  const Eigen::ArrayXd c =
      (g.wavenumber(0, m0) * g.coordinate(0) + g.wavenumber(1, m1) * g.coordinate(1)).cos();
  t.comp(t.index({0, 0})) = c;
  t.comp(t.index({0, 1})) = 0.5 * c;
  t.comp(t.index({1, 0})) = 0.5 * c;
  return t;
}

// 2D split with 𝒯(h + v) = f + L0 v (flat heat operator of order 2).
TaylorSplit forced_heat(const TensorField& f, double c) {
  TaylorSplit s;
  s.inhomogeneous = f;
  s.order_2m = 2;
  s.principal_coefficient = c;
  s.operator_apply = [f, c](const TensorField& v) {
    auto basis = SpectralBasis::of(v.grid());
    TensorField out = f + fourier_multiplier(v, Eigen::ArrayXd(-c * basis->k_squared()));
    out.set_symmetry(Symmetry::Symmetric);
    return out;
  };
  return s;
}

// Independent scalar solver for ∂_t u = e^{-2u} Δ0 u on the 2π torus:
// fourth-order five-point stencil per axis, classical RK4 in time.
class ScalarGaussFlow {
 public:
  ScalarGaussFlow(int n, Eigen::ArrayXXd u) : n_(n), u_(std::move(u)) {}

  void advance(double dt, int steps) {
    for (int s = 0; s < steps; ++s) {
      const Eigen::ArrayXXd k1 = rhs(u_);
      const Eigen::ArrayXXd k2 = rhs(u_ + 0.5 * dt * k1);
      const Eigen::ArrayXXd k3 = rhs(u_ + 0.5 * dt * k2);
      const Eigen::ArrayXXd k4 = rhs(u_ + dt * k3);
      u_ += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  const Eigen::ArrayXXd& u() const { return u_; }

 private:
  Eigen::ArrayXXd rhs(const Eigen::ArrayXXd& u) const {
    const double h = 2.0 * M_PI / n_;
    Eigen::ArrayXXd lap = Eigen::ArrayXXd::Zero(n_, n_);
    auto at = [&](int i, int j) { return u((i + n_) % n_, (j + n_) % n_); };
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double dxx = -at(i + 2, j) + 16 * at(i + 1, j) - 30 * at(i, j) +
                           16 * at(i - 1, j) - at(i - 2, j);
        const double dyy = -at(i, j + 2) + 16 * at(i, j + 1) - 30 * at(i, j) +
                           16 * at(i, j - 1) - at(i, j - 2);
        lap(i, j) = (dxx + dyy) / (12 * h * h);
      }
    }
    return (-2.0 * u).exp() * lap;
  }

  int n_;
  Eigen::ArrayXXd u_;
};

Eigen::ArrayXXd as_square(const Eigen::ArrayXd& v, int n) {
  Eigen::ArrayXXd out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = v(i * n + j);
  }
  return out;
}

}  // namespace

TEST(Heat, ZeroTimeIsIdentity) {
  const Grid g = Grid::cube(2, 16);
  const TensorField v = mode_field(g, 1, 2);
  EXPECT_EQ(max_abs_difference(heat_semigroup(v, 0.0, 4), v), 0.0);
}

TEST(Heat, SingleModeDecay) {
  const Grid g = Grid::cube(2, 16);
  const TensorField v = mode_field(g, 1, 2);
  const double t = 0.01;
  TensorField expect = std::exp(-t * 0.5 * 25.0) * v;  // |k|^4 = 5^2
  EXPECT_LT(max_abs_difference(heat_semigroup(v, t, 4, 0.5), expect), 1e-14);
}

TEST(Heat, Semigroup) {
  const Grid g = Grid::cube(2, 16);
  TensorField v = mode_field(g, 1, 2) + mode_field(g, 3, 0);
  const TensorField a = heat_semigroup(heat_semigroup(v, 0.02, 2), 0.03, 2);
  EXPECT_LT(max_abs_difference(a, heat_semigroup(v, 0.05, 2)), 1e-14);
  EXPECT_THROW(heat_semigroup(v, -1.0, 2), UsageError);
  EXPECT_THROW(heat_semigroup(v, 1.0, 3), UsageError);
}

TEST(PicardConfig, Validation) {
  PicardConfig c;
  EXPECT_NO_THROW(c.validate());
  c.time_steps = 8;
  EXPECT_THROW(c.validate(), UsageError);
  c = PicardConfig{};
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = PicardConfig{};
  EXPECT_EQ(c.times().size(), 17u);
  EXPECT_DOUBLE_EQ(c.times().back(), c.t_final);
}

TEST(Psi, ConstantForcingMatchesDuhamel) {
  const Grid g = Grid::cube(2, 16);
  const TensorField f = mode_field(g, 1, 1);
  const double c = 1.0, lam = 2.0;  // |k|^2 = 2
  PicardConfig cfg;
  cfg.t_final = 0.05;
  cfg.time_steps = 64;
  const TaylorSplit split = forced_heat(f, c);
  const TimeSeries zero = zero_series(cfg.times(), f);
  for (Quadrature q : {Quadrature::Trapezoid, Quadrature::Midpoint}) {
    cfg.quadrature = q;
    const TimeSeries out = psi_apply(zero, split, cfg);
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double t = out.times[j];
      const TensorField expect = ((1.0 - std::exp(-lam * t)) / lam) * f;
      EXPECT_LT(max_abs_difference(out.slices[j], expect), 1e-7) << j;
    }
  }
}

TEST(Psi, PureHeatHasNoForcing) {
  // 𝒯 = L0 exactly: G = 0 for any u
  const Grid g = Grid::cube(2, 16);
  TensorField zero_f(g, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  const TaylorSplit split = forced_heat(zero_f, 1.0);
  PicardConfig cfg;
  TimeSeries u = zero_series(cfg.times(), zero_f);
  for (std::size_t j = 1; j < u.size(); ++j) u.slices[j] = mode_field(g, 2, 1);
  EXPECT_LT(sup_norm(psi_apply(u, split, cfg)), 1e-12);
}

TEST(Psi, RejectsBadInput) {
  const Grid g = Grid::cube(2, 16);
  const TensorField f = mode_field(g, 1, 1);
  const TaylorSplit split = forced_heat(f, 1.0);
  PicardConfig cfg;
  TimeSeries u = zero_series(cfg.times(), f);
  u.slices[0] = f;
  EXPECT_THROW(psi_apply(u, split, cfg), UsageError);
  PicardConfig other = cfg;
  other.t_final = 2e-4;
  EXPECT_THROW(psi_apply(zero_series(cfg.times(), f), split, other), UsageError);
}

TEST(Picard, FlatConvergesImmediately) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const PicardState st = picard_solve(h, FlowSpec::plap(h, 1), PicardConfig{});
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.stop, PicardStop::Converged);
  EXPECT_EQ(st.iterates.size(), 2u);
  EXPECT_LT(st.fixed_point_residual, 1e-12);
  ASSERT_TRUE(st.trajectory.has_value());
  for (const auto& m : st.trajectory->metrics) {
    EXPECT_LT(max_abs_difference(m.value(), h.value()), 1e-10);
  }
}

TEST(Picard, ContractsNearConformalBackground) {
  const Grid g = Grid::cube(2, 24);
  const MetricField h = MetricField::conformal(g, bump(g, 0.01));
  PicardConfig cfg;
  const PicardState st = picard_solve(h, FlowSpec::plap(h, 1), cfg);
  ASSERT_TRUE(st.converged);
  ASSERT_FALSE(st.contraction_history.empty());
  for (double r : st.contraction_history) EXPECT_LT(r, 0.5);
  EXPECT_LT(st.fixed_point_residual, 1e-9);
  EXPECT_LT(st.norms.back(), cfg.mu);
}

TEST(Picard, FirstIterateScalesWithT) {
  const Grid g = Grid::cube(2, 24);
  const MetricField h = MetricField::conformal(g, bump(g, 0.01));
  PicardConfig cfg;
  cfg.max_iters = 1;
  const double n1 = picard_solve(h, FlowSpec::plap(h, 1), cfg).norms[1];
  cfg.t_final *= 0.5;
  const double n2 = picard_solve(h, FlowSpec::plap(h, 1), cfg).norms[1];
  EXPECT_NEAR(n1 / n2, 2.0, 0.4);
}

TEST(Picard, BallExitAndGuards) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::conformal(g, bump(g, 0.05));
  PicardConfig cfg;
  cfg.mu = 1e-8;
  const PicardState st = picard_solve(h, FlowSpec::plap(h, 0), cfg);
  EXPECT_EQ(st.stop, PicardStop::BallExit);
  EXPECT_FALSE(st.trajectory.has_value());
  EXPECT_THROW(picard_solve(h, FlowSpec::plap(h, 0, false), PicardConfig{}), UsageError);
}

TEST(Imex, FlatIsStationary) {
  for (int p : {0, 1}) {
    const Grid g = Grid::cube(2, 16, kTwoPi, Scheme::Central4);
    const MetricField h = MetricField::flat(g);
    const Trajectory tr = imex_evolve(h, FlowSpec::plap(h, p), 1e-3, 50, 10);
    EXPECT_EQ(tr.times.size(), 6u);
    for (const auto& m : tr.metrics) EXPECT_LT(max_abs_difference(m.value(), h.value()), 1e-12);
  }
  const Grid g = Grid::cube(4, 8, kTwoPi, Scheme::Central4);
  const MetricField h = MetricField::flat(g);
  const Trajectory tr = imex_evolve(h, FlowSpec::obstruction4(h), 1e-3, 5);
  EXPECT_LT(max_abs_difference(tr.metrics.back().value(), h.value()), 1e-12);
}

TEST(Imex, StepDoublingIsConsistent) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const MetricField g0 = MetricField::conformal(g, bump(g, 0.05));
  const FlowSpec spec = FlowSpec::plap(h, 0);
  double prev = 0.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto one = imex_evolve(g0, spec, dt, 1).metrics.back();
    const auto two = imex_evolve(g0, spec, dt / 2, 2).metrics.back();
    const double d = max_abs_difference(one.value(), two.value());
    if (prev > 0.0) EXPECT_NEAR(prev / d, 4.0, 0.6);
    prev = d;
  }
}

TEST(Imex, DegenerationAborts) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const MetricField g0 = MetricField::conformal(g, bump(g, 1.0));
  EXPECT_THROW(imex_evolve(g0, FlowSpec::plap(h, 1), 0.1, 5), NumericalFailure);
}

TEST(Imex, GaussFlowMatchesScalarReduction) {
  const int n = 24;
  const Grid g = Grid::cube(2, n, kTwoPi, Scheme::Central4);
  const Eigen::ArrayXd u0 = bump(g, 0.05);
  const MetricField h = MetricField::flat(g);
  const double dt = 2e-5, t = 2e-3;
  const int steps = static_cast<int>(std::lround(t / dt));
  const Trajectory adjusted = imex_evolve(MetricField::conformal(g, u0), FlowSpec::plap(h, 0), dt,
                                          steps);
  const Trajectory pulled = deturck_pullback(adjusted);
  EXPECT_FALSE(pulled.adjusted);

  ScalarGaussFlow scalar(n, as_square(u0, n));
  scalar.advance(dt, steps);
  const MetricField& last = pulled.metrics.back();
  const Eigen::ArrayXd u = 0.25 * (last.g(0, 0) * last.g(1, 1) - last.g(0, 1).square()).log();
  EXPECT_LT((as_square(u, n) - scalar.u()).abs().maxCoeff(), 1e-4);
  // the pulled-back metric stays conformally flat
  EXPECT_LT((last.g(0, 0) - last.g(1, 1)).abs().maxCoeff(), 1e-4);
  EXPECT_LT(last.g(0, 1).abs().maxCoeff(), 1e-4);
}

TEST(Pullback, StationaryFlatIsUnchanged) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const Trajectory tr = imex_evolve(h, FlowSpec::plap(h, 0), 1e-3, 4);
  const Trajectory pulled = deturck_pullback(tr);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    EXPECT_LT(max_abs_difference(pulled.metrics[j].value(), h.value()), 1e-13);
  }
}

TEST(Pullback, ResidualShrinksWithDt) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const MetricField g0 = MetricField::conformal(g, bump(g, 0.05));
  const FlowSpec spec = FlowSpec::plap(h, 0);
  double prev = 0.0;
  for (double dt : {2e-4, 1e-4}) {
    const Trajectory tr = imex_evolve(g0, spec, dt, static_cast<int>(std::lround(2e-3 / dt)));
    const Trajectory pulled = deturck_pullback(tr);
    EXPECT_EQ(max_abs_difference(pulled.metrics.front().value(), g0.value()), 0.0);
    const double r = pullback_residual(pulled);
    if (prev > 0.0) EXPECT_GT(prev / r, 1.8);
    prev = r;
  }
  Trajectory plain = imex_evolve(g0, spec, 1e-4, 2);
  plain.adjusted = false;
  EXPECT_THROW(deturck_pullback(plain), UsageError);
}

TEST(Trajectory, ExportImportRoundTrip) {
  const Grid g = Grid::cube(2, 8);
  const MetricField h = MetricField::conformal(g, bump(g, 0.02));
  const Trajectory tr = imex_evolve(h, FlowSpec::plap(h, 1), 1e-4, 3);
  const auto dir = std::filesystem::temp_directory_path() / "geoflow_traj_test";
  std::filesystem::remove_all(dir);
  export_trajectory(tr, dir, {0.1, 0.05});
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  const Trajectory back = import_trajectory(dir);
  ASSERT_EQ(back.times.size(), tr.times.size());
  EXPECT_EQ(back.spec.name(), "plap:1");
  EXPECT_TRUE(back.spec.deturck());
  EXPECT_TRUE(back.adjusted);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    EXPECT_EQ(back.times[j], tr.times[j]);
    EXPECT_EQ(max_abs_difference(back.metrics[j].value(), tr.metrics[j].value()), 0.0);
  }
  std::filesystem::remove_all(dir);
}

TEST(Stationarity, FlatDriftAndScalarVariance) {
  const Grid g = Grid::cube(2, 16);
  const MetricField h = MetricField::flat(g);
  const FlowSpec spec = FlowSpec::plap(h, 1);
  const Trajectory tr = imex_evolve(h, spec, 1e-3, 10);
  const StationarityReport r = stationarity(tr.metrics, spec);
  EXPECT_LT(r.drift, 1e-12);
  ASSERT_TRUE(r.scalar_variance.has_value());
  EXPECT_LT(*r.scalar_variance, 1e-20);
}

TEST(Imex, ObstructionKeepsMeanLaplacianOfScalarZero) {
  // ∫ Δ_g S dV_g = 0 on a closed manifold, slice by slice
  const Grid g = Grid::cube(4, 8);
  const MetricField g0 = geoflow::testing::random_metric(g, 0.05, 3);
  const FlowSpec spec = FlowSpec::obstruction4(MetricField::flat(g));
  const Trajectory tr = imex_evolve(g0, spec, 1e-4, 3);
  for (const MetricField& m : tr.metrics) {
    const Connection conn(m);
    const TensorField s = ricci_scalar(conn).scalar;
    const Eigen::ArrayXd lap = laplacian(s, conn).comp(0);
    const Eigen::ArrayXd dv = m.volume_density();
    EXPECT_LT(std::abs((lap * dv).mean()), 1e-10 * lap.abs().maxCoeff());
  }
}

namespace {

// sup of the trace-free part of g0^{-1} g1 (2D): zero iff g1 = λ g0 pointwise
double anisotropy(const MetricField& g0, const MetricField& g1) {
  const auto m00 = g0.inv(0, 0) * g1.g(0, 0) + g0.inv(0, 1) * g1.g(1, 0);
  const auto m01 = g0.inv(0, 0) * g1.g(0, 1) + g0.inv(0, 1) * g1.g(1, 1);
  const auto m10 = g0.inv(1, 0) * g1.g(0, 0) + g0.inv(1, 1) * g1.g(1, 0);
  const auto m11 = g0.inv(1, 0) * g1.g(0, 1) + g0.inv(1, 1) * g1.g(1, 1);
  return std::max({(0.5 * (m00 - m11)).abs().maxCoeff(), m01.abs().maxCoeff(),
                   m10.abs().maxCoeff()});
}

}  // namespace

TEST(Pullback, RecoversConformalClassOfSurfaceRicciFlow) {
  // 2D Ricci flow stays in the conformal class of its initial metric; the
  // DeTurck-adjusted flow does not (W ≠ 0 for non-conformal data)
  const MetricField h = MetricField::flat(Grid::cube(2, 32));
  const MetricField g0 = geoflow::testing::random_metric(h.grid(), 0.1, 5);
  const Trajectory adjusted = imex_evolve(g0, FlowSpec::plap(h, 0), 2e-4, 50);
  const Trajectory pulled = deturck_pullback(adjusted);
  const double before = anisotropy(g0, adjusted.metrics.back());
  const double after = anisotropy(g0, pulled.metrics.back());
  EXPECT_GT(before, 1e-4) << after;
  EXPECT_LT(after, 1e-2 * before) << before << " " << after;
}

TEST(Pullback, NontrivialResidualShrinksWithDt) {
  const MetricField h = MetricField::flat(Grid::cube(2, 32));
  const MetricField g0 = geoflow::testing::random_metric(h.grid(), 0.1, 5);
  double prev = 0.0;
  for (double dt : {4e-4, 2e-4}) {
    const Trajectory tr =
        imex_evolve(g0, FlowSpec::plap(h, 0), dt, static_cast<int>(std::lround(8e-3 / dt)));
    const double r = pullback_residual(deturck_pullback(tr));
    if (prev > 0.0) EXPECT_GT(prev / r, 1.8) << prev << " " << r;
    prev = r;
  }
}
