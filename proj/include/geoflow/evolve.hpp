// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/flows.hpp"
#include "geoflow/symbol_lab.hpp"
#include "geoflow/tensor_algebra.hpp"
#include "geoflow/time_series.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace geoflow {

// Componentwise Fourier multiplier exp(-t c |k|^{2m}).
TensorField heat_semigroup(const TensorField& v, double t, int order_2m,
                           double coefficient = 1.0);

enum class Quadrature { Trapezoid, Midpoint };

struct PicardConfig {
  double mu = 1.0;          // ball radius in the surrogate norm
  double t_final = 1e-4;
  int time_steps = 16;      // >= 16
  Quadrature quadrature = Quadrature::Trapezoid;
  int max_iters = 50;
  double tol = 1e-9;           // above the rounding floor of the surrogate norm at N = 64
  double alpha = 0.5;
  int pair_budget = 20000;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<double> times() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<MetricField> metrics;
  FlowSpec spec;
  bool adjusted = true;  // solves the DeTurck-adjusted flow
};

enum class PicardStop { Converged, MaxIters, BallExit };

struct PicardState {
  std::vector<TimeSeries> iterates;          // v^0 = 0, v^1, ...
  std::vector<double> norms;                 // surrogate norm of each iterate
  std::vector<double> increments;            // ‖v^{k+1} - v^k‖
  std::vector<double> contraction_history;   // increments[k] / increments[k-1]
  bool converged = false;
  PicardStop stop = PicardStop::MaxIters;
  double fixed_point_residual = -1.0;        // ‖v - Ψ(v)‖ for the last iterate
  std::optional<Trajectory> trajectory;      // g = h + v when converged
};

// Ψ(u)(t) = ∫_0^t H(t-s) (F(u(s)) + I) ds with
// F(u) + I = 𝒯(h + u) - L0 u, L0 the flat principal part. Per Fourier mode
// the kernel is integrated exactly against the piecewise-linear (trapezoid)
// or piecewise-constant (midpoint) interpolant of the forcing on the stored
// times. The result is truncated to modes |m_a| < N_a/3.
TimeSeries psi_apply(const TimeSeries& u, const TaylorSplit& split, const PicardConfig& cfg);

// Fixed-point iteration v^{k+1} = Ψ(v^k) from v^0 = 0. Stops on the first of
// tolerance met, max_iters, or leaving the ball of radius mu.
PicardState picard_solve(const MetricField& h, const FlowSpec& spec, const PicardConfig& cfg);

// Linearly implicit Euler with the flat principal part implicit:
//   g_{n+1} = g_n + dt (1 + dt c |k|^{2m})^{-1} 𝒯(g_n)
// which is (1 - dt L0)(g_{n+1} - g_n) = dt 𝒯(g_n). Starts from g0; stores
// every store_every-th step and the last one.
Trajectory imex_evolve(const MetricField& g0, const FlowSpec& spec, double dt, int steps,
                       int store_every = 1);

// Pull-back along the flow θ of -W: RK4 on the displacement D = θ - id with W
// interpolated by spline in space and cubic Lagrange in time;
// ḡ(t) = θ(t)^* g(t).
Trajectory deturck_pullback(const Trajectory& traj);

// max over interior slices of ‖(ḡ_{n+1} - ḡ_{n-1}) / (t_{n+1} - t_{n-1}) - T(ḡ_n)‖_∞.
double pullback_residual(const Trajectory& pulled);

// Snapshots slice_NNNNN.snap, background.snap and manifest.json.
void export_trajectory(const Trajectory& traj, const std::filesystem::path& dir,
                       const std::vector<double>& contraction_history = {});
Trajectory import_trajectory(const std::filesystem::path& dir);

}  // namespace geoflow
