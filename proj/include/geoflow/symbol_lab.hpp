// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/flows.hpp"
#include "geoflow/tensor_algebra.hpp"
#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace geoflow {

// d/ds 𝒯(h + s v) at s = 0 by central differences with two Richardson
// levels. The first step is 1e-2 * max|h| / max|v|: after extrapolation the
// truncation is O(s^6), and a smaller step only feeds rounding noise into
// high-order operators.
TensorField linearize_at(const MetricField& h, const FlowSpec& spec, const TensorField& v);

// 𝒯(h + v) = I_h + L_h v + 𝒬(v). operator_apply evaluates 𝒯(h + v) itself;
// the flat principal part is v -> -c (-Δ0)^m v with c = principal_coefficient.
struct TaylorSplit {
  TensorField inhomogeneous;
  std::function<TensorField(const TensorField&)> operator_apply;
  std::function<TensorField(const TensorField&)> linear_apply;
  std::function<TensorField(const TensorField&)> quadratic_apply;
  int order_2m = 2;
  double principal_coefficient = 1.0;
};

TaylorSplit taylor_split(const MetricField& h, const FlowSpec& spec);

// max over the family of ‖𝒬(v)‖_∞ / ‖v‖_∞².
double quadratic_constant(const TaylorSplit& split, const std::vector<TensorField>& family);

// Constant metric with the values of h at one grid point.
MetricField freeze(const MetricField& h, Eigen::Index point);

struct SymbolSample {
  std::vector<int> modes;   // lattice wave vector
  Eigen::VectorXd xi;       // angular wave vector 2π m / L
  Eigen::MatrixXd eta;      // symmetric direction
  bool gauge = false;       // eta = sym(xi ⊗ w)
  double value = 0.0;
  double normalized = 0.0;  // value / (|xi|^{2m} |eta|^2), norms of h
};

struct SymbolReport {
  int order_2m = 0;
  std::vector<SymbolSample> samples;
  double lambda_est = 0.0;
  double threshold = 1e-6;
  bool pass = false;
};

// (-1)^m Σ a_β ξ^β η η of the adjusted flow with h frozen at freeze_point.
// The response to the plane waves ξ, 2ξ, 3ξ is fitted by A s^{2m} + C s^{2m-2};
// throws InconclusiveFitError when the fit residual exceeds fit_tol.
double principal_symbol(const MetricField& h, const FlowSpec& spec, std::span<const int> xi,
                        const Eigen::MatrixXd& eta, Eigen::Index freeze_point = 0);

// Same measurement for many samples at once; samples with disjoint mode sets
// share one linearization.
void measure_symbols(const MetricField& h, const FlowSpec& spec,
                     std::vector<SymbolSample>& samples, Eigen::Index freeze_point = 0);

// Random (ξ, η) pairs; about a quarter use gauge directions η = sym(ξ ⊗ w).
SymbolReport ellipticity_check(const MetricField& h, const FlowSpec& spec, int sample_count,
                               std::uint64_t seed = 0, Eigen::Index freeze_point = 0);

std::string to_json(const SymbolReport& report);

struct CancellationReport {
  std::vector<int> factors;          // k multiples
  std::vector<double> residuals;     // ‖L_h v - (-1)^p L̃^{p+1} v‖ / ‖L̃^{p+1} v‖
  std::vector<double> ratios;        // residuals[i+1] / residuals[i]
};

// Single-mode v = η cos(f k·x) for each factor f; L̃ = h^{ab}∂_a∂_b.
CancellationReport verify_leading_cancellation(const MetricField& h, int p,
                                               std::span<const int> k,
                                               const std::vector<int>& factors = {1, 2, 4},
                                               std::uint64_t seed = 0);

}  // namespace geoflow
