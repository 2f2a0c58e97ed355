// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/flows.hpp"
#include "geoflow/tensor_algebra.hpp"
#include "geoflow/time_series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace geoflow {

// max{ |x1 - x2|, |t1 - t2|^{1/(2m)} }; the spatial part is the Euclidean
// length of the per-axis wrapped differences.
double parabolic_distance(std::span<const double> x1, double t1, std::span<const double> x2,
                          double t2, int order_2m, std::span<const double> periods);
double parabolic_distance(const Grid& grid, std::span<const double> x1, double t1,
                          std::span<const double> x2, double t2, int order_2m);

struct HolderReport {
  double alpha = 0.5;
  int order_2m = 2;
  double seminorm = 0.0;   // sampled lower bound of [u]_α
  double full_norm = 0.0;  // seminorm + Σ_{|β|<=2m} sup|∂^β u|
  int pair_budget = 0;
};

inline constexpr int kDefaultPairBudget = 20000;

// Sampled parabolic Hölder seminorm. Pairs come in thirds (near, far,
// pure-time) from a seeded stream, so a larger budget extends the sample of
// a smaller one. Derivatives use spectral differentiation.
HolderReport holder_seminorm(const TimeSeries& u, double alpha, int order_2m,
                             int pair_budget = kDefaultPairBudget, std::uint64_t seed = 0);

// Σ_{|β|<=k} max over slices and components of sup|∂^β u|.
double derivative_sup_norm(const TimeSeries& u, int k);

// Surrogate for the C^{2m,0;α} norm: holder_seminorm(...).full_norm.
double surrogate_norm(const TimeSeries& u, double alpha, int order_2m,
                      int pair_budget = kDefaultPairBudget, std::uint64_t seed = 0);

struct InterpolationCheck {
  double lhs = 0.0;     // sampled [u]_α
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;    // margin >= -0.05 lhs
};

// [u]_α <= (2‖u‖)^{1-α/(2m)} ‖∂_t u‖^{α/(2m)} + (2‖u‖)^{1-α} ‖∇u‖^α.
// ∂_t by differences of consecutive slices; needs three slices.
InterpolationCheck interpolation_check(const TimeSeries& u, double alpha, int order_2m,
                                       int pair_budget = kDefaultPairBudget,
                                       std::uint64_t seed = 0);

enum class Invariant { TraceFree, DivFree, ConformalCovariance, Naturality, Stationarity };

std::string to_string(Invariant which);

struct ResidualEntry {
  std::vector<int> resolutions;
  std::vector<double> values;
  std::vector<double> rates;  // empty with fewer than two resolutions
};

struct InvariantReport {
  std::vector<std::pair<Invariant, ResidualEntry>> residuals;
  const ResidualEntry* find(Invariant which) const;
};

struct InvariantOptions {
  std::set<Invariant> which{Invariant::TraceFree, Invariant::DivFree};
  // ρ on a grid, for the conformal check
  std::function<Eigen::ArrayXd(const Grid&)> rho;
  // displacement on a grid, for the naturality check
  std::function<TensorField(const Grid&)> displacement;
  // tensor used for naturality (Bach needs n = 4, Ricci any n)
  bool naturality_uses_bach = true;
};

// Residuals of one metric family sampled at several resolutions (same
// continuum metric on grids of increasing size). Rates are
// log(e_i / e_{i+1}) / log(N_{i+1} / N_i).
InvariantReport invariant_suite(const std::vector<MetricField>& resolutions,
                                const InvariantOptions& options);

// Stationarity of a stored trajectory: max_t ‖g(t) - g(0)‖_∞, plus the
// variance of S on the last slice when its flow rhs is below rhs_tol.
struct StationarityReport {
  double drift = 0.0;
  std::optional<double> scalar_variance;
};
StationarityReport stationarity(const std::vector<MetricField>& metrics, const FlowSpec& spec,
                                double rhs_tol = 1e-8);

std::string to_json(const HolderReport& report);
std::string to_json(const InterpolationCheck& check);
std::string to_json(const InvariantReport& report);

}  // namespace geoflow
