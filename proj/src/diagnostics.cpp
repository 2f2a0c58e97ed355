// SPDX-License-Identifier: Apache-2.0
#include "geoflow/diagnostics.hpp"

#include "geoflow/curvature.hpp"
#include "geoflow/differentiate.hpp"
#include "geoflow/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace geoflow {

namespace {

double wrapped(double d, double period) {
  d = std::fmod(std::abs(d), period);
  return std::min(d, period - d);
}

std::vector<double> periods_of(const Grid& g) {
  return std::vector<double>(g.periods().begin(), g.periods().begin() + g.dim());
}

double rate(double e0, double e1, int n0, int n1) {
  return std::log(e0 / e1) / std::log(static_cast<double>(n1) / n0);
}

// Largest Euclidean gradient norm over points, components and slices.
double gradient_sup(const TimeSeries& u) {
  const Grid grid = u.grid().with_scheme(Scheme::Spectral);
  double best = 0.0;
  for (const auto& s : u.slices) {
    for (Eigen::Index c = 0; c < s.components(); ++c) {
      ColumnDerivatives d(grid, s.comp(c));
      Eigen::ArrayXd g2 = Eigen::ArrayXd::Zero(grid.points());
      for (int a = 0; a < grid.dim(); ++a) g2 += d.first(a).square();
      best = std::max(best, std::sqrt(g2.maxCoeff()));
    }
  }
  return best;
}

}  // namespace

double parabolic_distance(std::span<const double> x1, double t1, std::span<const double> x2,
                          double t2, int order_2m, std::span<const double> periods) {
  if (x1.size() != x2.size() || x1.size() != periods.size()) {
    throw UsageError("parabolic_distance: coordinate lengths differ");
  }
  if (order_2m < 1) throw UsageError("parabolic_distance: order must be positive");
  double s = 0.0;
  for (std::size_t a = 0; a < x1.size(); ++a) {
    const double d = wrapped(x1[a] - x2[a], periods[a]);
    s += d * d;
  }
  return std::max(std::sqrt(s), std::pow(std::abs(t1 - t2), 1.0 / order_2m));
}

double parabolic_distance(const Grid& grid, std::span<const double> x1, double t1,
                          std::span<const double> x2, double t2, int order_2m) {
  const auto per = periods_of(grid);
  return parabolic_distance(x1, t1, x2, t2, order_2m, per);
}

double derivative_sup_norm(const TimeSeries& u, int k) {
  u.validate();
  const Grid grid = u.grid().with_scheme(Scheme::Spectral);
  std::vector<MultiIndex> betas;
  for (int order = 0; order <= k; ++order) {
    const auto b = multi_indices(grid.dim(), order);
    betas.insert(betas.end(), b.begin(), b.end());
  }
  std::vector<double> best(betas.size(), 0.0);
  for (const auto& s : u.slices) {
    for (Eigen::Index c = 0; c < s.components(); ++c) {
      ColumnDerivatives d(grid, s.comp(c));
      for (std::size_t i = 0; i < betas.size(); ++i) {
        best[i] = std::max(best[i], d(betas[i]).abs().maxCoeff());
      }
    }
  }
  double sum = 0.0;
  for (double b : best) sum += b;
  return sum;
}

HolderReport holder_seminorm(const TimeSeries& u, double alpha, int order_2m, int pair_budget,
                             std::uint64_t seed) {
  u.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("holder_seminorm: alpha must be in (0,1)");
  if (pair_budget < 0) throw UsageError("holder_seminorm: negative pair budget");
  const Grid& grid = u.grid();
  const int n = grid.dim();
  const auto per = periods_of(grid);
  const Eigen::Index points = grid.points();
  const int slices = static_cast<int>(u.size());
  const Eigen::Index comps = u.slices.front().components();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick_point(0, points - 1);
  std::uniform_int_distribution<int> pick_slice(0, slices - 1);
  std::uniform_int_distribution<int> offset(-2, 2);
  std::uniform_int_distribution<int> step(-1, 1);

  std::vector<double> x1(n), x2(n);
  auto coords = [&](Eigen::Index p, std::vector<double>& x) {
    const auto idx = grid.unravel(p);
    for (int a = 0; a < n; ++a) x[a] = idx[a] * grid.spacing(a);
  };

  double best = 0.0;
  for (int i = 0; i < pair_budget; ++i) {
    Eigen::Index p1 = pick_point(rng), p2 = p1;
    int s1 = pick_slice(rng), s2 = s1;
    switch (i % 3) {
      case 0: {  // near
        auto idx = grid.unravel(p1);
        std::array<int, kMaxDim> j{};
        for (int a = 0; a < n; ++a) j[a] = idx[a] + offset(rng);
        p2 = grid.ravel(std::span<const int>(j.data(), n));
        s2 = std::clamp(s1 + step(rng), 0, slices - 1);
        break;
      }
      case 1:  // far
        p2 = pick_point(rng);
        s2 = pick_slice(rng);
        break;
      default:  // pure time
        s2 = pick_slice(rng);
        break;
    }
    if (p1 == p2 && s1 == s2) continue;
    coords(p1, x1);
    coords(p2, x2);
    const double d =
        parabolic_distance(x1, u.times[s1], x2, u.times[s2], order_2m, per);
    double diff = 0.0;
    for (Eigen::Index c = 0; c < comps; ++c) {
      diff = std::max(diff, std::abs(u.slices[s1].data()(p1, c) - u.slices[s2].data()(p2, c)));
    }
    best = std::max(best, diff / std::pow(d, alpha));
  }

  HolderReport rep;
  rep.alpha = alpha;
  rep.order_2m = order_2m;
  rep.seminorm = best;
  rep.full_norm = best + derivative_sup_norm(u, order_2m);
  rep.pair_budget = pair_budget;
  return rep;
}

double surrogate_norm(const TimeSeries& u, double alpha, int order_2m, int pair_budget,
                      std::uint64_t seed) {
  return holder_seminorm(u, alpha, order_2m, pair_budget, seed).full_norm;
}

InterpolationCheck interpolation_check(const TimeSeries& u, double alpha, int order_2m,
                                       int pair_budget, std::uint64_t seed) {
  u.validate();
  if (u.size() < 3) throw UsageError("interpolation_check: needs at least 3 time slices");
  InterpolationCheck out;
  out.lhs = holder_seminorm(u, alpha, order_2m, pair_budget, seed).seminorm;
  const double sup = sup_norm(u);
  double dt_sup = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    dt_sup = std::max(dt_sup, max_abs_difference(u.slices[i], u.slices[i - 1]) /
                                  (u.times[i] - u.times[i - 1]));
  }
  const double grad_sup = gradient_sup(u);
  const double a_t = alpha / order_2m;
  out.rhs = std::pow(2.0 * sup, 1.0 - a_t) * std::pow(dt_sup, a_t) +
            std::pow(2.0 * sup, 1.0 - alpha) * std::pow(grad_sup, alpha);
  out.margin = out.rhs - out.lhs;
  out.pass = out.margin >= -0.05 * out.lhs;
  return out;
}

std::string to_string(Invariant which) {
  switch (which) {
    case Invariant::TraceFree:
      return "trace_free";
    case Invariant::DivFree:
      return "div_free";
    case Invariant::ConformalCovariance:
      return "conformal_covariance";
    case Invariant::Naturality:
      return "naturality";
    case Invariant::Stationarity:
      return "stationarity";
  }
  return "unknown";
}

const ResidualEntry* InvariantReport::find(Invariant which) const {
  for (const auto& [w, e] : residuals) {
    if (w == which) return &e;
  }
  return nullptr;
}

InvariantReport invariant_suite(const std::vector<MetricField>& resolutions,
                                const InvariantOptions& options) {
  if (resolutions.empty()) throw UsageError("invariant_suite: no metrics given");
  if (options.which.count(Invariant::Stationarity)) {
    throw UsageError("invariant_suite: stationarity is a trajectory check, use stationarity()");
  }
  if (options.which.count(Invariant::ConformalCovariance) && !options.rho) {
    throw UsageError("invariant_suite: conformal check needs rho");
  }
  if (options.which.count(Invariant::Naturality) && !options.displacement) {
    throw UsageError("invariant_suite: naturality check needs a displacement");
  }
  InvariantReport rep;
  for (Invariant w : options.which) rep.residuals.push_back({w, ResidualEntry{}});

  for (const MetricField& g : resolutions) {
    const bool need_bach = options.which.count(Invariant::TraceFree) ||
                           options.which.count(Invariant::DivFree) ||
                           options.which.count(Invariant::ConformalCovariance) ||
                           (options.which.count(Invariant::Naturality) &&
                            options.naturality_uses_bach);
    if (need_bach && g.dim() != 4) {
      throw UsageError("invariant_suite: Bach checks need a 4-dimensional grid");
    }
    Connection conn(g);
    TensorField b;
    if (need_bach) {
      CurvaturePack pack = riemann_ricci_scalar(conn);
      pack.schouten = schouten(g, pack);
      pack.weyl = weyl(g, pack);
      b = bach(conn, pack);
    }
    for (auto& [w, e] : rep.residuals) {
      double v = 0.0;
      switch (w) {
        case Invariant::TraceFree:
          v = trace(b, g).max_abs();
          break;
        case Invariant::DivFree:
          v = divergence(b, 0, conn).max_abs();
          break;
        case Invariant::ConformalCovariance: {
          const Eigen::ArrayXd rho = options.rho(g.grid());
          TensorField gh = g.value();
          gh.scale_by(rho * rho);
          TensorField expect = b;
          expect.scale_by(rho.inverse().square());
          v = max_abs_difference(bach(MetricField(gh)), expect);
          break;
        }
        case Invariant::Naturality: {
          NaturalOperator op;
          if (options.naturality_uses_bach) {
            op = [](const MetricField& m) { return bach(m); };
          } else {
            op = [](const MetricField& m) { return riemann_ricci_scalar(m).ricci; };
          }
          v = naturality_check(op, g, options.displacement(g.grid()));
          break;
        }
        case Invariant::Stationarity:
          break;
      }
      e.resolutions.push_back(g.grid().size(0));
      e.values.push_back(v);
    }
  }
  for (auto& [w, e] : rep.residuals) {
    for (std::size_t i = 1; i < e.values.size(); ++i) {
      e.rates.push_back(rate(e.values[i - 1], e.values[i], e.resolutions[i - 1], e.resolutions[i]));
    }
  }
  return rep;
}

StationarityReport stationarity(const std::vector<MetricField>& metrics, const FlowSpec& spec,
                                double rhs_tol) {
  if (metrics.empty()) throw UsageError("stationarity: empty trajectory");
  StationarityReport rep;
  for (const auto& g : metrics) {
    rep.drift = std::max(rep.drift, max_abs_difference(g.value(), metrics.front().value()));
  }
  const MetricField& last = metrics.back();
  if (flow_rhs(last, spec).max_abs() < rhs_tol) {
    const Eigen::ArrayXd s = ricci_scalar(Connection(last)).scalar.values();
    rep.scalar_variance = (s - s.mean()).square().mean();
  }
  return rep;
}

std::string to_json(const HolderReport& r) {
  nlohmann::json j{{"alpha", r.alpha},          {"order_2m", r.order_2m},
                   {"seminorm", r.seminorm},    {"full_norm", r.full_norm},
                   {"pair_budget", r.pair_budget}};
  return j.dump(2);
}

std::string to_json(const InterpolationCheck& c) {
  nlohmann::json j{{"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}, {"pass", c.pass}};
  return j.dump(2);
}

std::string to_json(const InvariantReport& r) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [w, e] : r.residuals) {
    nlohmann::json x{{"resolutions", e.resolutions}, {"values", e.values}};
    if (!e.rates.empty()) x["rates"] = e.rates;
    j[to_string(w)] = x;
  }
  return j.dump(2);
}

}  // namespace geoflow
