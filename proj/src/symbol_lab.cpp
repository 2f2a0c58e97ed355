// SPDX-License-Identifier: Apache-2.0
#include "geoflow/symbol_lab.hpp"

#include "geoflow/errors.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace geoflow {

namespace {

constexpr int kMultiples = 3;
constexpr int kBatchSize = 12;
constexpr double kFitTol = 1e-6;

TensorField central_difference(const MetricField& h, const FlowSpec& spec,
                               const TensorField& v, double s) {
  TensorField plus = adjusted_rhs(MetricField(h.value() + s * v), spec);
  TensorField minus = adjusted_rhs(MetricField(h.value() - s * v), spec);
  return (0.5 / s) * (plus - minus);
}

Eigen::MatrixXd metric_at(const MetricField& h, Eigen::Index point) {
  const int n = h.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = h.g(i, j)[point];
  }
  return m;
}

MetricField constant_metric(const Grid& grid, const Eigen::MatrixXd& m) {
  const int n = grid.dim();
  TensorField t(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) t.comp(t.index({i, j})).setConstant(0.5 * (m(i, j) + m(j, i)));
  }
  return MetricField(std::move(t));
}

// phase s ξ·x on the grid
Eigen::ArrayXd phase(const Grid& grid, std::span<const int> modes, double s) {
  Eigen::ArrayXd ph = Eigen::ArrayXd::Zero(grid.points());
  for (int a = 0; a < grid.dim(); ++a) {
    if (modes[a] != 0) ph += s * grid.wavenumber(a, modes[a]) * grid.coordinate(a);
  }
  return ph;
}

// residue classes of ±s m on the lattice, s = 1..kMultiples
std::vector<std::vector<int>> occupied_modes(const Grid& grid, std::span<const int> m) {
  std::vector<std::vector<int>> out;
  for (int s = 1; s <= kMultiples; ++s) {
    for (int sign : {1, -1}) {
      std::vector<int> k(grid.dim());
      for (int a = 0; a < grid.dim(); ++a) {
        const int n = grid.size(a);
        k[a] = ((sign * s * m[a]) % n + n) % n;
      }
      out.push_back(std::move(k));
    }
  }
  return out;
}

}  // namespace

TensorField linearize_at(const MetricField& h, const FlowSpec& spec, const TensorField& v) {
  require_same_lattice(h.grid(), v.grid(), "linearize_at");
  if (v.rank() != 2 || v.variance(0) != Variance::Down || v.variance(1) != Variance::Down) {
    throw UsageError("linearize_at: v must be a symmetric rank-(0,2) field");
  }
  const double vmax = v.max_abs();
  TensorField zero = TensorField::zeros_like(h.value());
  if (vmax == 0.0) return zero;
  const TensorField vs = symmetrize(v);
  const double s = 1e-2 * h.value().max_abs() / vmax;
  const TensorField d1 = central_difference(h, spec, vs, s);
  const TensorField d2 = central_difference(h, spec, vs, s / 2);
  const TensorField d3 = central_difference(h, spec, vs, s / 4);
  const TensorField r1 = (1.0 / 3.0) * (4.0 * d2 - d1);
  const TensorField r2 = (1.0 / 3.0) * (4.0 * d3 - d2);
  TensorField out = (1.0 / 15.0) * (16.0 * r2 - r1);
  out.set_symmetry(Symmetry::Symmetric);
  return out;
}

TaylorSplit taylor_split(const MetricField& h, const FlowSpec& spec) {
  TaylorSplit split;
  split.inhomogeneous = adjusted_rhs(h, spec);
  split.order_2m = spec.order();
  split.principal_coefficient = spec.principal_coefficient();
  split.operator_apply = [h, spec](const TensorField& v) {
    return adjusted_rhs(MetricField(h.value() + symmetrize(v)), spec);
  };
  split.linear_apply = [h, spec](const TensorField& v) { return linearize_at(h, spec, v); };
  split.quadratic_apply = [h, spec, i = split.inhomogeneous](const TensorField& v) {
    TensorField q = adjusted_rhs(MetricField(h.value() + symmetrize(v)), spec);
    q -= i;
    q -= linearize_at(h, spec, v);
    return q;
  };
  return split;
}

double quadratic_constant(const TaylorSplit& split, const std::vector<TensorField>& family) {
  double c = 0.0;
  for (const TensorField& v : family) {
    const double nv = v.max_abs();
    if (nv == 0.0) continue;
    c = std::max(c, split.quadratic_apply(v).max_abs() / (nv * nv));
  }
  return c;
}

MetricField freeze(const MetricField& h, Eigen::Index point) {
  if (point < 0 || point >= h.grid().points()) throw UsageError("freeze: point out of range");
  return constant_metric(h.grid(), metric_at(h, point));
}

void measure_symbols(const MetricField& h, const FlowSpec& spec,
                     std::vector<SymbolSample>& samples, Eigen::Index freeze_point) {
  if (freeze_point < 0 || freeze_point >= h.grid().points()) {
    throw UsageError("measure_symbols: freeze point out of range");
  }
  const Grid grid = h.grid().with_scheme(Scheme::Spectral);
  const int n = grid.dim();
  const Eigen::MatrixXd hm = metric_at(h, freeze_point);
  const Eigen::MatrixXd hi = hm.inverse();
  const MetricField frozen = constant_metric(grid, hm);
  const FlowSpec fspec = spec.with_background(frozen);
  const int m = spec.order() / 2;

  for (auto& s : samples) {
    if (static_cast<int>(s.modes.size()) != n) throw UsageError("symbol sample: wrong mode count");
    if (std::all_of(s.modes.begin(), s.modes.end(), [](int k) { return k == 0; })) {
      throw UsageError("symbol sample: zero wave vector");
    }
    for (int a = 0; a < n; ++a) {
      if (2 * kMultiples * std::abs(s.modes[a]) >= grid.size(a)) {
        throw UsageError("symbol sample: 3 xi exceeds the Nyquist range");
      }
    }
    s.xi.resize(n);
    for (int a = 0; a < n; ++a) s.xi[a] = grid.wavenumber(a, s.modes[a]);
  }

  // greedy batches of samples whose mode sets are disjoint
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::set<std::vector<int>>> used;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto occ = occupied_modes(grid, samples[i].modes);
    std::size_t b = 0;
    for (; b < batches.size(); ++b) {
      if (batches[b].size() >= kBatchSize) continue;
      if (std::none_of(occ.begin(), occ.end(), [&](const auto& k) { return used[b].count(k); })) {
        break;
      }
    }
    if (b == batches.size()) {
      batches.emplace_back();
      used.emplace_back();
    }
    batches[b].push_back(i);
    used[b].insert(occ.begin(), occ.end());
  }

  Eigen::MatrixXd basis(kMultiples, 2);
  for (int s = 1; s <= kMultiples; ++s) {
    basis(s - 1, 0) = std::pow(s, 2 * m);
    basis(s - 1, 1) = std::pow(s, 2 * m - 2);
  }
  const auto qr = basis.colPivHouseholderQr();

  for (const auto& batch : batches) {
    TensorField v(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
    std::vector<std::array<Eigen::ArrayXd, kMultiples>> waves(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const SymbolSample& smp = samples[batch[j]];
      for (int s = 1; s <= kMultiples; ++s) {
        waves[j][s - 1] = phase(grid, smp.modes, s).cos();
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            const double e = 0.5 * (smp.eta(a, b) + smp.eta(b, a));
            if (e != 0.0) v.comp(v.index({a, b})) += e * waves[j][s - 1];
          }
        }
      }
    }
    const TensorField lv = linearize_at(frozen, fspec, v);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      SymbolSample& smp = samples[batch[j]];
      const Eigen::MatrixXd eta = 0.5 * (smp.eta + smp.eta.transpose());
      Eigen::VectorXd r(kMultiples);
      for (int s = 0; s < kMultiples; ++s) {
        Eigen::MatrixXd resp(n, n);
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            resp(a, b) = 2.0 * (lv.comp(lv.index({a, b})) * waves[j][s]).mean();
          }
        }
        r[s] = -(hi * eta * hi * resp).trace();
      }
      const Eigen::Vector2d coef = qr.solve(r);
      const double xi2 = smp.xi.dot(hi * smp.xi);
      const double eta2 = (hi * eta * hi * eta).trace();
      const double scale = std::pow(xi2, m) * eta2 * std::pow(kMultiples, 2 * m);
      const double resid = (basis * coef - r).norm();
      if (resid > kFitTol * scale) {
        throw InconclusiveFitError("symbol fit residual " + std::to_string(resid / scale) +
                                   " exceeds tolerance; operator is not of order " +
                                   std::to_string(2 * m));
      }
      smp.value = coef[0];
      smp.normalized = eta2 > 0.0 ? coef[0] / (std::pow(xi2, m) * eta2) : 0.0;
    }
  }
}

double principal_symbol(const MetricField& h, const FlowSpec& spec, std::span<const int> xi,
                        const Eigen::MatrixXd& eta, Eigen::Index freeze_point) {
  if (eta.rows() != h.dim() || eta.cols() != h.dim()) {
    throw UsageError("principal_symbol: eta must be dim x dim");
  }
  if (eta.isZero(0.0)) return 0.0;
  std::vector<SymbolSample> one(1);
  one[0].modes.assign(xi.begin(), xi.end());
  one[0].eta = eta;
  measure_symbols(h, spec, one, freeze_point);
  return one[0].value;
}

SymbolReport ellipticity_check(const MetricField& h, const FlowSpec& spec, int sample_count,
                               std::uint64_t seed, Eigen::Index freeze_point) {
  if (sample_count < 50) throw UsageError("ellipticity_check: needs at least 50 samples");
  const Grid& grid = h.grid();
  const int n = grid.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  SymbolReport rep;
  rep.order_2m = spec.order();
  rep.samples.resize(sample_count);
  for (int i = 0; i < sample_count; ++i) {
    SymbolSample& s = rep.samples[i];
    s.modes.assign(n, 0);
    while (std::all_of(s.modes.begin(), s.modes.end(), [](int k) { return k == 0; })) {
      for (int a = 0; a < n; ++a) {
        const int kmax = std::max(1, grid.size(a) / 8);
        s.modes[a] = std::uniform_int_distribution<int>(-kmax, kmax)(rng);
      }
    }
    s.gauge = i % 4 == 3;
    if (s.gauge) {
      Eigen::VectorXd xi(n), w(n);
      for (int a = 0; a < n; ++a) {
        xi[a] = grid.wavenumber(a, s.modes[a]);
        w[a] = n01(rng);
      }
      xi /= xi.norm();
      s.eta = 0.5 * (xi * w.transpose() + w * xi.transpose());
    } else {
      s.eta.resize(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) s.eta(a, b) = s.eta(b, a) = n01(rng);
      }
    }
  }
  measure_symbols(h, spec, rep.samples, freeze_point);
  rep.lambda_est = std::numeric_limits<double>::infinity();
  for (const auto& s : rep.samples) rep.lambda_est = std::min(rep.lambda_est, s.normalized);
  rep.pass = rep.lambda_est >= rep.threshold;
  return rep;
}

std::string to_json(const SymbolReport& report) {
  nlohmann::json j;
  j["order"] = report.order_2m;
  j["lambda_est"] = report.lambda_est;
  j["threshold"] = report.threshold;
  j["pass"] = report.pass;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples) {
    nlohmann::json e;
    e["modes"] = s.modes;
    e["xi"] = std::vector<double>(s.xi.data(), s.xi.data() + s.xi.size());
    std::vector<std::vector<double>> eta(s.eta.rows(), std::vector<double>(s.eta.cols()));
    for (Eigen::Index a = 0; a < s.eta.rows(); ++a) {
      for (Eigen::Index b = 0; b < s.eta.cols(); ++b) eta[a][b] = s.eta(a, b);
    }
    e["eta"] = eta;
    e["gauge"] = s.gauge;
    e["value"] = s.value;
    e["normalized"] = s.normalized;
    j["samples"].push_back(std::move(e));
  }
  return j.dump(2);
}

CancellationReport verify_leading_cancellation(const MetricField& h, int p,
                                               std::span<const int> k,
                                               const std::vector<int>& factors,
                                               std::uint64_t seed) {
  const Grid& grid = h.grid();
  const int n = grid.dim();
  if (static_cast<int>(k.size()) != n) throw UsageError("verify_leading_cancellation: bad k");
  const FlowSpec spec = FlowSpec::plap(h, p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd eta(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) eta(a, b) = eta(b, a) = n01(rng);
  }
  eta /= eta.norm();

  CancellationReport rep;
  for (int f : factors) {
    std::vector<int> modes(k.begin(), k.end());
    for (int& x : modes) x *= f;
    const Eigen::ArrayXd wave = phase(grid, modes, 1.0).cos();
    // |f k|_h^2 pointwise
    Eigen::ArrayXd k2 = Eigen::ArrayXd::Zero(grid.points());
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        k2 += h.inv(a, b) * grid.wavenumber(a, modes[a]) * grid.wavenumber(b, modes[b]);
      }
    }
    TensorField v(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
    TensorField lead = v;
    const Eigen::ArrayXd amp = -k2.pow(p + 1) * wave;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        v.comp(v.index({a, b})) = eta(a, b) * wave;
        lead.comp(lead.index({a, b})) = eta(a, b) * amp;
      }
    }
    const TensorField lv = linearize_at(h, spec, v);
    rep.factors.push_back(f);
    rep.residuals.push_back(max_abs_difference(lv, lead) / lead.max_abs());
  }
  for (std::size_t i = 1; i < rep.residuals.size(); ++i) {
    rep.ratios.push_back(rep.residuals[i] / rep.residuals[i - 1]);
  }
  return rep;
}

}  // namespace geoflow
