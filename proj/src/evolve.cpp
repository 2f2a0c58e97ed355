// SPDX-License-Identifier: Apache-2.0
#include "geoflow/evolve.hpp"

#include "geoflow/diagnostics.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/interpolate.hpp"
#include "geoflow/snapshot.hpp"
#include "geoflow/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>

namespace geoflow {

namespace {

// |k|^{2m} on the half-complex spectrum
Eigen::ArrayXd k_power(const SpectralBasis& basis, int order_2m) {
  return basis.k_squared().pow(order_2m / 2);
}

// Canonical components of a symmetric rank-2 field: (index, mirror).
std::vector<std::pair<Eigen::Index, Eigen::Index>> upper_pairs(const TensorField& t) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  const int n = t.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) out.push_back({t.index({i, j}), t.index({j, i})});
  }
  return out;
}

TensorField symmetric_like(const Grid& grid) {
  return TensorField(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
}

MetricField checked_metric(TensorField g, double time) {
  try {
    return MetricField(std::move(g));
  } catch (const DegenerateMetricError& e) {
    throw NumericalFailure(std::string("metric degenerated: ") + e.what(), time);
  } catch (const NonFiniteError& e) {
    throw NumericalFailure(std::string("non-finite metric: ") + e.what(), time);
  }
}

std::string to_string(WLaplacian w) {
  return w == WLaplacian::Background ? "background" : "evolving";
}

}  // namespace

TensorField heat_semigroup(const TensorField& v, double t, int order_2m, double coefficient) {
  if (t < 0.0) throw UsageError("heat_semigroup: t must be >= 0");
  if (order_2m < 2 || order_2m % 2 != 0) throw UsageError("heat_semigroup: order must be even");
  if (t == 0.0) return v;
  auto basis = SpectralBasis::of(v.grid());
  const Eigen::ArrayXd table = (-t * coefficient * k_power(*basis, order_2m)).exp();
  return fourier_multiplier(v, table);
}

void PicardConfig::validate() const {
  if (!(mu > 0.0)) throw UsageError("picard: mu must be positive");
  if (!(t_final > 0.0)) throw UsageError("picard: T must be positive");
  if (!(tol > 0.0)) throw UsageError("picard: tol must be positive");
  if (time_steps < 16) throw UsageError("picard: at least 16 time steps are required");
  if (max_iters < 1) throw UsageError("picard: max_iters must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("picard: alpha must be in (0,1)");
}

std::vector<double> PicardConfig::times() const {
  std::vector<double> t(time_steps + 1);
  for (int j = 0; j <= time_steps; ++j) t[j] = t_final * j / time_steps;
  return t;
}

TimeSeries psi_apply(const TimeSeries& u, const TaylorSplit& split, const PicardConfig& cfg) {
  u.validate();
  const std::vector<double> times = cfg.times();
  if (u.size() != times.size()) throw UsageError("psi_apply: time grid does not match config");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (std::abs(u.times[j] - times[j]) > 1e-12 * cfg.t_final) {
      throw UsageError("psi_apply: time grid does not match config");
    }
  }
  if (u.slices.front().max_abs() != 0.0) throw UsageError("psi_apply: u(0) must vanish");

  const Grid& grid = u.grid();
  auto basis = SpectralBasis::of(grid);
  const Eigen::ArrayXd lam = split.principal_coefficient * k_power(*basis, split.order_2m);
  const std::size_t steps = times.size() - 1;
  const double dt = cfg.t_final / static_cast<double>(steps);

  // The kernel is integrated exactly against G interpolated on each step
  // (linear for trapezoid, constant for midpoint):
  //   Ψ_n = e^{-λ dt} Ψ_{n-1} + a G_{n-1} + b G_n   (trapezoid)
  //   Ψ_n = e^{-λ dt} Ψ_{n-1} + i0 G_{n-1/2}        (midpoint)
  // with i0 = ∫_0^dt e^{-λσ}dσ, a = ∫_0^dt σ e^{-λσ}dσ / dt, b = i0 - a.
  const Eigen::ArrayXd x = lam * dt;
  const Eigen::ArrayXd decay = (-x).exp();
  Eigen::ArrayXd i0(lam.size()), a(lam.size());
  for (Eigen::Index q = 0; q < lam.size(); ++q) {
    const double z = x(q);
    if (z < 1e-3) {
      i0(q) = dt * (1 - z / 2 + z * z / 6 - z * z * z / 24);
      a(q) = dt * (0.5 - z / 3 + z * z / 8 - z * z * z / 30);
    } else {
      i0(q) = -std::expm1(-z) / lam(q);
      a(q) = (1.0 - decay(q) * (1.0 + z)) / (lam(q) * z);
    }
  }
  const Eigen::ArrayXd b = i0 - a;

  // Two-thirds truncation of Ψ: removes the aliased products and the
  // Nyquist planes, where odd spectral derivatives vanish and the discrete
  // operator does not reduce to L0.
  Eigen::ArrayXd keep = Eigen::ArrayXd::Ones(lam.size());
  for (Eigen::Index q = 0; q < lam.size(); ++q) {
    for (int ax = 0; ax < grid.dim(); ++ax) {
      if (3 * std::abs(basis->mode(q, ax)) >= grid.size(ax)) keep(q) = 0.0;
    }
  }

  // G = 𝒯(h + v) - L0 v in Fourier space, canonical components only
  TimeSeries out = zero_series(times, symmetric_like(grid));
  const auto pairs = upper_pairs(out.slices.front());
  auto forcing = [&](const TensorField& v, double time) {
    TensorField g;
    try {
      g = split.operator_apply(v);
    } catch (const DegenerateMetricError& e) {
      throw NumericalFailure(std::string("metric degenerated in Ψ: ") + e.what(), time);
    }
    std::vector<Eigen::ArrayXcd> spec;
    for (const auto& pr : pairs) {
      spec.push_back(basis->forward(g.comp(pr.first)) + lam * basis->forward(v.comp(pr.first)));
    }
    return spec;
  };

  std::vector<Eigen::ArrayXcd> acc(pairs.size(), Eigen::ArrayXcd::Zero(basis->modes()));
  std::vector<Eigen::ArrayXcd> prev;
  if (cfg.quadrature == Quadrature::Trapezoid) prev = forcing(u.slices[0], times[0]);
  for (std::size_t n = 1; n <= steps; ++n) {
    std::vector<Eigen::ArrayXcd> cur;
    if (cfg.quadrature == Quadrature::Trapezoid) {
      cur = forcing(u.slices[n], times[n]);
      for (std::size_t c = 0; c < pairs.size(); ++c) {
        acc[c] = decay * acc[c] + a * prev[c] + b * cur[c];
      }
    } else {
      TensorField mid = 0.5 * (u.slices[n - 1] + u.slices[n]);
      mid.set_symmetry(Symmetry::Symmetric);
      cur = forcing(mid, 0.5 * (times[n - 1] + times[n]));
      for (std::size_t c = 0; c < pairs.size(); ++c) acc[c] = decay * acc[c] + i0 * cur[c];
    }
    TensorField& slice = out.slices[n];
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      slice.comp(pairs[c].first) = basis->inverse(keep * acc[c]);
      if (pairs[c].second != pairs[c].first) slice.comp(pairs[c].second) = slice.comp(pairs[c].first);
    }
    prev = std::move(cur);
  }
  return out;
}

PicardState picard_solve(const MetricField& h, const FlowSpec& spec, const PicardConfig& cfg) {
  cfg.validate();
  if (!spec.deturck()) throw UsageError("picard_solve: needs the DeTurck-adjusted flow");
  require_same_lattice(h.grid(), spec.grid(), "picard_solve");
  const FlowSpec fspec = &h == &spec.background() ? spec : spec.with_background(h);
  const TaylorSplit split = taylor_split(h, fspec);
  const int order = split.order_2m;
  auto norm = [&](const TimeSeries& x) {
    return surrogate_norm(x, cfg.alpha, order, cfg.pair_budget, cfg.seed);
  };

  PicardState st;
  st.iterates.push_back(zero_series(cfg.times(), symmetric_like(h.grid())));
  st.norms.push_back(0.0);
  for (int k = 0; k < cfg.max_iters; ++k) {
    TimeSeries next = psi_apply(st.iterates.back(), split, cfg);
    const double inc = norm(difference(next, st.iterates.back()));
    const double nn = norm(next);
    st.iterates.push_back(std::move(next));
    st.norms.push_back(nn);
    if (!st.increments.empty()) st.contraction_history.push_back(inc / st.increments.back());
    st.increments.push_back(inc);
    if (nn > cfg.mu) {
      st.stop = PicardStop::BallExit;
      return st;
    }
    if (inc < cfg.tol) {
      st.stop = PicardStop::Converged;
      st.converged = true;
      break;
    }
  }
  if (!st.converged) {
    st.stop = PicardStop::MaxIters;
    return st;
  }
  const TimeSeries& v = st.iterates.back();
  st.fixed_point_residual = norm(difference(v, psi_apply(v, split, cfg)));

  Trajectory traj{v.times, {}, fspec, true};
  for (std::size_t j = 0; j < v.size(); ++j) {
    TensorField g = h.value() + v.slices[j];
    g.set_symmetry(Symmetry::Symmetric);
    traj.metrics.push_back(checked_metric(std::move(g), v.times[j]));
  }
  st.trajectory = std::move(traj);
  return st;
}

Trajectory imex_evolve(const MetricField& g0, const FlowSpec& spec, double dt, int steps,
                       int store_every) {
  if (!(dt > 0.0)) throw UsageError("imex_evolve: dt must be positive");
  if (steps < 0) throw UsageError("imex_evolve: steps must be >= 0");
  if (store_every < 1) throw UsageError("imex_evolve: store_every must be >= 1");
  require_same_lattice(g0.grid(), spec.grid(), "imex_evolve");
  auto basis = SpectralBasis::of(g0.grid());
  const Eigen::ArrayXd implicit =
      dt / (1.0 + dt * spec.principal_coefficient() * k_power(*basis, spec.order()));

  Trajectory traj{{0.0}, {g0}, spec, spec.deturck()};
  MetricField g = g0;
  for (int n = 1; n <= steps; ++n) {
    const double t = n * dt;
    TensorField rhs = adjusted_rhs(g, spec);
    TensorField next = g.value() + fourier_multiplier(rhs, implicit);
    next.set_symmetry(Symmetry::Symmetric);
    g = checked_metric(std::move(next), t);
    if (n % store_every == 0 || n == steps) {
      traj.times.push_back(t);
      traj.metrics.push_back(g);
    }
  }
  return traj;
}

Trajectory deturck_pullback(const Trajectory& traj) {
  const std::size_t slices = traj.times.size();
  if (slices == 0 || slices != traj.metrics.size()) {
    throw UsageError("deturck_pullback: empty or inconsistent trajectory");
  }
  if (!traj.adjusted) throw UsageError("deturck_pullback: trajectory is not DeTurck-adjusted");
  const Grid& grid = traj.metrics.front().grid();
  const int n = grid.dim();
  const Eigen::Index points = grid.points();

  std::vector<TensorField> w;
  w.reserve(slices);
  for (const MetricField& g : traj.metrics) {
    w.push_back(deturck_W(Connection(g), traj.spec).w);
  }
  std::map<std::size_t, std::unique_ptr<PeriodicSpline>> splines;
  auto spline = [&](std::size_t j) -> const PeriodicSpline& {
    auto it = splines.find(j);
    if (it == splines.end()) {
      if (splines.size() > 6) splines.erase(splines.begin());
      it = splines.emplace(j, std::make_unique<PeriodicSpline>(w[j])).first;
    }
    return *it->second;
  };

  Eigen::ArrayXXd base(points, n);
  for (int a = 0; a < n; ++a) base.col(a) = grid.coordinate(a);

  // -W at time t and positions base + d (points x n)
  auto minus_w = [&](double t, std::size_t seg, const Eigen::ArrayXXd& d) {
    std::vector<std::size_t> idx;
    std::vector<double> weight;
    if (t == traj.times[seg]) {
      idx = {seg};
      weight = {1.0};
    } else if (seg + 1 < slices && t == traj.times[seg + 1]) {
      idx = {seg + 1};
      weight = {1.0};
    } else {
      const std::size_t count = std::min<std::size_t>(4, slices);
      std::size_t j0 = seg > 0 ? seg - 1 : 0;
      j0 = std::min(j0, slices - count);
      for (std::size_t j = j0; j < j0 + count; ++j) {
        double l = 1.0;
        for (std::size_t i = j0; i < j0 + count; ++i) {
          if (i != j) l *= (t - traj.times[i]) / (traj.times[j] - traj.times[i]);
        }
        idx.push_back(j);
        weight.push_back(l);
      }
    }
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(points, n);
    Eigen::ArrayXd val(n);
    std::array<double, kMaxDim> x{};
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const PeriodicSpline& s = spline(idx[q]);
      for (Eigen::Index p = 0; p < points; ++p) {
        for (int a = 0; a < n; ++a) x[a] = base(p, a) + d(p, a);
        s.evaluate(std::span<const double>(x.data(), n), val);
        out.row(p) -= weight[q] * val.transpose();
      }
    }
    return out;
  };

  Trajectory out{traj.times, {traj.metrics.front()}, traj.spec, false};
  Eigen::ArrayXXd d = Eigen::ArrayXXd::Zero(points, n);
  for (std::size_t j = 0; j + 1 < slices; ++j) {
    const double t0 = traj.times[j];
    const double h = traj.times[j + 1] - t0;
    const Eigen::ArrayXXd k1 = minus_w(t0, j, d);
    const Eigen::ArrayXXd k2 = minus_w(t0 + 0.5 * h, j, d + 0.5 * h * k1);
    const Eigen::ArrayXXd k3 = minus_w(t0 + 0.5 * h, j, d + 0.5 * h * k2);
    const Eigen::ArrayXXd k4 = minus_w(traj.times[j + 1], j, d + h * k3);
    d += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    TensorField disp(grid, {Variance::Up});
    for (int a = 0; a < n; ++a) disp.comp(a) = d.col(a);
    try {
      out.metrics.push_back(pull_back(traj.metrics[j + 1], disp));
    } catch (const DiffeomorphismError& e) {
      throw NumericalFailure(std::string("pull-back lost invertibility: ") + e.what(),
                             traj.times[j + 1]);
    }
  }
  return out;
}

double pullback_residual(const Trajectory& pulled) {
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < pulled.times.size(); ++j) {
    const double span = pulled.times[j + 1] - pulled.times[j - 1];
    TensorField dg = (1.0 / span) * (pulled.metrics[j + 1].value() - pulled.metrics[j - 1].value());
    dg -= flow_rhs(pulled.metrics[j], pulled.spec);
    worst = std::max(worst, dg.max_abs());
  }
  return worst;
}

void export_trajectory(const Trajectory& traj, const std::filesystem::path& dir,
                       const std::vector<double>& contraction_history) {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["spec"] = {{"flow", traj.spec.name()},
               {"deturck", traj.spec.deturck()},
               {"w_laplacian", to_string(traj.spec.w_laplacian())}};
  m["adjusted"] = traj.adjusted;
  m["times"] = traj.times;
  m["background"] = "background.snap";
  write_snapshot(dir / "background.snap", traj.spec.background().value(), 0.0);
  std::vector<std::string> files;
  std::vector<double> norms;
  char name[32];
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    std::snprintf(name, sizeof(name), "slice_%05zu.snap", j);
    write_snapshot(dir / name, traj.metrics[j].value(), traj.times[j]);
    files.emplace_back(name);
    norms.push_back(max_abs_difference(traj.metrics[j].value(), traj.spec.background().value()));
  }
  m["files"] = files;
  m["norms"] = norms;  // sup |g(t) - h|
  m["contraction_history"] = contraction_history;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw UsageError("export_trajectory: cannot write " + (dir / "manifest.json").string());
  os << m.dump(2) << "\n";
}

Trajectory import_trajectory(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw UsageError("import_trajectory: no manifest in " + dir.string());
  const nlohmann::json m = nlohmann::json::parse(is);
  MetricField h(read_snapshot(dir / m.at("background").get<std::string>()).field);
  const auto& sp = m.at("spec");
  const WLaplacian wl = sp.value("w_laplacian", std::string("evolving")) == "background"
                            ? WLaplacian::Background
                            : WLaplacian::Evolving;
  FlowSpec spec(parse_flow_kind(sp.at("flow").get<std::string>()), h,
                sp.at("deturck").get<bool>(), wl);
  Trajectory traj{{}, {}, spec, m.at("adjusted").get<bool>()};
  for (const auto& f : m.at("files")) {
    Snapshot s = read_snapshot(dir / f.get<std::string>());
    traj.times.push_back(s.time);
    traj.metrics.emplace_back(std::move(s.field));
  }
  return traj;
}

}  // namespace geoflow
