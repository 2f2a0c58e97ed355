// SPDX-License-Identifier: Apache-2.0
// geoflow command line: curvature, symbol, flow, picard, verify, pullback.
//
// Exit status: 0 pass, 2 numerical failure, 3 invariant failure, 4 usage.
#include "geoflow/curvature.hpp"
#include "geoflow/diagnostics.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/evolve.hpp"
#include "geoflow/flows.hpp"
#include "geoflow/snapshot.hpp"
#include "geoflow/symbol_lab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace geoflow;
using nlohmann::json;

namespace {

constexpr int kPass = 0;
constexpr int kNumeric = 2;
constexpr int kInvariant = 3;
constexpr int kUsage = 4;

// Flat JSON object -> CLI11 config items; arrays become multi-value inputs.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_text(v));
      } else {
        item.inputs.push_back(scalar_text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

struct Options {
  std::vector<double> grid{2, 32, kTwoPi};  // n N L
  std::string scheme = "central4";
  std::string flow = "plap:0";
  std::string deturck = "on";
  std::string w_laplacian = "evolving";
  double dt = 1e-5;
  int steps = 16;
  int store_every = 1;
  double mu = 1.0;
  double alpha = 0.5;
  double tol = 1e-9;
  int max_iters = 50;
  int samples = 100;
  std::string metric;      // snapshot file
  std::string background;  // snapshot file
  std::string init = "flat";
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
};

Grid make_grid(const Options& o) {
  if (o.grid.size() != 3) throw UsageError("--grid takes n N L");
  const double n = o.grid[0], size = o.grid[1];
  if (n != std::round(n) || size != std::round(size)) throw UsageError("--grid: n and N are integers");
  return Grid::cube(static_cast<int>(n), static_cast<int>(size), o.grid[2],
                    parse_scheme(o.scheme));
}

// flat | conformal:A | random:A; A is an amplitude, shapes are fixed low modes
MetricField synthetic_metric(const Grid& g, const std::string& recipe, std::uint64_t seed) {
  const auto colon = recipe.find(':');
  const std::string kind = recipe.substr(0, colon);
  double amp = 0.0;
  if (colon != std::string::npos) {
    try {
      amp = std::stod(recipe.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("--init: bad amplitude in '" + recipe + "'");
    }
  }
  const int n = g.dim();
  std::vector<Eigen::ArrayXd> x;
  for (int a = 0; a < n; ++a) x.push_back(g.wavenumber(a, 1) * g.coordinate(a));
  if (kind == "flat") return MetricField::flat(g);
  if (kind == "conformal") {
    return MetricField::conformal(g, amp * (x[0].sin() * x[1].cos() + 0.5 * x[n - 1].sin()));
  }
  if (kind == "random") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi), coef(-1.0, 1.0);
    TensorField t(g, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Eigen::ArrayXd v = Eigen::ArrayXd::Zero(g.points());
        for (int term = 0; term < 3; ++term) {
          Eigen::ArrayXd arg = Eigen::ArrayXd::Constant(g.points(), phase(rng));
          for (int a = 0; a < n; ++a) arg += std::round(coef(rng)) * x[a];
          v += coef(rng) / 3.0 * arg.sin();
        }
        v *= amp;
        if (i == j) v += 1.0;
        t.comp(t.index({i, j})) = v;
        t.comp(t.index({j, i})) = v;
      }
    }
    return MetricField(t);
  }
  throw UsageError("--init: expected flat, conformal:A or random:A");
}

MetricField load_metric(const std::string& path) { return MetricField(read_snapshot(path).field); }

MetricField initial_metric(const Options& o) {
  return o.metric.empty() ? synthetic_metric(make_grid(o), o.init, o.seed) : load_metric(o.metric);
}

FlowSpec make_spec(const Options& o, const MetricField& h) {
  if (o.deturck != "on" && o.deturck != "off") throw UsageError("--deturck takes on|off");
  if (o.w_laplacian != "evolving" && o.w_laplacian != "background") {
    throw UsageError("--w-laplacian takes evolving|background");
  }
  return FlowSpec(parse_flow_kind(o.flow), h, o.deturck == "on",
                  o.w_laplacian == "background" ? WLaplacian::Background : WLaplacian::Evolving);
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_curvature(const Options& o) {
  const MetricField g = initial_metric(o);
  const Connection conn(g);
  CurvaturePack pack = riemann_ricci_scalar(conn);
  json j{{"grid", {{"dim", g.dim()}, {"size", g.grid().size(0)}, {"scheme", to_string(g.grid().scheme())}}},
         {"riemann_sup", pack.riemann.max_abs()},
         {"ricci_sup", pack.ricci.max_abs()},
         {"scalar_min", pack.scalar.comp(0).minCoeff()},
         {"scalar_max", pack.scalar.comp(0).maxCoeff()}};
  if (g.dim() == 4) {
    pack.schouten = schouten(g, pack);
    pack.weyl = weyl(g, pack);
    const TensorField b = bach(conn, pack);
    j["weyl_sup"] = pack.weyl.max_abs();
    j["bach_sup"] = b.max_abs();
    j["bach_trace_sup"] = trace(b, g).max_abs();
    j["bach_div_sup"] = divergence(b, 0, conn).max_abs();
  }
  emit(j);
  return kPass;
}

int cmd_symbol(const Options& o) {
  const MetricField h = initial_metric(o);
  const SymbolReport r = ellipticity_check(h, make_spec(o, h), o.samples, o.seed);
  std::cout << to_json(r) << "\n";
  return r.pass ? kPass : kInvariant;
}

int cmd_flow(const Options& o) {
  const MetricField g0 = initial_metric(o);
  const MetricField h = o.background.empty() ? MetricField::flat(g0.grid()) : load_metric(o.background);
  const FlowSpec spec = make_spec(o, h);
  const Trajectory tr = imex_evolve(g0, spec, o.dt, o.steps, o.store_every);
  if (!o.out.empty()) export_trajectory(tr, o.out);
  emit({{"flow", spec.name()},
        {"deturck", spec.deturck()},
        {"slices", tr.times.size()},
        {"t_final", tr.times.back()},
        {"drift", max_abs_difference(tr.metrics.back().value(), g0.value())},
        {"out", o.out}});
  return kPass;
}

int cmd_picard(const Options& o) {
  const MetricField h = initial_metric(o);
  PicardConfig cfg;
  cfg.mu = o.mu;
  cfg.t_final = o.dt * o.steps;
  cfg.time_steps = o.steps;
  cfg.max_iters = o.max_iters;
  cfg.tol = o.tol;
  cfg.alpha = o.alpha;
  cfg.seed = o.seed;
  const FlowSpec spec = make_spec(o, h);
  const PicardState st = picard_solve(h, spec, cfg);
  const int order = spec.order();
  json interp = json::array();
  bool interp_ok = true;
  for (const TimeSeries& v : st.iterates) {
    const InterpolationCheck c = interpolation_check(v, cfg.alpha, order, cfg.pair_budget, cfg.seed);
    interp_ok = interp_ok && c.pass;
    interp.push_back({{"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
  }
  const char* stop = st.stop == PicardStop::Converged ? "converged"
                     : st.stop == PicardStop::BallExit ? "ball_exit"
                                                       : "max_iters";
  json j{{"flow", spec.name()},
         {"stop", stop},
         {"iterations", st.iterates.size() - 1},
         {"norms", st.norms},
         {"increments", st.increments},
         {"contraction_history", st.contraction_history},
         {"fixed_point_residual", st.fixed_point_residual},
         {"interpolation", interp}};
  if (st.trajectory && !o.out.empty()) export_trajectory(*st.trajectory, o.out, st.contraction_history);
  emit(j);
  if (!st.converged) return kNumeric;
  return interp_ok ? kPass : kInvariant;
}

int cmd_verify(const Options& o) {
  const Grid base = make_grid(o);
  const int n = base.dim();
  const int size = base.size(0);
  const int fine = n == 4 ? size + 4 : 2 * size;
  const std::string recipe = o.init == "flat" ? "random:0.05" : o.init;
  std::vector<MetricField> family;
  for (int s : {size, fine}) {
    const Grid g(n, std::vector<int>(n, s), std::vector<double>(n, base.period(0)), base.scheme());
    family.push_back(synthetic_metric(g, recipe, o.seed));
  }
  InvariantOptions opt;
  opt.which = {Invariant::Naturality};
  opt.naturality_uses_bach = n == 4;
  if (n == 4) {
    opt.which.insert({Invariant::TraceFree, Invariant::DivFree, Invariant::ConformalCovariance});
    opt.rho = [](const Grid& g) { return Eigen::ArrayXd::Constant(g.points(), 1.3); };
  }
  opt.displacement = [seed = o.seed](const Grid& g) {
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    TensorField d(g, {Variance::Up});
    for (int a = 0; a < g.dim(); ++a) {
      d.comp(a) = 0.03 * (g.wavenumber((a + 1) % g.dim(), 1) * g.coordinate((a + 1) % g.dim()) +
                          phase(rng)).sin();
    }
    return d;
  };
  const InvariantReport rep = invariant_suite(family, opt);

  const int order = scheme_order(base.scheme());
  bool ok = true;
  json checks = json::array();
  for (const auto& [w, e] : rep.residuals) {
    bool pass = true;
    if (w == Invariant::ConformalCovariance) {
      pass = e.values.front() <= 1e-10 && e.values.back() <= 1e-10;
    } else if (order > 0) {
      pass = e.rates.front() >= order - 1;
    }
    checks.push_back({{"name", to_string(w)}, {"pass", pass}});
    ok = ok && pass;
  }

  // flat stays flat under the selected flow
  const MetricField flat = MetricField::flat(base);
  const FlowSpec spec = make_spec(o, flat);
  const Trajectory tr = imex_evolve(flat, spec, o.dt, o.steps, std::max(1, o.steps / 8));
  const StationarityReport sr = stationarity(tr.metrics, spec);
  const bool still = sr.drift <= 1e-10;
  checks.push_back({{"name", "stationarity"}, {"pass", still}, {"drift", sr.drift}});
  ok = ok && still;

  json j = json::parse(to_json(rep));
  j["checks"] = checks;
  j["pass"] = ok;
  emit(j);
  return ok ? kPass : kInvariant;
}

int cmd_pullback(const Options& o) {
  if (o.in.empty()) throw UsageError("pullback: --in trajectory directory is required");
  const Trajectory tr = import_trajectory(o.in);
  const Trajectory pulled = deturck_pullback(tr);
  if (!o.out.empty()) export_trajectory(pulled, o.out);
  emit({{"slices", pulled.times.size()},
        {"residual", pulled.times.size() >= 3 ? pullback_residual(pulled) : 0.0},
        {"out", o.out}});
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric flows of metrics on flat tori"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file supplying any flag; flags on the command line win");
  app.allow_config_extras(false);

  Options o;
  app.add_option("--grid", o.grid, "dimension n, points per axis N, period L")->expected(3);
  app.add_option("--scheme", o.scheme, "central2 | central4 | spectral");
  app.add_option("--flow", o.flow, "plap:p | obstruction4");
  app.add_option("--deturck", o.deturck, "on | off");
  app.add_option("--w-laplacian", o.w_laplacian, "Laplacian in W: evolving | background");
  app.add_option("--dt", o.dt, "time step");
  app.add_option("--steps", o.steps, "number of steps (picard: time slices)");
  app.add_option("--store-every", o.store_every, "flow: keep every k-th step");
  app.add_option("--mu", o.mu, "picard ball radius");
  app.add_option("--alpha", o.alpha, "Hölder exponent");
  app.add_option("--tol", o.tol, "picard tolerance");
  app.add_option("--max-iters", o.max_iters, "picard iteration cap");
  app.add_option("--samples", o.samples, "symbol samples");
  app.add_option("--metric", o.metric, "metric snapshot (initial data / background)");
  app.add_option("--background", o.background, "flow: background snapshot, default flat");
  app.add_option("--init", o.init, "synthetic metric: flat | conformal:A | random:A");
  app.add_option("--in", o.in, "pullback: trajectory directory");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "seed for sampled checks");

  int status = kPass;
  auto bind = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    app.add_subcommand(name, help)->fallthrough()->callback([&, fn] { status = fn(o); });
  };
  bind("curvature", "curvature pack and Bach invariants of a metric", cmd_curvature);
  bind("symbol", "principal symbol sampling and ellipticity", cmd_symbol);
  bind("flow", "IMEX evolution and trajectory export", cmd_flow);
  bind("picard", "Duhamel fixed-point iteration", cmd_picard);
  bind("verify", "invariant suite on a synthetic metric family", cmd_verify);
  bind("pullback", "undo the DeTurck gauge on a stored trajectory", cmd_pullback);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalFailure& e) {
    emit({{"error", "numerical_failure"}, {"message", e.what()}, {"time", e.time()}});
    return kNumeric;
  } catch (const Error& e) {
    emit({{"error", "numerical_failure"}, {"message", e.what()}});
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return status;
}
