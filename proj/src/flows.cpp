// SPDX-License-Identifier: Apache-2.0
#include "geoflow/flows.hpp"

#include "geoflow/differentiate.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/interpolate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace geoflow {

namespace {

double sign_pow(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

TensorField scalar_times_metric(const Eigen::ArrayXd& s, const MetricField& g) {
  TensorField out = g.value();
  out.scale_by(s);
  return out;
}

// T(g) for the obstruction flow, reusing the curvature pack for W.
TensorField obstruction_from(const Connection& conn, CurvaturePack& pack) {
  const MetricField& g = conn.metric();
  if (g.dim() != 4) throw UsageError("obstruction flow needs a 4-dimensional grid");
  pack.schouten = schouten(g, pack);
  pack.weyl = weyl(g, pack);
  TensorField out = bach(conn, pack);
  TensorField ls = laplacian(pack.scalar, conn);
  out.add_scaled(cn(4), scalar_times_metric(ls.values(), g));
  out.set_symmetry(Symmetry::Symmetric);
  return out;
}

VectorFieldW w_from(const Connection& conn, const FlowSpec& spec, const CurvaturePack* pack) {
  require_same_lattice(conn.grid(), spec.grid(), "deturck_W");
  const Connection& lap =
      spec.w_laplacian() == WLaplacian::Background ? spec.background_connection() : conn;
  VectorFieldW v = deturck_V(conn, spec.background_connection());
  if (!spec.is_obstruction()) {
    const int p = spec.p();
    TensorField w = laplacian_p(v.w, lap, p);
    w *= sign_pow(p);
    return {std::move(w), p == 0 ? WSource::V : WSource::PLapW};
  }
  // n = 4: c4 (n-1) (-1) Δ V + (c4 (n-2)/2) (∇S)^♯
  TensorField w = laplacian(v.w, lap);
  w *= -3.0 * cn(4);
  const TensorField s = pack != nullptr ? pack->scalar : ricci_scalar(conn).scalar;
  w.add_scaled(cn(4), gradient_sharp(s, conn));
  return {std::move(w), WSource::ObstructionW};
}

template <int N>
double min_det(const TensorField& jac) {
  Eigen::Matrix<double, N, N> m;
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < jac.points(); ++p) {
    for (int a = 0; a < N; ++a) {
      for (int i = 0; i < N; ++i) m(a, i) = jac.data()(p, a * N + i);
    }
    lo = std::min(lo, m.determinant());
  }
  return lo;
}

double jacobian_min_det(const TensorField& jac) {
  switch (jac.dim()) {
    case 1:
      return jac.data().col(0).minCoeff();
    case 2:
      return min_det<2>(jac);
    case 3:
      return min_det<3>(jac);
    default:
      return min_det<4>(jac);
  }
}

}  // namespace

FlowSpec::FlowSpec(FlowKind kind, MetricField background, bool deturck, WLaplacian w_laplacian)
    : kind_(kind),
      conn_(std::make_shared<const Connection>(std::move(background))),
      deturck_(deturck),
      w_laplacian_(w_laplacian) {
  if (const auto* pl = std::get_if<PLapRic>(&kind_)) {
    if (pl->p < 0) throw UsageError("plap flow needs p >= 0");
  } else if (grid().dim() != 4) {
    throw UsageError("obstruction4 flow needs a 4-dimensional grid, got " +
                     std::to_string(grid().dim()));
  }
}

FlowSpec FlowSpec::plap(MetricField background, int p, bool deturck) {
  return FlowSpec(PLapRic{p}, std::move(background), deturck);
}

FlowSpec FlowSpec::obstruction4(MetricField background, bool deturck) {
  return FlowSpec(Obstruction4{}, std::move(background), deturck);
}

int FlowSpec::p() const {
  if (const auto* pl = std::get_if<PLapRic>(&kind_)) return pl->p;
  throw UsageError("p() is defined for plap flows only");
}

int FlowSpec::order() const { return is_obstruction() ? 4 : 2 * (p() + 1); }

double FlowSpec::principal_coefficient() const { return is_obstruction() ? 0.25 : 1.0; }

std::string FlowSpec::name() const {
  return is_obstruction() ? "obstruction4" : "plap:" + std::to_string(p());
}

FlowSpec FlowSpec::with_deturck(bool on) const {
  FlowSpec out = *this;
  out.deturck_ = on;
  return out;
}

FlowSpec FlowSpec::with_background(MetricField h) const {
  return FlowSpec(kind_, std::move(h), deturck_, w_laplacian_);
}

FlowKind parse_flow_kind(const std::string& text) {
  if (text == "obstruction4") return Obstruction4{};
  std::string rest;
  if (text.rfind("plap:", 0) == 0) {
    rest = text.substr(5);
  } else if (text.rfind("plap", 0) == 0) {
    rest = text.substr(4);
  }
  if (!rest.empty() && rest.find_first_not_of("0123456789") == std::string::npos) {
    return PLapRic{std::stoi(rest)};
  }
  throw UsageError("unknown flow '" + text + "' (expected plap:<p> or obstruction4)");
}

TensorField plapric_rhs(const Connection& conn, int p) {
  if (p < 0) throw UsageError("plapric_rhs: p must be >= 0");
  TensorField out = laplacian_p(ricci_scalar(conn).ricci, conn, p);
  out *= 2.0 * sign_pow(p + 1);
  return out;
}

TensorField plapric_rhs(const MetricField& g, int p) { return plapric_rhs(Connection(g), p); }

double cn(int n) {
  if (n < 4 || n % 2 != 0) {
    throw UsageError("cn: n must be even and >= 4, got " + std::to_string(n));
  }
  double fact = 1.0;
  for (int i = 2; i <= n / 2 - 2; ++i) fact *= i;
  return 1.0 / (std::ldexp(1.0, n / 2 - 1) * fact * (n - 2) * (n - 1));
}

TensorField obstruction_rhs(const Connection& conn) {
  CurvaturePack pack = riemann_ricci_scalar(conn);
  return obstruction_from(conn, pack);
}

TensorField obstruction_rhs(const MetricField& g) {
  if (g.dim() != 4) throw UsageError("obstruction_rhs: needs a 4-dimensional grid");
  return obstruction_rhs(Connection(g));
}

TensorField flow_rhs(const MetricField& g, const FlowSpec& spec) {
  require_same_lattice(g.grid(), spec.grid(), "flow_rhs");
  Connection conn(g);
  if (spec.is_obstruction()) return obstruction_rhs(conn);
  return plapric_rhs(conn, spec.p());
}

VectorFieldW deturck_V(const Connection& g, const Connection& h) {
  require_same_lattice(g.grid(), h.grid(), "deturck_V");
  const int n = g.dim();
  const MetricField& gm = g.metric();
  TensorField v = g.traced();
  for (int k = 0; k < n; ++k) {
    auto o = v.comp(k);
    for (int p = 0; p < n; ++p) {
      o -= gm.inv(p, p) * h.gamma(k, p, p);
      for (int q = p + 1; q < n; ++q) o -= 2.0 * gm.inv(p, q) * h.gamma(k, p, q);
    }
  }
  return {std::move(v), WSource::V};
}

VectorFieldW deturck_V(const MetricField& g, const MetricField& h) {
  require_same_lattice(g.grid(), h.grid(), "deturck_V");
  return deturck_V(Connection(g), Connection(h));
}

VectorFieldW deturck_W(const Connection& g, const FlowSpec& spec) {
  return w_from(g, spec, nullptr);
}

VectorFieldW deturck_W(const MetricField& g, const MetricField& h, const FlowSpec& spec) {
  require_same_lattice(g.grid(), h.grid(), "deturck_W");
  if (&h == &spec.background()) return deturck_W(Connection(g), spec);
  return deturck_W(Connection(g), spec.with_background(h));
}

TensorField lie_derivative_metric(const TensorField& w, const MetricField& g) {
  if (w.rank() != 1 || w.variance(0) != Variance::Up) {
    throw UsageError("lie_derivative_metric: W must be a rank-(1,0) field");
  }
  require_same_lattice(w.grid(), g.grid(), "lie_derivative_metric");
  const int n = g.dim();
  const Grid& grid = g.grid();
  // dw[k][i] = ∂_i W^k
  std::vector<std::vector<Eigen::ArrayXd>> dw(n);
  for (int k = 0; k < n; ++k) {
    ColumnDerivatives d(grid, w.comp(k));
    for (int i = 0; i < n; ++i) dw[k].push_back(d.first(i));
  }
  TensorField out(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid.points());
      ColumnDerivatives dg(grid, g.g(i, j));
      for (int k = 0; k < n; ++k) {
        acc += w.comp(k) * dg.first(k);
        acc += g.g(k, j) * dw[k][i] + g.g(i, k) * dw[k][j];
      }
      out.comp(out.index({i, j})) = acc;
      out.comp(out.index({j, i})) = acc;
    }
  }
  return out;
}

TensorField lie_derivative_metric(const VectorFieldW& w, const MetricField& g) {
  return lie_derivative_metric(w.w, g);
}

TensorField adjusted_rhs(const MetricField& g, const FlowSpec& spec) {
  require_same_lattice(g.grid(), spec.grid(), "adjusted_rhs");
  Connection conn(g);
  TensorField out;
  CurvaturePack pack;
  if (spec.is_obstruction()) {
    pack = riemann_ricci_scalar(conn);
    out = obstruction_from(conn, pack);
  } else {
    out = plapric_rhs(conn, spec.p());
  }
  if (!spec.deturck()) return out;
  const VectorFieldW w = w_from(conn, spec, spec.is_obstruction() ? &pack : nullptr);
  out += lie_derivative_metric(w, g);
  out.set_symmetry(Symmetry::Symmetric);
  return out;
}

TensorField displacement_jacobian(const TensorField& d) {
  if (d.rank() != 1 || d.variance(0) != Variance::Up) {
    throw UsageError("displacement must be a rank-(1,0) field");
  }
  const int n = d.dim();
  TensorField jac(d.grid(), {Variance::Up, Variance::Down});
  for (int a = 0; a < n; ++a) {
    ColumnDerivatives dd(d.grid(), d.comp(a));
    for (int i = 0; i < n; ++i) {
      jac.comp(jac.index({a, i})) = dd.first(i);
      if (a == i) jac.comp(jac.index({a, i})) += 1.0;
    }
  }
  return jac;
}

TensorField pull_back(const TensorField& t, const TensorField& displacement) {
  require_same_lattice(t.grid(), displacement.grid(), "pull_back");
  if (t.rank() > 2 || t.contravariant() != 0) {
    throw UsageError("pull_back: needs a covariant tensor of rank <= 2");
  }
  const Grid& grid = t.grid();
  const int n = grid.dim();
  const TensorField jac = displacement_jacobian(displacement);
  const double lo = jacobian_min_det(jac);
  if (!(lo > 0.0)) {
    throw DiffeomorphismError("displacement is not a local diffeomorphism (min det Df = " +
                              std::to_string(lo) + ")");
  }

  Eigen::ArrayXXd where(grid.points(), n);
  for (int a = 0; a < n; ++a) where.col(a) = grid.coordinate(a) + displacement.comp(a);
  const Eigen::ArrayXXd vals = interpolate(t, where);  // points x components

  TensorField out(grid, t.slots(), t.rank() == 2 && t.symmetric() ? Symmetry::Symmetric
                                                                  : Symmetry::None);
  if (t.rank() == 0) {
    out.values() = vals.col(0);
    return out;
  }
  auto J = [&](int a, int i) { return jac.comp(jac.index({a, i})); };
  if (t.rank() == 1) {
    for (int i = 0; i < n; ++i) {
      auto o = out.comp(i);
      for (int a = 0; a < n; ++a) o += J(a, i) * vals.col(a);
    }
    return out;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = t.symmetric() ? i : 0; j < n; ++j) {
      Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid.points());
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) acc += J(a, i) * J(b, j) * vals.col(t.index({a, b}));
      }
      out.comp(out.index({i, j})) = acc;
      if (t.symmetric()) out.comp(out.index({j, i})) = acc;
    }
  }
  return out;
}

MetricField pull_back(const MetricField& g, const TensorField& displacement) {
  return MetricField(pull_back(g.value(), displacement));
}

double naturality_check(const NaturalOperator& op, const MetricField& g,
                        const TensorField& displacement) {
  const TensorField lhs = op(pull_back(g, displacement));
  const TensorField rhs = pull_back(op(g), displacement);
  return max_abs_difference(lhs, rhs);
}

std::vector<Eigen::ArrayXd> conformal_rho(const std::vector<double>& times,
                                          const std::vector<MetricField>& path, int n) {
  if (path.empty()) throw UsageError("conformal_rho: empty trajectory");
  if (times.size() != path.size()) {
    throw UsageError("conformal_rho: times and metrics differ in length");
  }
  const double c = cn(n) * sign_pow(n / 2);
  std::vector<Eigen::ArrayXd> phi;
  phi.reserve(path.size());
  for (const MetricField& g : path) {
    Connection conn(g);
    TensorField s = ricci_scalar(conn).scalar;
    phi.push_back(c * laplacian_p(s, conn, n / 2 - 1).values());
  }
  std::vector<Eigen::ArrayXd> rho;
  rho.reserve(path.size());
  Eigen::ArrayXd integral = Eigen::ArrayXd::Zero(path.front().grid().points());
  rho.push_back(Eigen::ArrayXd::Ones(integral.size()));
  for (std::size_t i = 1; i < path.size(); ++i) {
    integral += 0.5 * (times[i] - times[i - 1]) * (phi[i] + phi[i - 1]);
    rho.push_back((-0.5 * integral).exp());
  }
  return rho;
}

}  // namespace geoflow
