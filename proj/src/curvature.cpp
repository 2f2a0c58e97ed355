// SPDX-License-Identifier: Apache-2.0
#include "geoflow/curvature.hpp"

#include "geoflow/differentiate.hpp"
#include "geoflow/errors.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace geoflow {

namespace {

using Index = Eigen::Index;
using IdxArray = std::array<int, 8>;

// Canonical components of t and, for each, the full components it represents.
struct Orbits {
  std::vector<Index> canon;
  std::vector<std::vector<std::pair<Index, int>>> members;
};

Orbits orbits_of(const TensorField& t) {
  Orbits o;
  std::vector<Index> slot_of(t.components(), -1);
  for (Index c = 0; c < t.components(); ++c) {
    const CanonicalComponent cc = t.canonical(c);
    if (cc.sign == 0) continue;
    if (slot_of[cc.index] < 0) {
      slot_of[cc.index] = static_cast<Index>(o.canon.size());
      o.canon.push_back(cc.index);
      o.members.emplace_back();
    }
    o.members[slot_of[cc.index]].push_back({c, cc.sign});
  }
  return o;
}

Index component_of(const TensorField& t, const IdxArray& idx) {
  return t.index(std::span<const int>(idx.data(), t.rank()));
}

// Fills non-canonical components from canonical ones.
void fill_from_canonical(TensorField& t) {
  for (Index c = 0; c < t.components(); ++c) {
    const CanonicalComponent cc = t.canonical(c);
    if (cc.index == c) continue;
    if (cc.sign == 0) {
      t.comp(c).setZero();
    } else {
      t.comp(c) = cc.sign * t.comp(cc.index);
    }
  }
}

Eigen::ArrayXd zeros(const Grid& g) { return Eigen::ArrayXd::Zero(g.points()); }

}  // namespace

Connection::Connection(const MetricField& g) : g_(g) {
  const Grid& grid = g.grid();
  const int n = g.dim();
  const std::vector<Variance> udd{Variance::Up, Variance::Down, Variance::Down};
  const std::vector<Variance> ddd(3, Variance::Down);

  // dg[a][i][j] = ∂_a g_ij
  std::vector<Eigen::ArrayXd> dg(n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      ColumnDerivatives d(grid, g.g(i, j));
      for (int a = 0; a < n; ++a) {
        dg[(a * n + i) * n + j] = d.first(a);
        if (i != j) dg[(a * n + j) * n + i] = dg[(a * n + i) * n + j];
      }
    }
  }
  auto D = [&](int a, int i, int j) -> const Eigen::ArrayXd& { return dg[(a * n + i) * n + j]; };

  gamma_low_ = TensorField(grid, ddd, Symmetry::LastPairSymmetric);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        gamma_low_.comp(gamma_low_.index({k, i, j})) =
            0.5 * (D(i, k, j) + D(j, k, i) - D(k, i, j));
      }
    }
  }
  fill_from_canonical(gamma_low_);

  gamma_ = TensorField(grid, udd, Symmetry::LastPairSymmetric);
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        auto out = gamma_.comp(gamma_.index({m, i, j}));
        for (int k = 0; k < n; ++k) out += g.inv(m, k) * gamma_low_.comp(gamma_low_.index({k, i, j}));
      }
    }
  }
  fill_from_canonical(gamma_);

  gup_ = TensorField(grid, {Variance::Up, Variance::Up, Variance::Down});
  for (int b = 0; b < n; ++b) {
    for (int m = 0; m < n; ++m) {
      for (int i = 0; i < n; ++i) {
        auto out = gup_.comp(gup_.index({b, m, i}));
        for (int a = 0; a < n; ++a) out += g.inv(a, b) * gamma(m, a, i);
      }
    }
  }

  gtr_ = TensorField(grid, {Variance::Up});
  for (int m = 0; m < n; ++m) {
    auto out = gtr_.comp(m);
    for (int b = 0; b < n; ++b) out += gup_.comp(gup_.index({b, m, b}));
  }
}

TensorField christoffel(const MetricField& g) { return Connection(g).christoffel(); }

TensorField difference_tensor(const MetricField& g, const MetricField& h) {
  require_same_lattice(g.grid(), h.grid(), "difference_tensor");
  TensorField a = christoffel(g);
  a -= christoffel(h);
  a.set_symmetry(Symmetry::LastPairSymmetric);
  return a;
}

CurvaturePack riemann_ricci_scalar(const Connection& conn) {
  const MetricField& g = conn.metric();
  const Grid& grid = g.grid();
  const int n = g.dim();
  const int np = packed_size(n);

  // d2[packed(a,b)][packed(i,j)] = ∂_a∂_b g_ij
  std::vector<Eigen::ArrayXd> d2(np * np);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      ColumnDerivatives d(grid, g.g(i, j));
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          d2[packed_index(a, b, n) * np + packed_index(i, j, n)] = d.second(a, b);
        }
      }
    }
  }
  auto D2 = [&](int a, int b, int i, int j) -> const Eigen::ArrayXd& {
    return d2[packed_index(a, b, n) * np + packed_index(i, j, n)];
  };
  const TensorField& gl = conn.lowered();
  auto GL = [&](int m, int i, int j) { return gl.comp(gl.index({m, i, j})); };

  CurvaturePack pack;
  TensorField& R = pack.riemann;
  R = TensorField(grid, std::vector<Variance>(4, Variance::Down), Symmetry::Curvature);
  for (Index c = 0; c < R.components(); ++c) {
    const CanonicalComponent cc = R.canonical(c);
    if (cc.sign == 0 || cc.index != c) continue;
    IdxArray idx{};
    R.unravel(c, idx);
    const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    Eigen::ArrayXd r = 0.5 * (D2(i, k, j, l) - D2(i, l, j, k) - D2(j, k, i, l) + D2(j, l, i, k));
    for (int m = 0; m < n; ++m) {
      r += GL(m, j, l) * conn.gamma(m, i, k) - GL(m, i, l) * conn.gamma(m, j, k);
    }
    R.comp(c) = r;
  }
  fill_from_canonical(R);

  pack.ricci = TensorField(grid, {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      Eigen::ArrayXd s = zeros(grid);
      for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) {
          if (i == j || k == l) continue;  // R_iikl, R_ijkk vanish
          s += g.inv(i, l) * R.comp(R.index({i, j, k, l}));
        }
      }
      pack.ricci.comp(pack.ricci.index({j, k})) = s;
      pack.ricci.comp(pack.ricci.index({k, j})) = s;
    }
  }
  pack.scalar = trace(pack.ricci, g);
  return pack;
}

CurvaturePack riemann_ricci_scalar(const MetricField& g) {
  return riemann_ricci_scalar(Connection(g));
}

CurvaturePack ricci_scalar(const Connection& conn) {
  CurvaturePack pack = riemann_ricci_scalar(conn);
  pack.riemann = TensorField();
  return pack;
}

namespace {

TensorField schouten_with(const MetricField& g, const CurvaturePack& pack, int n) {
  TensorField p = pack.ricci;
  TensorField sg = g.value();
  sg.scale_by(pack.scalar.values() / (2.0 * (n - 1)));
  p -= sg;
  p *= 1.0 / (n - 2);
  p.set_symmetry(Symmetry::Symmetric);
  return p;
}

}  // namespace

TensorField schouten(const MetricField& g, const CurvaturePack& pack) {
  if (g.dim() < 3) throw UsageError("schouten: needs dimension >= 3");
  return schouten_with(g, pack, g.dim());
}

TensorField kulkarni_nomizu(const TensorField& a, const TensorField& b) {
  require_same_lattice(a.grid(), b.grid(), "kulkarni_nomizu");
  const int n = a.dim();
  TensorField out(a.grid(), std::vector<Variance>(4, Variance::Down), Symmetry::Curvature);
  auto A = [&](int i, int j) { return a.comp(a.index({i, j})); };
  auto B = [&](int i, int j) { return b.comp(b.index({i, j})); };
  for (Index c = 0; c < out.components(); ++c) {
    const CanonicalComponent cc = out.canonical(c);
    if (cc.sign == 0 || cc.index != c) continue;
    IdxArray idx{};
    out.unravel(c, idx);
    const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    out.comp(c) = A(i, l) * B(j, k) + A(j, k) * B(i, l) - A(i, k) * B(j, l) - A(j, l) * B(i, k);
  }
  (void)n;
  fill_from_canonical(out);
  return out;
}

TensorField weyl(const MetricField& g, const CurvaturePack& pack) {
  if (g.dim() < 4) throw UsageError("weyl: needs dimension >= 4");
  const TensorField& p =
      pack.schouten.rank() == 2 ? pack.schouten : schouten(g, pack);
  TensorField w = pack.riemann;
  w -= kulkarni_nomizu(p, g.value());
  w.set_symmetry(Symmetry::Curvature);
  fill_from_canonical(w);
  return w;
}

TensorField covariant_derivative(const TensorField& t, const Connection& conn) {
  require_same_lattice(t.grid(), conn.grid(), "covariant_derivative");
  t.require_finite("covariant_derivative");
  const int n = t.dim();
  const int r = t.rank();
  std::vector<Variance> slots{Variance::Down};
  slots.insert(slots.end(), t.slots().begin(), t.slots().end());
  TensorField out(t.grid(), slots);
  const Index block = t.components();
  const Orbits orb = orbits_of(t);
  for (std::size_t q = 0; q < orb.canon.size(); ++q) {
    const Index c = orb.canon[q];
    ColumnDerivatives d(t.grid(), t.comp(c));
    IdxArray idx{};
    t.unravel(c, idx);
    IdxArray moved = idx;
    for (int a = 0; a < n; ++a) {
      auto o = out.comp(a * block + c);
      o = d.first(a);
      for (int s = 0; s < r; ++s) {
        for (int m = 0; m < n; ++m) {
          moved[s] = m;
          const auto tm = t.comp(component_of(t, moved));
          if (t.variance(s) == Variance::Up) {
            o += conn.gamma(idx[s], a, m) * tm;
          } else {
            o -= conn.gamma(m, a, idx[s]) * tm;
          }
        }
        moved[s] = idx[s];
      }
    }
    for (const auto& [member, sign] : orb.members[q]) {
      if (member == c) continue;
      for (int a = 0; a < n; ++a) out.comp(a * block + member) = sign * out.comp(a * block + c);
    }
  }
  if (t.symmetric()) out.set_symmetry(Symmetry::LastPairSymmetric);
  return out;
}

TensorField covariant_derivative(const TensorField& t, const MetricField& g) {
  return covariant_derivative(t, Connection(g));
}

TensorField divergence(const TensorField& t, int slot, const Connection& conn) {
  require_same_lattice(t.grid(), conn.grid(), "divergence");
  t.require_finite("divergence");
  const int n = t.dim();
  const int r = t.rank();
  if (slot < 0 || slot >= r) throw UsageError("divergence: slot out of range");
  const bool down = t.variance(slot) == Variance::Down;
  const MetricField& g = conn.metric();
  const TensorField& gup = conn.raised_first();

  std::vector<Variance> slots;
  for (int s = 0; s < r; ++s) {
    if (s != slot) slots.push_back(t.variance(s));
  }
  TensorField out(t.grid(), slots);
  auto out_index = [&](const IdxArray& full) {
    IdxArray rest{};
    for (int s = 0, k = 0; s < r; ++s) {
      if (s != slot) rest[k++] = full[s];
    }
    return out.index(std::span<const int>(rest.data(), r - 1));
  };

  // derivative term, one canonical component at a time
  const Orbits orb = orbits_of(t);
  std::vector<Eigen::ArrayXd> grad(n);
  std::vector<Eigen::ArrayXd> raised(n);
  for (std::size_t q = 0; q < orb.canon.size(); ++q) {
    ColumnDerivatives d(t.grid(), t.comp(orb.canon[q]));
    for (int a = 0; a < n; ++a) grad[a] = d.first(a);
    for (int b = 0; b < n; ++b) {
      if (!down) {
        raised[b] = grad[b];
        continue;
      }
      raised[b] = g.inv(0, b) * grad[0];
      for (int a = 1; a < n; ++a) raised[b] += g.inv(a, b) * grad[a];
    }
    for (const auto& [member, sign] : orb.members[q]) {
      IdxArray idx{};
      t.unravel(member, idx);
      auto o = out.comp(out_index(idx));
      if (sign > 0) {
        o += raised[idx[slot]];
      } else {
        o -= raised[idx[slot]];
      }
    }
  }

  // Γ^a_am, needed for contravariant divergence slots
  std::vector<Eigen::ArrayXd> contracted;
  if (!down) {
    for (int m = 0; m < n; ++m) {
      Eigen::ArrayXd s = zeros(t.grid());
      for (int a = 0; a < n; ++a) s += conn.gamma(a, a, m);
      contracted.push_back(std::move(s));
    }
  }

  // connection terms
  for (Index o = 0; o < out.components(); ++o) {
    IdxArray rest{};
    out.unravel(o, rest);
    IdxArray full{};
    for (int s = 0, k = 0; s < r; ++s) {
      if (s != slot) full[s] = rest[k++];
    }
    auto acc = out.comp(o);
    for (int m = 0; m < n; ++m) {
      full[slot] = m;
      const auto tm = t.comp(component_of(t, full));
      if (down) {
        acc -= conn.traced().comp(m) * tm;
      } else {
        acc += contracted[m] * tm;
      }
    }
    for (int s = 0; s < r; ++s) {
      if (s == slot) continue;
      const int is = full[s];
      for (int b = 0; b < n; ++b) {
        full[slot] = b;
        for (int m = 0; m < n; ++m) {
          full[s] = m;
          const auto tm = t.comp(component_of(t, full));
          if (down) {
            if (t.variance(s) == Variance::Down) {
              acc -= gup.comp(gup.index({b, m, is})) * tm;
            } else {
              acc += gup.comp(gup.index({b, is, m})) * tm;
            }
          } else {
            if (t.variance(s) == Variance::Down) {
              acc -= conn.gamma(m, b, is) * tm;
            } else {
              acc += conn.gamma(is, b, m) * tm;
            }
          }
        }
        full[s] = is;
      }
    }
  }
  return out;
}

TensorField hessian(const TensorField& u, const Connection& conn) {
  if (u.rank() != 0) throw UsageError("hessian: needs a scalar field");
  require_same_lattice(u.grid(), conn.grid(), "hessian");
  const int n = u.dim();
  ColumnDerivatives d(u.grid(), u.values());
  std::vector<Eigen::ArrayXd> du(n);
  for (int m = 0; m < n; ++m) du[m] = d.first(m);
  TensorField out(u.grid(), {Variance::Down, Variance::Down}, Symmetry::Symmetric);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      Eigen::ArrayXd h = d.second(a, b);
      for (int m = 0; m < n; ++m) h -= conn.gamma(m, a, b) * du[m];
      out.comp(out.index({a, b})) = h;
      out.comp(out.index({b, a})) = h;
    }
  }
  return out;
}

TensorField laplacian(const TensorField& t, const Connection& conn) {
  if (t.rank() == 0) {
    TensorField h = hessian(t, conn);
    return trace(h, conn.metric());
  }
  TensorField out = divergence(covariant_derivative(t, conn), 0, conn);
  if (t.symmetric()) return symmetrize(out);
  return out;
}

TensorField laplacian_p(const TensorField& t, const Connection& conn, int p) {
  if (p < 0) throw UsageError("laplacian_p: p must be >= 0");
  TensorField out = t;
  for (int i = 0; i < p; ++i) out = laplacian(out, conn);
  return out;
}

TensorField laplacian_p(const TensorField& t, const MetricField& g, int p) {
  if (p == 0) return t;
  return laplacian_p(t, Connection(g), p);
}

TensorField gradient_sharp(const TensorField& u, const Connection& conn) {
  if (u.rank() != 0) throw UsageError("gradient_sharp: needs a scalar field");
  const int n = u.dim();
  ColumnDerivatives d(u.grid(), u.values());
  std::vector<Eigen::ArrayXd> du(n);
  for (int m = 0; m < n; ++m) du[m] = d.first(m);
  TensorField out(u.grid(), {Variance::Up});
  for (int a = 0; a < n; ++a) {
    auto o = out.comp(a);
    for (int b = 0; b < n; ++b) o += conn.metric().inv(a, b) * du[b];
  }
  return out;
}

TensorField bach(const Connection& conn, const CurvaturePack& pack) {
  const MetricField& g = conn.metric();
  if (g.dim() != 4) throw UsageError("bach: implemented for dimension 4 only");
  const int n = 4;
  const TensorField p = pack.schouten.rank() == 2 ? pack.schouten : schouten(g, pack);
  const TensorField w = pack.weyl.rank() == 4 ? pack.weyl : [&] {
    CurvaturePack withp = pack;
    withp.schouten = p;
    return weyl(g, withp);
  }();

  TensorField y = divergence(w, 3, conn);   // ∇^l W_kijl
  TensorField b = divergence(y, 0, conn);   // ∇^k ∇^l W_kijl

  // P^kl = g^ka g^lb P_ab
  TensorField pu = raise(raise(p, 0, g), 1, g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      auto o = b.comp(b.index({i, j}));
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        for (int l = 0; l < n; ++l) {
          if (j == l) continue;
          o += pu.comp(pu.index({k, l})) * w.comp(w.index({k, i, j, l}));
        }
      }
    }
  }
  return symmetrize(b);
}

TensorField bach(const MetricField& g) {
  if (g.dim() != 4) throw UsageError("bach: implemented for dimension 4 only");
  Connection conn(g);
  CurvaturePack pack = riemann_ricci_scalar(conn);
  pack.schouten = schouten(g, pack);
  pack.weyl = weyl(g, pack);
  return bach(conn, pack);
}

TensorField obstruction_leading(const MetricField& g, int n) {
  if (n < 4 || n % 2 != 0) {
    throw UsageError("obstruction_leading: n must be even and >= 4, got " + std::to_string(n));
  }
  Connection conn(g);
  CurvaturePack pack = ricci_scalar(conn);
  const int half = n / 2;
  TensorField p = schouten_with(g, pack, n);
  TensorField out = laplacian_p(p, conn, half - 1);
  TensorField hs = laplacian_p(hessian(pack.scalar, conn), conn, half - 2);
  out.add_scaled(-1.0 / (2.0 * (n - 1)), hs);
  double norm = 1.0;
  for (int i = 0; i < half - 2; ++i) norm *= -2.0 * (i + 1);  // (-2)^k k!
  out *= 1.0 / norm;
  return symmetrize(out);
}

}  // namespace geoflow
