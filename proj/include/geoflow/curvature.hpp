// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/tensor_algebra.hpp"
#include "geoflow/tensor_field.hpp"

namespace geoflow {

// Levi-Civita connection of a metric, with the contractions the covariant
// derivative and divergence kernels need.
//   christoffel()  Gamma^k_ij           (u,d,d), symmetric in i,j
//   lowered()      Gamma_kij = g_km Gamma^m_ij
//   raised_first() G^{bm}_i = g^{ab} Gamma^m_ai   (u,u,d)
//   traced()       Gamma^m = g^{ab} Gamma^m_ab
class Connection {
 public:
  explicit Connection(const MetricField& g);

  const MetricField& metric() const { return g_; }
  const Grid& grid() const { return g_.grid(); }
  int dim() const { return g_.dim(); }
  const TensorField& christoffel() const { return gamma_; }
  const TensorField& lowered() const { return gamma_low_; }
  const TensorField& raised_first() const { return gup_; }
  const TensorField& traced() const { return gtr_; }

  auto gamma(int k, int i, int j) const {
    return gamma_.comp(gamma_.index({k, i, j}));
  }

 private:
  MetricField g_;
  TensorField gamma_;
  TensorField gamma_low_;
  TensorField gup_;
  TensorField gtr_;
};

TensorField christoffel(const MetricField& g);

// A^k_ij = Gamma^k_ij(g) - Gamma^k_ij(h).
TensorField difference_tensor(const MetricField& g, const MetricField& h);

struct CurvaturePack {
  TensorField riemann;   // R_ijkl, Ric_jk = g^il R_ijkl
  TensorField ricci;
  TensorField scalar;
  TensorField schouten;  // filled for n >= 3 by schouten()
  TensorField weyl;      // filled for n >= 4 by weyl()
};

// Riemann, Ricci and scalar curvature. Sign convention: the round sphere of
// curvature K has R_ijkl = K (g_il g_jk - g_ik g_jl).
CurvaturePack riemann_ricci_scalar(const MetricField& g);
CurvaturePack riemann_ricci_scalar(const Connection& conn);

// Ricci tensor and scalar only (skips the full Riemann tensor).
CurvaturePack ricci_scalar(const Connection& conn);

// P = (Ric - S g / (2(n-1))) / (n-2); n >= 3.
TensorField schouten(const MetricField& g, const CurvaturePack& pack);

// (a ∧ b)_ijkl = a_il b_jk + a_jk b_il - a_ik b_jl - a_jl b_ik.
TensorField kulkarni_nomizu(const TensorField& a, const TensorField& b);

// W = Riem - P ∧ g; n >= 4. pack must hold riemann and schouten.
TensorField weyl(const MetricField& g, const CurvaturePack& pack);

// Full covariant derivative; the new covariant slot comes first.
TensorField covariant_derivative(const TensorField& t, const Connection& conn);
TensorField covariant_derivative(const TensorField& t, const MetricField& g);

// Divergence on one slot: g^{ab} ∇_a T_{..b..} for a covariant slot,
// ∇_a T^{..a..} for a contravariant one.
TensorField divergence(const TensorField& t, int slot, const Connection& conn);

// ∇_a∇_b u of a scalar, symmetric by construction.
TensorField hessian(const TensorField& u, const Connection& conn);

// Rough Laplacian g^{ab}∇_a∇_b, and its p-th iterate (p = 0 is the identity).
TensorField laplacian(const TensorField& t, const Connection& conn);
TensorField laplacian_p(const TensorField& t, const Connection& conn, int p);
TensorField laplacian_p(const TensorField& t, const MetricField& g, int p);

// Gradient vector field (∇u)^♯ of a scalar.
TensorField gradient_sharp(const TensorField& u, const Connection& conn);

// B_ij = ∇^k∇^l W_kijl + P^kl W_kijl; n = 4 only.
TensorField bach(const MetricField& g);
TensorField bach(const Connection& conn, const CurvaturePack& pack);

// (Δ^{n/2-1} P - Δ^{n/2-2}∇²S / (2(n-1))) / ((-2)^{n/2-2} (n/2-2)!), with P
// and S of the grid dimension; n even, n >= 4.
TensorField obstruction_leading(const MetricField& g, int n);

}  // namespace geoflow
