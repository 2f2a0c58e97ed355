// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoflow/curvature.hpp"
#include "geoflow/tensor_algebra.hpp"
#include "geoflow/tensor_field.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace geoflow {

// dg/dt = 2 (-1)^{p+1} Δ^p Ric, order 2(p+1).
struct PLapRic {
  int p = 0;
};

// dg/dt = B + (1/12)(Δ S) g in dimension 4, order 4.
struct Obstruction4 {};

using FlowKind = std::variant<PLapRic, Obstruction4>;

// Which metric the Laplacians inside the DeTurck field W use.
enum class WLaplacian { Evolving, Background };

class FlowSpec {
 public:
  FlowSpec(FlowKind kind, MetricField background, bool deturck = true,
           WLaplacian w_laplacian = WLaplacian::Evolving);

  static FlowSpec plap(MetricField background, int p, bool deturck = true);
  static FlowSpec obstruction4(MetricField background, bool deturck = true);

  const FlowKind& kind() const { return kind_; }
  bool is_obstruction() const { return std::holds_alternative<Obstruction4>(kind_); }
  int p() const;  // PLapRic only
  const MetricField& background() const { return conn_->metric(); }
  const Connection& background_connection() const { return *conn_; }
  const Grid& grid() const { return conn_->grid(); }
  bool deturck() const { return deturck_; }
  WLaplacian w_laplacian() const { return w_laplacian_; }

  // Differential order 2m of the flow.
  int order() const;
  // Coefficient c of the flat principal part: the linearization of the
  // adjusted flow at the flat metric is v -> -c (-Δ0)^m v.
  double principal_coefficient() const;
  // "plap:<p>" or "obstruction4".
  std::string name() const;

  FlowSpec with_deturck(bool on) const;
  FlowSpec with_background(MetricField h) const;

 private:
  FlowKind kind_;
  std::shared_ptr<const Connection> conn_;
  bool deturck_;
  WLaplacian w_laplacian_;
};

// Parses "plap:<p>" (also "plap<p>") or "obstruction4".
FlowKind parse_flow_kind(const std::string& text);

enum class WSource { V, PLapW, ObstructionW };

struct VectorFieldW {
  TensorField w;  // rank (1,0)
  WSource source = WSource::V;
};

TensorField plapric_rhs(const MetricField& g, int p);
TensorField plapric_rhs(const Connection& conn, int p);

// 1 / (2^{n/2-1} (n/2-2)! (n-2)(n-1)); n even, n >= 4.
double cn(int n);

TensorField obstruction_rhs(const MetricField& g);
TensorField obstruction_rhs(const Connection& conn);

// Unadjusted right-hand side T(g) of the flow.
TensorField flow_rhs(const MetricField& g, const FlowSpec& spec);

// V^k = g^pq (Γ^k_pq(g) - Γ^k_pq(h)).
VectorFieldW deturck_V(const MetricField& g, const MetricField& h);
VectorFieldW deturck_V(const Connection& g, const Connection& h);

// plap:      W = (-1)^p Δ^p V
// obstr4:    W = -(1/4) ΔV + (1/12) (∇S)^♯
VectorFieldW deturck_W(const MetricField& g, const MetricField& h, const FlowSpec& spec);
VectorFieldW deturck_W(const Connection& g, const FlowSpec& spec);

// (L_W g)_ij = W^k ∂_k g_ij + g_kj ∂_i W^k + g_ik ∂_j W^k.
TensorField lie_derivative_metric(const VectorFieldW& w, const MetricField& g);
TensorField lie_derivative_metric(const TensorField& w, const MetricField& g);

// T(g) + L_W g when spec.deturck() is set, T(g) otherwise.
TensorField adjusted_rhs(const MetricField& g, const FlowSpec& spec);

// Pull-back of a covariant tensor field along f(x) = x + d(x); d is a
// rank-(1,0) displacement field on the same grid. Values at f(x) come from a
// periodic spline. Throws DiffeomorphismError where det Df <= 0.
TensorField pull_back(const TensorField& t, const TensorField& displacement);
MetricField pull_back(const MetricField& g, const TensorField& displacement);

// Jacobian matrix field (Df)^a_i = δ^a_i + ∂_i d^a, slots (Up, Down).
TensorField displacement_jacobian(const TensorField& displacement);

using NaturalOperator = std::function<TensorField(const MetricField&)>;

// ‖T(f*g) - f*(T(g))‖_∞ for f(x) = x + d(x).
double naturality_check(const NaturalOperator& op, const MetricField& g,
                        const TensorField& displacement);

// ρ(t) = exp(-(1/2) ∫_0^t φ) with φ = c_n (-1)^{n/2} Δ^{n/2-1} S, by the
// trapezoid rule over the stored times. One array per stored time.
std::vector<Eigen::ArrayXd> conformal_rho(const std::vector<double>& times,
                                          const std::vector<MetricField>& path, int n = 4);

}  // namespace geoflow
