#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "rjko/grid.hpp"
#include "rjko/reaction.hpp"

namespace rjko {

class Density;

/// Returned by e below its domain. Distinct from any finite cost.
inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();
inline bool is_infinite_cost(double v) { return v == kInfiniteCost; }

/// Drift potential (or any smooth scalar field) with its derivative.
struct ScalarField {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  double operator()(double x) const { return value(x); }
  static ScalarField affine(Affine a);
  static ScalarField constant(double c) { return affine({c, 0.0}); }
};

/// The creation cost integrand e_x and the calculus the solvers need.
/// m is [e'_x]^{-1}; m_prime its derivative (may be empty, then finite differences).
struct CostIntegrand {
  std::function<double(double z, double x)> e;
  std::function<double(double z, double x)> e_prime;
  std::function<double(double p, double x)> m;
  std::function<double(double p, double x)> m_prime;
  std::function<double(double x)> domain_lower;  ///< a(x), possibly -inf
};

/// Model data on an interval. psi holds the boundary potential at x_lo / x_hi.
struct ModelSpec {
  double x_lo = 0.0;
  double x_hi = 1.0;
  ScalarField V = ScalarField::constant(0.0);
  BoundaryValues rho_D{1.0, 1.0};
  BoundaryValues psi{0.0, 0.0};
  std::optional<ReactionSpec> reaction;
  CostIntegrand cost;

  double e(double z, double x) const { return cost.e(z, x); }
  double e_prime(double z, double x) const { return cost.e_prime(z, x); }
  double m(double p, double x) const { return cost.m(p, x); }
  double m_prime(double p, double x) const;
  double a(double x) const { return cost.domain_lower ? cost.domain_lower(x) : -kInfiniteCost; }
  double grad_V(double x) const { return V.derivative(x); }
  /// Linear interpolant of the boundary potential on the closed interval.
  double psi_at(double x) const;
  double lip_psi() const { return std::abs(psi.upper - psi.lower) / (x_hi - x_lo); }
};

/// e from a reaction: e(z,x) = int_{[F']^{-1}(0)}^{[F']^{-1}(z)} (log r + V) F''(r) dr.
/// Closed forms for the presets, adaptive Gauss-Kronrod otherwise.
CostIntegrand build_e_from_reaction(const ReactionSpec& reaction, const ScalarField& V);

/// Reference quadrature of the defining integral, bypassing closed forms.
double e_by_quadrature(const ReactionSpec& reaction, const ScalarField& V, double z, double x);

/// Psi(b) = log rho_D(b) + V(b).
BoundaryValues psi_from_dirichlet(BoundaryValues rho_D, BoundaryValues V_at_boundary);

ModelSpec make_reaction_model(double x_lo, double x_hi, const ScalarField& V, BoundaryValues rho_D,
                              const ReactionSpec& reaction);
ModelSpec make_custom_model(double x_lo, double x_hi, const ScalarField& V, BoundaryValues psi,
                            CostIntegrand cost);

double e_prime_inverse(const ModelSpec& spec, double p, double x);
/// Appendix naming of the same map.
inline double m_r(const ModelSpec& spec, double r, double x) { return e_prime_inverse(spec, r, x); }

/// z log z - z + V z + 1, with 0 log 0 = 0.
double entropy_density(double z, double v);
/// Midpoint rule for E(rho).
double entropy_eval(const ModelSpec& spec, const Grid& g, const Density& rho);

}  // namespace rjko
