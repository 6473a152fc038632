#include "rjko/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <string>

#include "rjko/density.hpp"
#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kQuadTol = 1e-10;

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, kQuadTol, &err);
}

// Endpoint singularities (integrable, e.g. |r - 1|^(alpha - 1)).
double integrate_singular(const std::function<double(double)>& f, double a, double b) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  auto g = [&f](double t) { return f(t); };
  return rule.integrate(g, a, b, kQuadTol);
}

double xlogx(double u) { return u > 0.0 ? u * std::log(u) : 0.0; }

CostIntegrand power_cost(const ReactionPreset& p, const ScalarField& V) {
  CostIntegrand c;
  c.e = [p, V](double z, double x) {
    const double W = p.W(x), Q = p.Q(x), b1 = 1.0 + p.beta(x);
    if (z < -Q) return kInfiniteCost;
    const double u = z + Q;
    // (z+Q) log r1 written through u log u so that z = -Q is the exact liminf.
    const double u_log_r1 = (xlogx(u) - u * std::log(W)) / b1;
    const double log_r0 = std::log(Q / W) / b1;
    return V(x) * z + u_log_r1 - z / b1 - Q * log_r0;
  };
  c.e_prime = [p, V](double z, double x) {
    const double u = (z + p.Q(x)) / p.W(x);
    if (u <= 0.0) return -kInfiniteCost;
    return std::log(u) / (1.0 + p.beta(x)) + V(x);
  };
  return c;
}

CostIntegrand log_cost(const ReactionPreset& p, const ScalarField& V) {
  CostIntegrand c;
  c.e = [p, V](double z, double x) {
    const double W = p.W(x), Q = p.Q(x);
    const double l1 = (z + Q) / W, l0 = Q / W;
    return (l1 + V(x)) * z - 0.5 * W * (l1 * l1 - l0 * l0) + Q * (l1 - l0);
  };
  c.e_prime = [p, V](double z, double x) { return (z + p.Q(x)) / p.W(x) + V(x); };
  return c;
}

// With s = (F'(r) + Q)/W the defining integral becomes W * int log r(s) ds,
// r(s) = 1 + sign(s)|s|^(1/alpha). The integrand is smooth away from s = 0.
CostIntegrand signed_power_cost(const ReactionPreset& p, const ScalarField& V) {
  CostIntegrand c;
  c.e = [p, V](double z, double x) {
    const double W = p.W(x), Q = p.Q(x), inv_a = 1.0 / p.alpha(x);
    if (z < -W - Q) return kInfiniteCost;
    const double s0 = Q / W, s1 = (z + Q) / W;
    auto f = [inv_a](double s) {
      return std::log1p(std::copysign(std::pow(std::abs(s), inv_a), s));
    };
    double acc = 0.0;
    if (s0 > 0.0 && s1 < 0.0) {
      acc = integrate(f, s0, 0.0) + integrate(f, 0.0, s1);
    } else {
      acc = integrate(f, s0, s1);
    }
    return V(x) * z + W * acc;
  };
  c.e_prime = [p, V](double z, double x) {
    const double u = (z + p.Q(x)) / p.W(x);
    if (u <= -1.0) return -kInfiniteCost;
    return std::log1p(std::copysign(std::pow(std::abs(u), 1.0 / p.alpha(x)), u)) + V(x);
  };
  return c;
}

}  // namespace

ScalarField ScalarField::affine(Affine a) {
  return {[a](double x) { return a(x); }, [a](double) { return a.c1; }};
}

double ModelSpec::m_prime(double p, double x) const {
  if (cost.m_prime) return cost.m_prime(p, x);
  const double h = 1e-6 * (1.0 + std::abs(p));
  return (cost.m(p + h, x) - cost.m(p - h, x)) / (2.0 * h);
}

double ModelSpec::psi_at(double x) const {
  const double t = (x - x_lo) / (x_hi - x_lo);
  return (1.0 - t) * psi.lower + t * psi.upper;
}

double e_by_quadrature(const ReactionSpec& reaction, const ScalarField& V, double z, double x) {
  const double lower = reaction.inf_F_prime ? reaction.inf_F_prime(x) : -kInfiniteCost;
  if (z < lower) return kInfiniteCost;
  const double r0 = invert_F_prime(reaction, 0.0, x);
  const double r1 = z > lower ? invert_F_prime(reaction, z, x) : 0.0;
  const double v = V(x);
  auto f = [&](double r) { return (std::log(r) + v) * reaction.F_double_prime(r, x); };
  // F'' may be singular at interior points (signed-power at r = 1); splitting
  // there leaves endpoint singularities for the double-exponential rule.
  const double lo = std::min(r0, r1), hi = std::max(r0, r1);
  double acc = 0.0;
  if (reaction.F_double_prime && !std::isfinite(reaction.F_double_prime(1.0, x)) && lo < 1.0 &&
      hi > 1.0) {
    acc = integrate_singular(f, lo, 1.0) + integrate_singular(f, 1.0, hi);
  } else {
    acc = integrate(f, lo, hi);
  }
  return r1 >= r0 ? acc : -acc;
}

CostIntegrand build_e_from_reaction(const ReactionSpec& reaction, const ScalarField& V) {
  if (!reaction.F_prime || !reaction.F_double_prime) {
    throw InvalidArgument("reaction needs F' and F''");
  }
  // [F']^{-1}(0) must exist inside (0, inf).
  const double lower0 = reaction.inf_F_prime ? reaction.inf_F_prime(0.0) : -kInfiniteCost;
  if (!(lower0 < 0.0)) {
    throw InvalidArgument("reaction '" + reaction.label +
                          "' has no zero crossing: [F']^{-1}(0) is undefined");
  }
  CostIntegrand c;
  if (reaction.preset) {
    const ReactionPreset& p = *reaction.preset;
    switch (p.kind) {
      case ReactionKind::Power:
        c = power_cost(p, V);
        break;
      case ReactionKind::Log:
        c = log_cost(p, V);
        break;
      case ReactionKind::SignedPower:
        c = signed_power_cost(p, V);
        break;
    }
  } else {
    c.e = [reaction, V](double z, double x) { return e_by_quadrature(reaction, V, z, x); };
    c.e_prime = [reaction, V](double z, double x) {
      const double lower = reaction.inf_F_prime ? reaction.inf_F_prime(x) : -kInfiniteCost;
      if (z <= lower) return -kInfiniteCost;
      return std::log(invert_F_prime(reaction, z, x)) + V(x);
    };
  }
  c.m = [reaction, V](double p, double x) { return reaction.F_prime(std::exp(p - V(x)), x); };
  c.m_prime = [reaction, V](double p, double x) {
    const double r = std::exp(p - V(x));
    const double d = reaction.F_double_prime(r, x) * r;
    return std::isfinite(d) ? std::min(d, 1e12) : 1e12;
  };
  c.domain_lower = [reaction](double x) {
    return reaction.inf_F_prime ? reaction.inf_F_prime(x) : -kInfiniteCost;
  };
  return c;
}

BoundaryValues psi_from_dirichlet(BoundaryValues rho_D, BoundaryValues V_at_boundary) {
  if (!(rho_D.lower > 0.0) || !(rho_D.upper > 0.0)) {
    throw InvalidArgument("(B3) Dirichlet data must be strictly positive");
  }
  return {std::log(rho_D.lower) + V_at_boundary.lower, std::log(rho_D.upper) + V_at_boundary.upper};
}

ModelSpec make_reaction_model(double x_lo, double x_hi, const ScalarField& V, BoundaryValues rho_D,
                              const ReactionSpec& reaction) {
  ModelSpec s;
  s.x_lo = x_lo;
  s.x_hi = x_hi;
  s.V = V;
  s.rho_D = rho_D;
  s.psi = psi_from_dirichlet(rho_D, {V(x_lo), V(x_hi)});
  s.reaction = reaction;
  s.cost = build_e_from_reaction(reaction, V);
  return s;
}

ModelSpec make_custom_model(double x_lo, double x_hi, const ScalarField& V, BoundaryValues psi,
                            CostIntegrand cost) {
  ModelSpec s;
  s.x_lo = x_lo;
  s.x_hi = x_hi;
  s.V = V;
  s.psi = psi;
  s.rho_D = {std::exp(psi.lower - V(x_lo)), std::exp(psi.upper - V(x_hi))};
  s.cost = std::move(cost);
  return s;
}

double e_prime_inverse(const ModelSpec& spec, double p, double x) { return spec.m(p, x); }

double entropy_density(double z, double v) {
  if (z < 0.0) throw InvalidArgument("negative density in entropy");
  return xlogx(z) - z + v * z + 1.0;
}

double entropy_eval(const ModelSpec& spec, const Grid& g, const Density& rho) {
  if (rho.size() != g.n_cells()) throw InvalidArgument("density does not match grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    acc += entropy_density(rho.density(i), spec.V(g.center(i))) * g.dx();
  }
  return acc;
}

}  // namespace rjko
