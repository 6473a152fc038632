#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rjko/brute_force.hpp"
#include "rjko/model.hpp"
#include "rjko/structure_checks.hpp"
#include "rjko/transport.hpp"

using namespace rjko;
using doctest::Approx;

namespace {

ModelSpec linear_model(BoundaryValues rho_D = {1, 1}, ScalarField V = ScalarField::constant(0)) {
  ReactionPreset p;  // F'(r) = r - 1
  return make_reaction_model(0, 1, V, rho_D, make_reaction(p));
}

double off_diagonal_mass(const TransportSolution& s) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < s.gamma.rows(); ++i)
    for (Eigen::Index j = 0; j < s.gamma.cols(); ++j)
      if (i != j) m += s.gamma(i, j);
  return m;
}

}  // namespace

TEST_CASE("fixed target: mu = rho costs nothing") {
  const Grid g(0, 1, 6);
  const auto mu = Density::from_function(g, [](double x) { return 1 + x; });
  const auto s = solve_fixed_target(g, linear_model(), 0.1, mu, mu);
  REQUIRE(s.info.converged);
  CHECK(std::abs(s.primal_value) < 1e-9);
  CHECK(off_diagonal_mass(s) < 1e-9);
  for (double h : s.h) CHECK(std::abs(h) < 1e-7);
}

TEST_CASE("fixed target: a high boundary potential makes entry profitable") {
  // Entry costs |d|^2/2tau - Psi; with Psi = 10 and e unbounded above, importing
  // mass and absorbing it through h > 0 beats the identity plan.
  const Grid g(0, 1, 6);
  const auto spec = linear_model({std::exp(10.0), std::exp(10.0)});
  const auto mu = Density::from_function(g, [](double x) { return 1 + x; });
  const auto s = solve_fixed_target(g, spec, 0.1, mu, mu);
  REQUIRE(s.info.converged);
  CHECK(s.primal_value < 0.0);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(s.h[i] > 0.0);
    // e'(h) = log(1 + h) equals the best entry gain Psi - |d|^2 / 2tau
    const double d = std::min(g.center(i), 1 - g.center(i));
    CHECK(std::log1p(s.h[i]) == Approx(10 - d * d / 0.2).epsilon(1e-9));
  }
}

TEST_CASE("fixed target: single cell stays put") {
  const Grid g(0, 1, 1);
  const auto one = Density::uniform(g, 1.0);
  const auto s = solve_fixed_target(g, linear_model(), 0.1, one, one);
  REQUIRE(s.info.converged);
  CHECK(s.gamma(0, 0) == Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(s.h[0]) < 1e-8);
  CHECK(std::abs(s.primal_value) < 1e-10);
}

TEST_CASE("fixed target n = 2 against brute force") {
  const Grid g(0, 1, 2);
  const auto mu = Density::from_values(g, {2, 0});
  const auto rho = Density::from_values(g, {1, 1});
  const auto r = check_against_brute_force(g, linear_model(), 0.1, mu, &rho);
  CHECK(r.converged);
  CHECK(r.value_error <= 1e-6);
  CHECK(r.h_ok);
  // the empty cell is floored, with a warning
  const auto s = solve_fixed_target(g, linear_model(), 0.1, mu, rho);
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("JKO step: stationary fixed point") {
  const Grid g(0, 1, 8);
  const auto spec = linear_model();
  const auto st = solve_jko_step(g, spec, 0.05, Density::uniform(g, 1.0));
  const auto& s = st.solution;
  REQUIRE(s.info.converged);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(st.rho_tau.density(i) == Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(s.h[i]) < 1e-9);
  }
  CHECK(off_diagonal_mass(s) < 1e-9);
  CHECK(s.info.kkt_residual < 1e-6);

  const auto pr = extract_potentials(s, spec, g, 0.05);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(pr.phi_star[i]) < 1e-6);
  CHECK(std::abs(pr.kappa) < 1e-6);
  CHECK(pr.optimality_residual < 1e-6);
  CHECK(pr.phi[8] == Approx(spec.psi.lower));
  CHECK(pr.phi_star[9] == Approx(-spec.psi.upper));

  const auto d = s.diagnostics;
  CHECK(d.max_displacement == 0.0);
  CHECK(d.boundary_flux < 1e-12);
  CHECK(d.created_mass_l1 < 1e-9);

  const auto tm = extract_transport_maps(s, g);
  for (std::size_t i = 0; i < 8; ++i) {
    REQUIRE(tm.T_defined[i]);
    CHECK(tm.T[i] == Approx(g.center(i)));
    CHECK(tm.S[i] == Approx(g.center(i)));
    CHECK(tm.spread_T[i] < 1e-12);
  }
}

TEST_CASE("JKO step: excess density relaxes toward 1") {
  const Grid g(0, 1, 2);
  const auto spec = linear_model();
  const auto mu = Density::uniform(g, 1.2);
  const auto st = solve_jko_step(g, spec, 0.1, mu);
  REQUIRE(st.solution.info.converged);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(st.rho_tau.density(i) > 1.0);
    CHECK(st.rho_tau.density(i) < 1.2);
  }
  const auto r = check_against_brute_force(g, spec, 0.1, mu, nullptr);
  CHECK(r.value_error <= 1e-6);
  CHECK(r.h_ok);
}

TEST_CASE("JKO step: one-step barrier bounds") {
  const Grid g(0, 1, 8);
  const auto V = ScalarField::affine({0.0, 0.5});
  const auto spec = linear_model({1.0, std::exp(-0.5)}, V);
  const double lam = 0.8, Lam = 1.3, tau = 0.05;
  double supE = 0, infE = 1e9;
  for (double x : {0.0, 1.0}) {
    supE = std::max(supE, std::exp(-V(x)));
    infE = std::min(infE, std::exp(-V(x)));
  }
  // mu sits between the two envelopes
  const auto mu = Density::from_function(g, [&](double x) { return std::exp(-V(x)) * (lam / supE + Lam / infE) / 2; });
  const auto st = solve_jko_step(g, spec, tau, mu);
  REQUIRE(st.solution.info.converged);
  const double C0 = 1.0;  // m(log r) = r - 1 <= r
  for (std::size_t i = 0; i < 8; ++i) {
    const double x = g.center(i);
    CHECK(st.rho_tau.density(i) >= lam * std::exp(-V(x)) / supE / (1 + C0 * tau) - 1e-9);
    CHECK(st.rho_tau.density(i) <= Lam * std::exp(-V(x)) / infE + 1e-9);
  }
}

TEST_CASE("optimal pairs: structure on a derived instance") {
  const Grid g(0, 1, 10);
  const auto spec = linear_model({1.2, 0.8});
  const auto mu = Density::from_function(g, [](double x) { return 1 + 0.4 * std::sin(std::numbers::pi * x); });
  const double tau = 0.02;
  const auto st = solve_jko_step(g, spec, tau, mu);
  const auto& s = st.solution;
  REQUIRE(s.info.converged);

  // boundary x boundary carries nothing; marginals hold
  const std::size_t n = 10;
  CHECK(s.gamma(n, n + 1) == 0.0);
  CHECK(s.gamma(n + 1, n) == 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(s.gamma.row(static_cast<Eigen::Index>(i)).sum() == Approx(mu.mass(i)).epsilon(1e-9));
    CHECK(s.gamma.col(static_cast<Eigen::Index>(i)).sum() ==
          Approx((s.rho[i] + tau * s.h[i]) * g.dx()).epsilon(1e-9));
    CHECK(s.h[i] == Approx(spec.m(std::log(s.rho[i]), g.center(i))).epsilon(1e-6));
  }

  const auto pr = extract_potentials(s, spec, g, tau);
  CHECK(pr.optimality_residual <= 1e-6);
  CHECK(pr.trace_residual <= 1e-6);
  CHECK(pr.c_concavity_gap <= 1e-6);
  CHECK(pr.slackness_violation <= 1e-6);

  const auto pi = perturbation_inequalities(s, spec, g, 1e-6);
  CHECK(pi.pass);
  CHECK(pi.pairs_sampled > 0);
  const auto cm = cyclical_monotonicity(s, spec);
  CHECK(cm.pass);
  CHECK(cm.cycles_tested > 0);
  const auto tmb = transported_mass_bound(s, mu);
  CHECK(tmb.lambda0 > 0);
  CHECK(tmb.pass);
}

TEST_CASE("uniqueness: warm and cold starts agree on h") {
  const Grid g(0, 1, 8);
  const auto spec = linear_model({1.5, 1.0});
  const auto mu = Density::from_function(g, [](double x) { return 0.7 + x; });
  const auto a = solve_jko_step(g, spec, 0.05, mu);
  WarmStart w = a.solution.duals;
  w.f.array() += 0.3;
  w.g.array() -= 0.2;
  const auto b = solve_jko_step(g, spec, 0.05, mu, {}, &w);
  REQUIRE(a.solution.info.converged);
  REQUIRE(b.solution.info.converged);
  for (std::size_t i = 0; i < 8; ++i) CHECK(a.solution.h[i] == Approx(b.solution.h[i]).epsilon(1e-6));
}

TEST_CASE("entropic mode keeps the regularized optimum") {
  const Grid g(0, 1, 8);
  const auto spec = linear_model();
  SolverOptions o;
  o.regularization = 1.0;
  const auto mu = Density::from_function(g, [](double x) { return 1 + 0.2 * std::sin(std::numbers::pi * x); });
  const auto st = solve_jko_step(g, spec, 0.05, mu, o);
  REQUIRE(st.solution.info.converged);
  CHECK_FALSE(st.solution.info.exact);
  CHECK(st.solution.info.epsilon == Approx(g.dx() * g.dx() / 0.05));
  // stationary density stays exactly fixed with the balanced reference
  const auto one = solve_jko_step(g, spec, 0.05, Density::uniform(g, 1.0), o);
  for (std::size_t i = 0; i < 8; ++i) CHECK(one.rho_tau.density(i) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("transport maps of a shift plan") {
  const Grid g(0, 1, 3);
  TransportSolution s;
  s.gamma = Eigen::MatrixXd::Zero(5, 5);
  s.gamma(0, 1) = 1.0 / 3;
  s.gamma(1, 2) = 1.0 / 3;
  s.gamma(2, 4) = 1.0 / 3;  // last cell exits through x_hi
  s.positions = {g.center(0), g.center(1), g.center(2), 0.0, 1.0};
  s.h = {0, 0, 0};
  const auto tm = extract_transport_maps(s, g);
  CHECK(tm.T[0] == Approx(g.center(1)));
  CHECK(tm.T[1] == Approx(g.center(2)));
  CHECK(tm.T[2] == Approx(1.0));
  CHECK_FALSE(tm.S_defined[0]);
  CHECK(tm.S[1] == Approx(g.center(0)));
}
