#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rjko/model.hpp"
#include "rjko/pde_oracle.hpp"
#include "rjko/space_time.hpp"

using namespace rjko;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

ModelSpec linear_model() {
  ReactionPreset p;  // [e']^{-1}(log rho) = rho - 1
  return make_reaction_model(0, 1, ScalarField::constant(0), {1, 1}, make_reaction(p));
}

Density bump(const Grid& g, double amp) {
  return Density::from_function(g, [amp](double x) { return 1 + amp * std::sin(pi * x); });
}

// rho = 1 + a e^{-t} sin(pi x) solves rho_t = rho_xx - (rho - 1) + pi^2 a e^{-t} sin(pi x)
double mms_error(std::size_t n) {
  const double a = 0.2, T = 0.25;
  const Grid g(0, 1, n);
  FDOptions o;
  o.forcing = [a](double t, double x) { return pi * pi * a * std::exp(-t) * std::sin(pi * x); };
  const auto sol = solve_fd(g, linear_model(), bump(g, a), T, 1.0 / static_cast<double>(n * n), o);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = sol.values(sol.values.rows() - 1, static_cast<Eigen::Index>(i)) -
                     (1 + a * std::exp(-T) * std::sin(pi * g.center(i)));
    err += d * d * g.dx();
  }
  return std::sqrt(err);
}

// rho = 1 + 0.5 e^{-t} q(x), q = x + x^2 - 2x^3, with V = x / 2 and F' = log r:
// not an eigenfunction, nonlinear reaction, nonzero drift.
double general_mms_error(std::size_t n, double dt, double T) {
  ReactionPreset p;
  p.kind = ReactionKind::Log;
  p.Q = {1.0, 0.0};
  const auto spec = make_reaction_model(0, 1, ScalarField::affine({0.0, 0.5}), {1, 1}, make_reaction(p));
  auto q = [](double x) { return x + x * x - 2 * x * x * x; };
  auto exact = [&](double t, double x) { return 1 + 0.5 * std::exp(-t) * q(x); };
  FDOptions o;
  o.forcing = [&](double t, double x) {
    const double a = 0.5 * std::exp(-t);
    return -a * q(x) - a * (2 - 12 * x) - 0.5 * a * (1 + 2 * x - 6 * x * x) +
           spec.reaction->F_prime(exact(t, x), x);
  };
  const Grid g(0, 1, n);
  const auto sol = solve_fd(g, spec, Density::from_function(g, [&](double x) { return exact(0, x); }), T, dt, o);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = sol.values(sol.values.rows() - 1, static_cast<Eigen::Index>(i)) - exact(T, g.center(i));
    err += d * d * g.dx();
  }
  return std::sqrt(err);
}

}  // namespace

TEST_CASE("FD keeps the stationary state") {
  const Grid g(0, 1, 16);
  const auto sol = solve_fd(g, linear_model(), Density::uniform(g, 1.0), 0.5, 0.05);
  CHECK(sol.times.size() == 11);
  CHECK(sol.times.back() == Approx(0.5));
  CHECK((sol.values.array() - 1.0).abs().maxCoeff() <= 1e-8);
  CHECK(sol.boundary.lower == Approx(1.0));
}

TEST_CASE("FD decaying bump shrinks monotonically") {
  const Grid g(0, 1, 32);
  const auto sol = solve_fd(g, linear_model(), bump(g, 0.1), 1.0, 0.01);
  double prev = 1e9;
  for (Eigen::Index k = 0; k < sol.values.rows(); ++k) {
    const double amp = (sol.values.row(k).array() - 1.0).abs().maxCoeff();
    CHECK(amp <= prev + 1e-14);
    prev = amp;
  }
  // the mode decays like exp(-(pi^2 + 1) t)
  CHECK(prev == Approx(0.1 * std::exp(-(pi * pi + 1))).epsilon(0.1));
}

TEST_CASE("manufactured solution converges at second order in space") {
  const double e1 = mms_error(16), e2 = mms_error(32);
  CHECK(e2 < e1);
  CHECK(std::log2(e1 / e2) > 1.8);
}

TEST_CASE("general manufactured solution") {
  // second order approached from below: 1.96, 1.98 on these levels
  const double s1 = general_mms_error(32, 1.0 / 1024, 0.5), s2 = general_mms_error(64, 1.0 / 4096, 0.5),
               s3 = general_mms_error(128, 1.0 / 16384, 0.5);
  CHECK(std::log2(s1 / s2) > 1.9);
  CHECK(std::log2(s2 / s3) > 1.95);
  const double t1 = general_mms_error(256, 0.1, 1.0), t2 = general_mms_error(256, 0.05, 1.0),
               t3 = general_mms_error(256, 0.025, 1.0);
  CHECK(std::log2(t1 / t2) >= 1.0);
  CHECK(std::log2(t2 / t3) >= 1.0);
}

TEST_CASE("weak residual") {
  const Grid g(0, 1, 32);
  const TestFunction zeta{0.5, 0.25};
  CHECK(zeta(0.5) == Approx(1.0));
  CHECK(zeta(0.0) == 0.0);
  CHECK(zeta(0.7) == Approx(0.2));

  const auto flat = solve_fd(g, linear_model(), Density::uniform(g, 1.0), 0.4, 0.05);
  CHECK(weak_residual(flat.field(), linear_model(), zeta.sample(g), 0.0, 0.4) < 1e-8);

  // the residual uses the scheme's own face differences, so the FD solution
  // satisfies it to round-off at every resolution
  for (std::size_t n : {16u, 32u, 64u}) {
    const Grid gn(0, 1, n);
    const auto sol = solve_fd(gn, linear_model(), bump(gn, 0.3), 0.2, 0.01);
    CHECK(weak_residual(sol.field(), linear_model(), zeta.sample(gn), 0.0, 0.2) < 1e-12);
  }
  // a perturbed field does not
  auto bad = flat.field();
  bad.values(bad.values.rows() - 1, 16) += 0.1;
  CHECK(weak_residual(bad, linear_model(), zeta.sample(g), 0.0, 0.4) > 1e-4);
}

TEST_CASE("l2_loc_distance") {
  const Grid g(0, 1, 16);
  const auto a = solve_fd(g, linear_model(), bump(g, 0.2), 0.3, 0.05).field();
  const auto b = solve_fd(Grid(0, 1, 32), linear_model(), bump(Grid(0, 1, 32), 0.1), 0.3, 0.03).field();
  CHECK(l2_loc_distance(a, a, 0.3) == 0.0);
  CHECK(l2_loc_distance(a, b, 0.3) == Approx(l2_loc_distance(b, a, 0.3)).epsilon(1e-14));
  CHECK(l2_loc_distance(a, b, 0.3) > 0.0);

  SpaceTimeField c;
  c.times = {0.0, 1.0};
  c.values = Eigen::MatrixXd::Constant(2, 4, 2.0);
  SpaceTimeField d = c;
  d.values.setConstant(1.0);
  // interior cells 1..2 of the coarse mesh cover [0.25, 0.75]
  CHECK(l2_loc_distance(c, d, 1.0) == Approx(std::sqrt(0.5)));
}
