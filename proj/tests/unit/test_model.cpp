#include <doctest.h>

#include <cmath>
#include <vector>

#include "rjko/audit.hpp"
#include "rjko/density.hpp"
#include "rjko/errors.hpp"
#include "rjko/model.hpp"
#include "rjko/reaction.hpp"

using namespace rjko;
using doctest::Approx;

namespace {

ReactionSpec power(double W, double beta, double Q) {
  ReactionPreset p;
  p.kind = ReactionKind::Power;
  p.W = {W, 0};
  p.beta = {beta, 0};
  p.Q = {Q, 0};
  return make_reaction(p);
}

ReactionSpec logarithmic(double W, double Q) {
  ReactionPreset p;
  p.kind = ReactionKind::Log;
  p.W = {W, 0};
  p.Q = {Q, 0};
  return make_reaction(p);
}

ReactionSpec signed_power(Affine W, double alpha, Affine Q) {
  ReactionPreset p;
  p.kind = ReactionKind::SignedPower;
  p.W = W;
  p.alpha = {alpha, 0};
  p.Q = Q;
  return make_reaction(p);
}

ModelSpec model(const ReactionSpec& r, ScalarField V = ScalarField::constant(0),
                BoundaryValues rho_D = {1, 1}) {
  return make_reaction_model(0, 1, V, rho_D, r);
}

}  // namespace

TEST_CASE("e for F'(r) = r - 1") {
  const auto spec = model(power(1, 0, 1));
  for (double z : {-0.9, -0.5, 0.0, 0.3, 2.0, 10.0}) {
    CHECK(spec.e(z, 0.4) == Approx((z + 1) * std::log(z + 1) - z).epsilon(1e-10));
    CHECK(e_by_quadrature(*spec.reaction, spec.V, z, 0.4) ==
          Approx((z + 1) * std::log(z + 1) - z).epsilon(1e-8));
    CHECK(spec.e_prime(z, 0.4) == Approx(std::log(z + 1)));
  }
  CHECK(spec.e(-1.0, 0.4) == Approx(1.0));
  CHECK(spec.e(0.0, 0.4) == 0.0);
  CHECK(is_infinite_cost(spec.e(-1.5, 0.4)));
  CHECK(spec.a(0.4) == Approx(-1.0));
  CHECK(e_prime_inverse(spec, std::log(2.0), 0.2) == Approx(1.0));
  CHECK(e_prime_inverse(spec, 0.0, 0.2) == Approx(0.0).epsilon(1e-14));
  CHECK(m_r(spec, 0.7, 0.2) == Approx(std::exp(0.7) - 1));
}

TEST_CASE("e for F'(r) = log r is z^2 / 2") {
  const auto spec = model(logarithmic(1, 0));
  for (double z : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    CHECK(spec.e(z, 0.5) == Approx(0.5 * z * z).epsilon(1e-10));
    CHECK(e_by_quadrature(*spec.reaction, spec.V, z, 0.5) == Approx(0.5 * z * z).epsilon(1e-8));
  }
  CHECK(std::isinf(spec.a(0.5)));
  const auto tilted = model(logarithmic(1, 0), ScalarField::affine({0, 1}));
  for (double x : {0.1, 0.5, 0.9}) CHECK(e_prime_inverse(tilted, x, x) == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("signed-power closed form agrees with quadrature") {
  const auto spec = model(signed_power({1, 0.5}, 0.5, {0.2, 0.1}), ScalarField::affine({0.1, 0.3}));
  // int_0^z e'(s) ds at 30 digits, x = 0
  CHECK(spec.e(-0.5, 0.0) == Approx(-0.0433812668952688088789).epsilon(1e-12));
  for (double x : {0.0, 0.3, 1.0}) {
    for (double z : {-0.5, -0.1, 0.05, 0.4, 2.0}) {
      if (z <= spec.a(x)) continue;
      // F'' is singular at r = 1; the generic quadrature only resolves it to ~1e-7.
      CHECK(spec.e(z, x) == Approx(e_by_quadrature(*spec.reaction, spec.V, z, x)).epsilon(1e-6));
    }
  }
}

TEST_CASE("construction identity and round trip") {
  const std::vector<ModelSpec> specs{
      model(power(1, 0, 1)), model(power(2, 1, 0.5), ScalarField::affine({0, 0.7})),
      model(logarithmic(1.5, 0.3)), model(signed_power({1, 0}, 0.5, {0, 0}))};
  for (const auto& spec : specs) {
    const auto& F = *spec.reaction;
    for (double x : {0.0, 0.25, 1.0}) {
      for (double r : {0.05, 0.5, 0.99, 1.7, 12.0}) {
        CHECK(spec.e_prime(F.F_prime(r, x), x) == Approx(std::log(r) + spec.V(x)).epsilon(1e-8));
        if (F.F_prime_inverse) CHECK(F.F_prime_inverse(F.F_prime(r, x), x) == Approx(r).epsilon(1e-10));
      }
      for (double z : {-0.3, 0.0, 0.8, 3.0}) {
        if (z <= spec.a(x)) continue;
        CHECK(e_prime_inverse(spec, spec.e_prime(z, x), x) == Approx(z).epsilon(1e-8));
      }
      // convexity by second differences
      for (double z = std::max(spec.a(x), -5.0) + 0.05; z < 5.0; z += 0.25) {
        const double d = 1e-3;
        CHECK(spec.e(z + d, x) - 2 * spec.e(z, x) + spec.e(z - d, x) >= -1e-9);
      }
    }
  }
}

TEST_CASE("e grows faster than L|z| + C") {
  const auto spec = model(power(1, 0, 1));
  for (double L : {0.0, 1.0, 10.0}) {
    double C = 0;
    for (double z = -0.99; z <= 1e4; z = z < 1 ? z + 0.01 : z * 1.1) C = std::min(C, spec.e(z, 0.5) - L * std::abs(z));
    CHECK(std::isfinite(C));
  }
}

TEST_CASE("invert_F_prime") {
  const auto lin = power(1, 0, 1);
  CHECK(invert_F_prime(lin, 0.0, 0.5) == Approx(1.0));
  CHECK(invert_F_prime_bisection(logarithmic(1, 0), 1.0, 0.5, 1e-12) == Approx(std::exp(1.0)).epsilon(1e-11));
  CHECK(invert_F_prime_bisection(power(1, 1, 1), 3.0, 0.5, 1e-12) == Approx(2.0).epsilon(1e-11));
  CHECK_THROWS_AS(invert_F_prime(lin, -2.0, 0.5), InvalidArgument);
}

TEST_CASE("psi_from_dirichlet") {
  auto p = psi_from_dirichlet({1, 1}, {0, 0});
  CHECK(p.lower == 0.0);
  CHECK(p.upper == 0.0);
  p = psi_from_dirichlet({std::exp(1.0), std::exp(1.0)}, {0, 0});
  CHECK(p.lower == Approx(1.0));
  p = psi_from_dirichlet({2, 2}, {0.5, 0.5});
  CHECK(p.upper == Approx(std::log(2.0) + 0.5));
  const auto spec = model(power(1, 0, 1), ScalarField::affine({0.2, 1.0}), {1.5, 0.7});
  CHECK(std::exp(spec.psi.lower - spec.V(0)) == Approx(1.5).epsilon(1e-15));
  CHECK(std::exp(spec.psi.upper - spec.V(1)) == Approx(0.7).epsilon(1e-15));
  CHECK_THROWS_AS(model(power(1, 0, 1), ScalarField::constant(0), {0, 1}), InvalidArgument);
}

TEST_CASE("entropy_eval") {
  const Grid g(0, 1, 10);
  CHECK(entropy_eval(model(power(1, 0, 1)), g, Density::uniform(g, 1.0)) == Approx(0.0));
  CHECK(entropy_eval(model(power(1, 0, 1)), g, Density::uniform(g, std::exp(1.0))) == Approx(1.0));
  CHECK(entropy_eval(model(power(1, 0, 1), ScalarField::constant(1)), g, Density::uniform(g, 1.0)) ==
        Approx(1.0));
  // E >= 0 when V >= 0
  const auto spec = model(power(1, 0, 1), ScalarField::affine({0, 0.5}));
  for (double a : {0.2, 0.9, 1.0, 3.0})
    CHECK(entropy_eval(spec, g, Density::from_function(g, [a](double x) { return a + x; })) >= 0.0);
  CHECK(entropy_density(0.0, 0.0) == 1.0);
}

TEST_CASE("validate_assumptions") {
  const Grid g(0, 1, 16);
  const auto lin = validate_assumptions(model(power(1, 0, 1)), g);
  CHECK(lin.all_pass());
  CHECK(lin.C0 >= 1.0);
  const auto quad = validate_assumptions(model(logarithmic(1, 0)), g);
  REQUIRE(quad.find("(C3)") != nullptr);
  CHECK(quad.find("(C3)")->pass);

  auto bad = model(power(1, 0, 1));
  bad.reaction->F_prime = [](double r, double) { return std::sin(r) + 0.1 * r - 0.5; };
  const auto audit = validate_assumptions(bad, g);
  REQUIRE(audit.find("(F1)") != nullptr);
  CHECK_FALSE(audit.find("(F1)")->pass);
  CHECK_FALSE(audit.all_pass());
}

TEST_CASE("preset registry") {
  CHECK(reaction_kind_from_name("power") == ReactionKind::Power);
  CHECK(reaction_kind_from_name("log") == ReactionKind::Log);
  CHECK(reaction_kind_from_name("signed-power") == ReactionKind::SignedPower);
  CHECK_FALSE(reaction_kind_from_name("cubic").has_value());
  CHECK(reaction_kind_name(ReactionKind::SignedPower) == "signed-power");
}
