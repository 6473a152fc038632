#include <doctest.h>

#include <cmath>

#include "rjko/brute_force.hpp"
#include "rjko/errors.hpp"
#include "rjko/model.hpp"

using namespace rjko;
using doctest::Approx;

namespace {

ModelSpec model(ReactionKind kind, BoundaryValues rho_D = {1, 1}) {
  ReactionPreset p;
  p.kind = kind;
  if (kind == ReactionKind::Log) p.Q = {0.0, 0.0};
  if (kind == ReactionKind::SignedPower) p.Q = {0.1, 0.0};
  return make_reaction_model(0, 1, ScalarField::constant(0), rho_D, make_reaction(p));
}

}  // namespace

TEST_CASE("single cell LP by hand") {
  // keep min(mu, nu), excess leaves at d+, deficit enters at d-
  CHECK(single_cell_lp_value(0.25, 0.25, 1.0, 0.6) == Approx(0.1));
  CHECK(single_cell_lp_value(0.25, 0.25, 0.6, 1.0) == Approx(0.1));
  CHECK(single_cell_lp_value(0.25, 0.25, 1.0, 1.0) == Approx(0.0));
  // d+ + d- < 0: routing everything through the boundary is cheaper
  CHECK(single_cell_lp_value(-0.3, 0.1, 1.0, 0.6) == Approx(-0.3 + 0.06));
}

TEST_CASE("vertex set reproduces the single cell formula") {
  const Grid g(0, 1, 1);
  const auto spec = model(ReactionKind::Power, {std::exp(0.4), std::exp(-0.2)});
  const DualVertexSet vs(g, spec, 0.5);
  for (double nu : {0.2, 1.0, 1.7})
    CHECK(vs.value({1.0}, {nu}) == Approx(single_cell_lp_value(vs.d_plus()[0], vs.d_minus()[0], 1.0, nu)));
  CHECK(std::isinf(vs.value({1.0}, {-0.1})));
}

TEST_CASE("classical reduction matches the sorted coupling") {
  const Grid g(0, 1, 2);
  const double tau = 0.1;
  const DualVertexSet vs(g, model(ReactionKind::Power), tau, false);
  // move 0.2 from cell 0 to cell 1
  CHECK(vs.value({0.3, 0.2}, {0.1, 0.4}) == Approx(0.2 * 0.25 / (2 * tau)));
  CHECK(vs.value({0.3, 0.2}, {0.3, 0.2}) == Approx(0.0).epsilon(1e-14));
}

TEST_CASE("brute force is stable under grid refinement") {
  const Grid g(0, 1, 2);
  const auto spec = model(ReactionKind::Power);
  const auto mu = Density::from_values(g, {1.3, 0.8});
  BruteForceOptions coarse, fine;
  fine.grid = 100;
  fine.refine_points = 41;
  const auto a = brute_force_small(g, spec, 0.1, mu, nullptr, coarse);
  const auto b = brute_force_small(g, spec, 0.1, mu, nullptr, fine);
  CHECK(std::abs(a.value - b.value) < 1e-7);
  CHECK(a.vertices > 0);
  CHECK(a.polished);
  for (std::size_t j = 0; j < 2; ++j) CHECK(a.h[j] == Approx(b.h[j]).epsilon(1e-12));
  CHECK_THROWS_AS(brute_force_small(Grid(0, 1, 4), spec, 0.1, Density::uniform(Grid(0, 1, 4), 1.0), nullptr),
                  InvalidArgument);
}

TEST_CASE("solver agrees with brute force on every preset") {
  for (auto kind : {ReactionKind::Power, ReactionKind::Log, ReactionKind::SignedPower}) {
    for (std::size_t n : {1u, 2u, 3u}) {
      const Grid g(0, 1, n);
      const auto spec = model(kind, {1.3, 0.9});
      const auto mu = Density::from_function(g, [](double x) { return 0.8 + 0.6 * x; });
      const auto r = check_against_brute_force(g, spec, 0.08, mu, nullptr);
      CAPTURE(n);
      CHECK(r.converged);
      CHECK(r.oracle_polished);
      CHECK(r.value_error <= 1e-6);
      CHECK(r.h_ok);
    }
  }
}

TEST_CASE("exact stage resolves a kinked valley") {
  // Rows 1 and 2 each split between two columns at the optimum, so the
  // objective is kinked along directions that are not axis-aligned.
  const Grid g(0, 1, 3);
  ReactionPreset p;
  p.W = {1.2, 0.3};
  p.beta = {0.6, 0.0};
  p.Q = {0.7, 0.0};
  const auto spec = make_reaction_model(0, 1, ScalarField::affine({0.1, -0.3}), {1.1, 0.9}, make_reaction(p));
  const auto mu = Density::from_values(g, {0.4, 1.5, 1.2});
  const auto rho = Density::from_values(g, {0.5, 0.6, 0.9});
  const auto r = check_against_brute_force(g, spec, 0.06, mu, &rho);
  CHECK(r.oracle_polished);
  CHECK(r.value_error <= 1e-10);
  CHECK(r.h_error <= 1e-7);
}
