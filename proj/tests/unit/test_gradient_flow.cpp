#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rjko/audit.hpp"
#include "rjko/errors.hpp"
#include "rjko/gradient_flow.hpp"
#include "rjko/model.hpp"

using namespace rjko;
using doctest::Approx;

namespace {

ModelSpec linear_model(BoundaryValues rho_D = {1, 1}, ScalarField V = ScalarField::constant(0)) {
  ReactionPreset p;
  return make_reaction_model(0, 1, V, rho_D, make_reaction(p));
}

}  // namespace

TEST_CASE("stationary trajectory stays at 1") {
  const Grid g(0, 1, 8);
  const auto traj = run_minimizing_movement(g, linear_model(), Density::uniform(g, 1.0), 0.1, 0.5);
  CHECK(traj.steps() == 5);
  for (const auto& s : traj.snapshots) {
    CHECK(s.info.converged);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(s.rho.density(i) - 1.0) <= 1e-6);
  }
  CHECK(traj.snapshots.back().t == Approx(0.5));
}

TEST_CASE("excess density decays monotonically toward 1") {
  const Grid g(0, 1, 6);
  const auto spec = linear_model();
  const auto traj = run_minimizing_movement(g, spec, Density::uniform(g, 1.2), 0.05, 0.3);
  for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
    const auto& a = traj.snapshots[n - 1].rho;
    const auto& b = traj.snapshots[n].rho;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(b.density(i) <= a.density(i) + 1e-9);
      CHECK(b.density(i) >= 1.0 - 1e-9);
    }
    CHECK(traj.snapshots[n].energy <= traj.snapshots[n - 1].energy + 1e-10);
  }
}

TEST_CASE("barriers hold along a flow and fail for a tightened envelope") {
  const Grid g(0, 1, 8);
  const auto spec = linear_model({1.3, 0.8}, ScalarField::affine({0.0, 0.3}));
  const auto rho0 = Density::from_function(g, [](double x) { return 0.9 + 0.5 * std::sin(std::numbers::pi * x); });
  auto traj = run_minimizing_movement(g, spec, rho0, 0.05, 0.25);
  const auto rep = barrier_check(traj, spec, g);
  CHECK(rep.pass);
  CHECK(rep.violations == 0);
  CHECK(rep.steps.size() == traj.snapshots.size());

  // an envelope below sup rho0 is violated at the initial snapshot
  traj.barrier.Lambda = 0.5 * traj.barrier.Lambda;
  traj.barrier.Lambda_clipped = false;
  const auto bad = barrier_check(traj, spec, g);
  CHECK_FALSE(bad.pass);
  REQUIRE_FALSE(bad.steps.empty());
  CHECK_FALSE(bad.steps[0].pass);
  CHECK(bad.worst_upper_margin < 0.0);
}

TEST_CASE("trajectory_interpolate is piecewise constant") {
  const Grid g(0, 1, 4);
  const auto traj = run_minimizing_movement(g, linear_model(), Density::uniform(g, 1.2), 0.1, 0.3);
  CHECK(&trajectory_interpolate(traj, 0.0) == &traj.snapshots[0].rho);
  CHECK(&trajectory_interpolate(traj, 0.15) == &traj.snapshots[1].rho);
  CHECK(&trajectory_interpolate(traj, 0.3) == &traj.snapshots[3].rho);
  CHECK_THROWS(trajectory_interpolate(traj, -0.1));
}

TEST_CASE("stationary refinement study has zero error") {
  const Grid g(0, 1, 8);
  SpaceTimeField ref;
  ref.times = {0.0, 0.4};
  ref.values = Eigen::MatrixXd::Ones(2, 8);
  const auto study =
      tau_refinement_study(g, linear_model(), Density::uniform(g, 1.0), 0.4, {0.2, 0.1, 0.05}, ref);
  REQUIRE(study.rows.size() == 3);
  for (const auto& r : study.rows) {
    CHECK(r.converged);
    CHECK(r.error <= 1e-6);
  }
  CHECK(study.rows[2].steps == 8);
}

TEST_CASE("energy ledger") {
  const Grid g(0, 1, 6);
  const auto spec = linear_model({1.2, 0.9});
  const auto rho0 = Density::from_function(g, [](double x) { return 0.8 + 0.4 * x; });
  const auto traj = run_minimizing_movement(g, spec, rho0, 0.05, 0.2);
  const auto led = energy_ledger(traj, g, spec, true);
  CHECK(led.pass);
  REQUIRE(led.entries.size() == traj.steps());
  for (const auto& e : led.entries) CHECK(e.holds);
  CHECK(led.quadratic_cost_sum >= 0.0);
  CHECK(weak_form_budget(traj, 0.0, 0.2) >= std::sqrt(0.05) * 0.2);
}

TEST_CASE("log_log_slope") {
  CHECK(log_log_slope({1, 2, 4, 8}, {3, 6, 12, 24}) == Approx(1.0));
  CHECK(log_log_slope({0.1, 0.01}, {1e-2, 1e-4}) == Approx(2.0));
  CHECK(log_log_slope({1, 4, 16}, {1, 2, 4}) == Approx(0.5));
}
