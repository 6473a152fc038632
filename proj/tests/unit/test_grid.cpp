#include <doctest.h>

#include <vector>

#include "rjko/density.hpp"
#include "rjko/errors.hpp"
#include "rjko/grid.hpp"

using namespace rjko;
using doctest::Approx;

TEST_CASE("build_grid: uniform centres and spacing") {
  const auto g = build_grid(0, 1, 4);
  CHECK(g.dx() == Approx(0.25));
  const std::vector<double> want{0.125, 0.375, 0.625, 0.875};
  for (std::size_t i = 0; i < 4; ++i) CHECK(g.center(i) == Approx(want[i]));

  const auto one = build_grid(0, 1, 1);
  CHECK(one.n_cells() == 1);
  CHECK(one.center(0) == Approx(0.5));
  CHECK(one.dx() == Approx(1.0));

  const auto h = build_grid(-2, 3, 5);
  CHECK(h.dx() == Approx(1.0));
  const std::vector<double> want2{-1.5, -0.5, 0.5, 1.5, 2.5};
  for (std::size_t i = 0; i < 5; ++i) CHECK(h.center(i) == Approx(want2[i]));
}

TEST_CASE("grid invariants") {
  for (std::size_t n : {1u, 2u, 7u, 64u}) {
    const Grid g(-0.3, 2.1, n);
    CHECK(g.dx() > 0);
    CHECK(g.interior_ball_radius() == Approx(1.2));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(g.center(i) > g.x_lo());
      CHECK(g.center(i) < g.x_hi());
      if (i) CHECK(g.center(i) > g.center(i - 1));
    }
  }
}

TEST_CASE("grid rejects bad input") {
  CHECK_THROWS_AS(Grid(1, 0, 3), InvalidArgument);
  CHECK_THROWS_AS(Grid(0, 0, 3), InvalidArgument);
  CHECK_THROWS_AS(Grid(0, 1, 0), InvalidArgument);
}

TEST_CASE("nearest_boundary_projection") {
  const Grid g(0, 1, 8);
  auto p = nearest_boundary_projection(g, 0.1);
  CHECK(p.point == 0.0);
  CHECK(p.value == Approx(0.1));
  p = nearest_boundary_projection(g, 0.5);  // tie goes to x_lo
  CHECK(p.point == 0.0);
  CHECK(p.value == Approx(0.5));
  p = nearest_boundary_projection(g, 0.9);
  CHECK(p.point == 1.0);
  CHECK(p.value == Approx(0.1));
  CHECK_THROWS_AS(nearest_boundary_projection(g, 1.5), InvalidArgument);
}

TEST_CASE("weighted_boundary_projection") {
  const Grid g(0, 1, 8);
  auto p = weighted_boundary_projection(g, 0.1, {0, 0}, 0.01, 1);
  CHECK(p.point == 0.0);
  CHECK(p.value == Approx(0.5));
  p = weighted_boundary_projection(g, 0.1, {0, 1}, 0.01, 1);
  CHECK(p.point == 0.0);
  CHECK(p.value == Approx(0.5));
  p = weighted_boundary_projection(g, 0.1, {0, -100}, 0.5, 1);
  CHECK(p.point == 1.0);
  CHECK(p.value == Approx(0.81 - 100.0));
  // sign -1 flips the potential: -Psi(1) = -1 makes x_hi cheaper here.
  p = weighted_boundary_projection(g, 0.5, {0, 1}, 0.01, -1);
  CHECK(p.point == 1.0);
  CHECK_THROWS_AS(weighted_boundary_projection(g, 0.5, {0, 0}, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(weighted_boundary_projection(g, 0.5, {0, 0}, 0.1, 2), InvalidArgument);
}

TEST_CASE("projection_gap_check") {
  const Grid g(0, 1, 16);
  std::vector<double> near_lo;
  for (int k = 1; k < 20; ++k) near_lo.push_back(0.01 * k);

  auto r = projection_gap_check(g, {0, 0}, 0.3, near_lo);
  CHECK(r.max_gap_plus == 0.0);
  CHECK(r.max_gap_minus == 0.0);
  CHECK(r.bound == 0.0);
  CHECK(r.pass);

  r = projection_gap_check(g, {0, 1}, 0.01, near_lo);
  CHECK(r.max_gap_plus == 0.0);
  CHECK(r.bound == Approx(0.04));
  CHECK(r.pass);

  std::vector<double> both;
  for (int k = 1; k < 25; ++k) {
    both.push_back(0.01 * k);
    both.push_back(1.0 - 0.01 * k);
  }
  r = projection_gap_check(g, {0, 10}, 0.2, both);
  CHECK(r.bound == Approx(8.0));
  CHECK(r.samples_used > 0);
  CHECK(r.max_gap_plus <= r.bound);
  CHECK(r.max_gap_minus <= r.bound);
  CHECK(r.pass);
}

TEST_CASE("density construction") {
  const Grid g(0, 2, 4);
  const auto d = Density::from_values(g, {1, 2, 3, 4});
  CHECK(d.total_mass() == Approx(5.0));
  CHECK(d.min_density() == Approx(1.0));
  CHECK(d.max_density() == Approx(4.0));
  auto e = Density::from_masses(0.5, {0.5, 1e-14, 0.0, 1.0});
  CHECK(e.floor_in_place(1e-10) == 2);
  CHECK(e.min_density() == Approx(1e-10));
  CHECK_THROWS_AS(Density::from_values(g, {1, 2}), InvalidArgument);
  CHECK_THROWS_AS(Density::from_masses(0.5, {-1.0}), InvalidArgument);
}
