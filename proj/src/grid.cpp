#include "rjko/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rjko/errors.hpp"

namespace rjko {

Grid::Grid(double x_lo, double x_hi, std::size_t n_cells) : x_lo_(x_lo), x_hi_(x_hi) {
  if (!std::isfinite(x_lo) || !std::isfinite(x_hi)) {
    throw InvalidArgument("grid bounds must be finite");
  }
  if (!(x_lo < x_hi)) throw InvalidArgument("grid requires x_lo < x_hi");
  if (n_cells == 0) throw InvalidArgument("grid requires at least one cell");
  dx_ = (x_hi - x_lo) / static_cast<double>(n_cells);
  centers_.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    centers_[i] = x_lo + (static_cast<double>(i) + 0.5) * dx_;
  }
}

double Grid::boundary_distance(double x) const { return std::min(x - x_lo_, x_hi_ - x); }

Grid build_grid(double x_lo, double x_hi, std::size_t n_cells) { return Grid(x_lo, x_hi, n_cells); }

ProjectionResult nearest_boundary_projection(const Grid& g, double x) {
  if (!g.contains_closed(x)) {
    throw InvalidArgument("projection point " + std::to_string(x) + " lies outside the domain");
  }
  const double dl = x - g.x_lo();
  const double du = g.x_hi() - x;
  if (dl <= du) return {g.x_lo(), dl};
  return {g.x_hi(), du};
}

ProjectionResult weighted_boundary_projection(const Grid& g, double x, BoundaryValues psi,
                                              double tau, int sign) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (sign != 1 && sign != -1) throw InvalidArgument("sign must be +1 or -1");
  if (!g.contains_closed(x)) {
    throw InvalidArgument("projection point " + std::to_string(x) + " lies outside the domain");
  }
  const double dl = x - g.x_lo();
  const double du = g.x_hi() - x;
  const double vl = dl * dl / (2.0 * tau) + sign * psi.lower;
  const double vu = du * du / (2.0 * tau) + sign * psi.upper;
  if (vl <= vu) return {g.x_lo(), vl};
  return {g.x_hi(), vu};
}

ProjectionGapReport projection_gap_check(const Grid& g, BoundaryValues psi, double tau,
                                         std::span<const double> samples) {
  ProjectionGapReport rep;
  const double lip = std::abs(psi.upper - psi.lower) / g.length();
  rep.bound = 4.0 * tau * lip;
  const double r = g.interior_ball_radius();
  for (double x : samples) {
    if (!g.contains_closed(x) || g.boundary_distance(x) >= 0.5 * r) continue;
    const double p = nearest_boundary_projection(g, x).point;
    rep.max_gap_plus = std::max(rep.max_gap_plus,
                                std::abs(p - weighted_boundary_projection(g, x, psi, tau, 1).point));
    rep.max_gap_minus = std::max(
        rep.max_gap_minus, std::abs(p - weighted_boundary_projection(g, x, psi, tau, -1).point));
    ++rep.samples_used;
  }
  rep.pass = rep.max_gap_plus <= rep.bound && rep.max_gap_minus <= rep.bound;
  return rep;
}

}  // namespace rjko
