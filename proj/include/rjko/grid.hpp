#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rjko {

/// Uniform cell-centred mesh of (x_lo, x_hi) with the two endpoints as boundary nodes.
class Grid {
 public:
  Grid(double x_lo, double x_hi, std::size_t n_cells);

  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double length() const { return x_hi_ - x_lo_; }
  std::size_t n_cells() const { return centers_.size(); }
  double dx() const { return dx_; }
  double center(std::size_t i) const { return centers_[i]; }
  const std::vector<double>& centers() const { return centers_; }
  /// Radius of the interior ball; half the interval in 1D.
  double interior_ball_radius() const { return 0.5 * length(); }
  /// Distance to the nearest endpoint.
  double boundary_distance(double x) const;
  bool contains_closed(double x) const { return x >= x_lo_ && x <= x_hi_; }

 private:
  double x_lo_;
  double x_hi_;
  double dx_;
  std::vector<double> centers_;
};

Grid build_grid(double x_lo, double x_hi, std::size_t n_cells);

/// Values of a function at the two boundary nodes.
struct BoundaryValues {
  double lower = 0.0;
  double upper = 0.0;
};

struct ProjectionResult {
  double point = 0.0;  ///< x_lo or x_hi
  double value = 0.0;
};

/// Plain projection onto the boundary. Ties go to x_lo.
ProjectionResult nearest_boundary_projection(const Grid& g, double x);

/// argmin_b |x-b|^2/(2 tau) + sign * psi(b). Ties go to x_lo.
ProjectionResult weighted_boundary_projection(const Grid& g, double x, BoundaryValues psi,
                                              double tau, int sign);

struct ProjectionGapReport {
  double max_gap_plus = 0.0;
  double max_gap_minus = 0.0;
  double bound = 0.0;  ///< 4 tau Lip(psi)
  std::size_t samples_used = 0;
  bool pass = true;
};

ProjectionGapReport projection_gap_check(const Grid& g, BoundaryValues psi, double tau,
                                         std::span<const double> samples);

}  // namespace rjko
