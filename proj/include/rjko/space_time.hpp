#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rjko {

/// Cell densities on a uniform mesh at a list of times.
/// Floor: rho(t) = values at the last time <= t (the JKO convention).
/// Linear: linear interpolation between neighbouring times.
struct SpaceTimeField {
  enum class TimeInterp { Floor, Linear };

  double x_lo = 0.0, x_hi = 1.0;
  std::vector<double> times;  ///< strictly increasing, times[0] = 0
  Eigen::MatrixXd values;     ///< row k holds the cell densities at times[k]
  TimeInterp interp = TimeInterp::Floor;

  std::size_t n_cells() const { return static_cast<std::size_t>(values.cols()); }
  double dx() const { return (x_hi - x_lo) / static_cast<double>(values.cols()); }
  /// Cell densities at time t.
  Eigen::VectorXd at(double t) const;
  /// Mean of the piecewise-constant profile at time t over [a, b].
  double average(double t, double a, double b) const;
  /// Index k with |times[k] - t| small; throws if t is not a time node.
  std::size_t time_index(double t) const;
};

/// L2(0, t_final; L2_loc) distance. Spatial cells are those of the coarser
/// mesh minus one at each end; time quadrature uses midpoints of the merged
/// time grids. Symmetric in its arguments.
double l2_loc_distance(const SpaceTimeField& a, const SpaceTimeField& b, double t_final);

}  // namespace rjko
