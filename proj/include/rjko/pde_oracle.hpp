#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rjko/density.hpp"
#include "rjko/gradient_flow.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/space_time.hpp"

namespace rjko {

struct FDOptions {
  /// Optional source S(t, x) added to the right-hand side (manufactured solutions).
  std::function<double(double t, double x)> forcing;
  double newton_tol = 1e-10;  ///< max |residual| * dt, density units
  int max_newton = 50;
  int max_halvings = 8;
};

/// Implicit Euler solution of
///   d_t rho = d_x (d_x rho + rho V') - [e']^{-1}(log rho + V),  rho = e^{Psi - V} on the boundary.
struct FDSolution {
  Grid grid;
  std::vector<double> times;
  Eigen::MatrixXd values;  ///< row k: cell densities at times[k]
  BoundaryValues boundary; ///< e^{Psi - V} at x_lo, x_hi
  int halvings_used = 0;   ///< deepest internal step halving

  SpaceTimeField field() const;
};

/// Conservative central fluxes, cubic ghost values for the Dirichlet data
/// (quadratic for n < 4), reaction implicit, damped Newton with banded solves. The number
/// of steps is ceil(t_final / dt); the step is shrunk to land on t_final.
FDSolution solve_fd(const Grid& g, const ModelSpec& spec, const Density& rho0, double t_final,
                    double dt, const FDOptions& opts = {});

/// Hat function max(0, 1 - |x - center| / half_width).
struct TestFunction {
  double center = 0.5;
  double half_width = 0.25;

  double operator()(double x) const;
  std::vector<double> sample(const Grid& g) const;
};

/// | int zeta rho(t1) - int zeta rho(t0) - int_{t0}^{t1} A(rho) dt |,
/// A(rho) = int rho zeta'' - rho V' zeta' - zeta [e']^{-1}(log rho + V),
/// with the gradient terms in face-difference form and the time integral
/// taken with the value at the end of each interval (the implicit convention
/// shared by both schemes). t0, t1 must be time nodes of the field; zeta must
/// vanish in the first and last cell.
double weak_residual(const SpaceTimeField& field, const ModelSpec& spec,
                     const std::vector<double>& zeta, double t0, double t1);

/// L2(0, t_final; L2_loc) distance between a JKO trajectory and an FD solution.
double compare_trajectories(const Trajectory& a, const Grid& g, const FDSolution& b, double t_final);

}  // namespace rjko
