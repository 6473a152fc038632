#pragma once

namespace rjko {

/// Options shared by the fixed-target and JKO solvers.
///
/// Regularization strengths are given in units of dx^2/tau, so that
/// eps = 1 makes the Gibbs kernel decay like exp(-d^2/2) in cell units d.
struct SolverOptions {
  double tol = 1e-8;       ///< marginal residual and dual increment
  double kkt_tol = 1e-6;   ///< optimality residual reported as converged
  int max_iters = 100000;  ///< scaling iterations per regularization level

  /// 0 solves the unregularized program (continuation + exact polish).
  /// A positive value keeps the entropic solution at that strength.
  double regularization = 0.0;
  double eps_initial = 1.0;  ///< first continuation level (exact mode)
  double eps_floor = 0.25;   ///< last continuation level (exact mode)
  bool polish = true;

  double density_floor = 1e-10;
  bool check_monotone = true;
};

}  // namespace rjko
