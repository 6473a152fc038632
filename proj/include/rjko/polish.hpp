#pragma once

#include <Eigen/Dense>

#include "rjko/scaling.hpp"

namespace rjko {

struct PolishOptions {
  int max_ipm_iters = 200;
  int max_rounds = 30;          ///< column-generation rounds
  double support_threshold = 1e-10;  ///< initial support, relative to total mass
  double pricing_tol = 1e-11;   ///< reduced cost below -tol enters the support
};

struct PolishResult {
  Eigen::MatrixXd plan;
  Eigen::VectorXd f, g;
  Eigen::VectorXd col_mass;  ///< nu_j for penalized columns, column sums otherwise
  int ipm_iterations = 0;
  int rounds = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  double min_reduced_cost = 0.0;  ///< over all allowed pairs
  bool converged = false;
};

/// Solves the unregularized program exactly: a primal-dual interior point
/// method restricted to a support set, followed by pricing of all remaining
/// pairs until no reduced cost is negative. Rows may be Fixed or Free,
/// columns Fixed, Free or Penalized. The start point (plan, f, g) usually
/// comes from an entropic solve.
PolishResult polish_exact(const ScalingProblem& problem, const Eigen::MatrixXd& plan0,
                          const Eigen::VectorXd& f0, const Eigen::VectorXd& g0,
                          const PolishOptions& opts = {});

}  // namespace rjko
