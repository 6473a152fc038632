#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace rjko {

/// Convex penalty G on the total mass nu of one marginal, parametrised by its
/// slope p = G'(nu). Implementations provide nu(p), nu'(p) and G(nu(p)).
class ConvexMarginal {
 public:
  virtual ~ConvexMarginal() = default;
  virtual double mass(double p) const = 0;
  virtual double dmass(double p) const = 0;
  virtual double penalty(double p) const = 0;
  /// lim_{p -> -inf} nu(p); -inf when unbounded.
  virtual double mass_infimum() const = 0;

  /// Solves p + eps log nu(p) = eps log_a (the entropic prox condition).
  double prox(double log_a, double eps, double hint) const;
  /// Solves nu(p) = nu.
  double slope_at(double nu, double hint) const;
};

/// How a node's marginal enters the program.
struct Marginal {
  enum class Kind { Fixed, Free, Penalized };
  Kind kind = Kind::Free;
  double mass = 0.0;                              ///< Fixed only
  std::shared_ptr<const ConvexMarginal> penalty;  ///< Penalized only

  static Marginal fixed(double m) { return {Kind::Fixed, m, nullptr}; }
  static Marginal free() { return {Kind::Free, 0.0, nullptr}; }
  static Marginal penalized(std::shared_ptr<const ConvexMarginal> p) {
    return {Kind::Penalized, 0.0, std::move(p)};
  }
};

/// min <C, gamma> + eps KL(gamma | R) + sum_i rowterm_i + sum_j colterm_j,
/// R_ij = exp(row_lw_i + col_lw_j). Forbidden entries carry +inf cost.
/// Free nodes keep their potential pinned at 0.
struct ScalingProblem {
  Eigen::MatrixXd cost;
  std::vector<Marginal> rows;
  std::vector<Marginal> cols;
  /// Fills log reference weights for a given eps. Empty means R = 1.
  std::function<void(double eps, Eigen::VectorXd& row_lw, Eigen::VectorXd& col_lw)> reference;
};

struct ScalingOptions {
  double eps_start = 1.0;
  double eps_end = 1.0;      ///< levels halve from eps_start down to eps_end
  double tol = 1e-8;         ///< final level
  double stage_tol = 1e-6;   ///< intermediate levels
  int max_iters = 100000;    ///< per level
  bool check_monotone = true;
  bool stop_on_stagnation = false;
  double support_threshold = 1e-10;  ///< relative to total fixed mass
  bool fail_on_max_iters = true;
};

struct ScalingResult {
  Eigen::VectorXd f;  ///< row potentials
  Eigen::VectorXd g;  ///< column potentials
  Eigen::MatrixXd plan;
  Eigen::VectorXd row_lw, col_lw;
  double eps = 0.0;
  int iterations = 0;        ///< total over all levels
  int levels = 0;
  double marginal_residual = 0.0;
  double dual_increment = 0.0;
  double dual_objective = 0.0;
  double max_dual_decrease = 0.0;  ///< largest observed decrease (should be ~0)
  bool converged = false;
};

ScalingResult generalized_scaling_solve(const ScalingProblem& problem, const ScalingOptions& opts,
                                        const ScalingResult* warm = nullptr);

/// Plan exp((f_i + g_j - c_ij)/eps + row_lw_i + col_lw_j).
Eigen::MatrixXd scaling_plan(const ScalingProblem& problem, const Eigen::VectorXd& f,
                             const Eigen::VectorXd& g, const Eigen::VectorXd& row_lw,
                             const Eigen::VectorXd& col_lw, double eps);

/// Log-weights of the symmetric reference measure for nodes at `positions`
/// with `n_boundary` trailing boundary nodes: interior weights solve
/// w_i sum_j K_ij w_j = dx with K the Gaussian kernel of variance tau*eps
/// (boundary x boundary pairs excluded), boundary weights are sqrt(dx / T),
/// T the lattice sum of the kernel. With these weights a uniform unit density
/// is an exact fixed point of the regularized step.
Eigen::VectorXd balanced_reference_log_weights(const std::vector<double>& positions,
                                               std::size_t n_boundary, double dx, double tau,
                                               double eps);

}  // namespace rjko
