#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rjko/density.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/solver_options.hpp"

namespace rjko {

/// Vertices of the dual polyhedron of the small transportation LP with
/// free boundary rows and columns:
///   u_i + v_j <= |x_i - x_j|^2 / 2tau,  u_i <= d+_i,  v_j <= d-_j,
/// d+_i = min_b c~(x_i, b), d-_j = min_b c~(b, x_j). Without the boundary the
/// last two families are dropped and u_0 = 0 fixes the gauge (balanced masses only).
class DualVertexSet {
 public:
  DualVertexSet(const Grid& g, const ModelSpec& spec, double tau, bool use_boundary = true);

  /// Optimal transport cost between interior row masses mu and column masses nu.
  /// +inf if some column mass is negative.
  double value(const std::vector<double>& mu, const std::vector<double>& nu) const;

  std::size_t vertex_count() const { return vertices_.size(); }
  const std::vector<double>& d_plus() const { return dplus_; }
  const std::vector<double>& d_minus() const { return dminus_; }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }

 private:
  std::size_t n_;
  bool boundary_;
  std::vector<double> dplus_, dminus_;
  std::vector<Eigen::VectorXd> vertices_;  // (u, v) with u_0 included
};

/// n = 1 value from the three possible plan structures.
double single_cell_lp_value(double d_plus, double d_minus, double mu, double nu);

struct BruteForceOptions {
  int grid = 50;            ///< first-pass points per cell
  int refine_points = 21;   ///< points per cell in each zoom pass
  double zoom_span = 2.5;   ///< half-width of a zoom box, in current spacings
  int keep = 6;             ///< candidates carried between passes
  double p_tol = 1e-9;      ///< stop once the spacing in p falls below this
  bool use_boundary = true;
};

struct BruteForceResult {
  double value = 0.0;   ///< program value (Wb, plus E(rho) for the JKO variant)
  double transport = 0.0;
  std::vector<double> p, h, rho;
  std::size_t evaluations = 0;
  double final_spacing = 0.0;
  std::size_t vertices = 0;
  bool polished = false;  ///< exact active-set stage certified the optimum
};

/// Reference optimum for at most 5 nodes: zoomed grid search over the common
/// slope p_j = e'(h_j) of each column and exact LP values at every candidate,
/// then an exact solve over small sets of active dual vertices near the best
/// grid point (with free boundary rows and columns only).
/// rho == nullptr selects the JKO program, where rho_j = exp(p_j - V).
BruteForceResult brute_force_small(const Grid& g, const ModelSpec& spec, double tau,
                                   const Density& mu, const Density* rho,
                                   const BruteForceOptions& opts = {});

struct EquivalenceReport {
  double solver_value = 0.0;
  double oracle_value = 0.0;
  double value_error = 0.0;
  double h_error = 0.0;      ///< max over cells |h_solver - h_oracle|
  double h_tolerance = 0.0;  ///< h spread of the oracle's resolution in p
  bool converged = false;
  bool oracle_polished = false;
  bool value_ok = false;
  bool h_ok = false;
  bool pass() const { return converged && value_ok && h_ok; }
};

/// Solves one small program (JKO when rho == nullptr) with both the solver
/// and brute_force_small and compares value and h.
EquivalenceReport check_against_brute_force(const Grid& g, const ModelSpec& spec, double tau,
                                            const Density& mu, const Density* rho,
                                            const SolverOptions& solver = {},
                                            const BruteForceOptions& oracle = {},
                                            double value_tol = 1e-6);

}  // namespace rjko
