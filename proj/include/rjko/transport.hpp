#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rjko/cost_matrix.hpp"
#include "rjko/density.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/solver_options.hpp"

namespace rjko {

struct DiagnosticsReport {
  double mass_floor = 0.0;
  double max_displacement = 0.0;
  double boundary_flux = 0.0;
  double created_mass_l1 = 0.0;
  double created_mass_linf = 0.0;
  double quadratic_cost = 0.0;
  double kappa_ratio_min = 0.0;  ///< min rho_tau / (rho_tau + tau h)
  double kappa_ratio_max = 0.0;
  /// E(mu) - int Psi dmu - E(rho_tau) + int Psi drho_tau + tau
  double energy_inequality_rhs = 0.0;
  double optimality_residual = 0.0;
  /// m_r <= h <= m_R + 1 with r, R just outside the refinement-lemma thresholds.
  bool created_mass_window_ok = true;
  double created_mass_window_margin = 0.0;

  /// quadratic_cost <= C * energy_inequality_rhs
  bool energy_inequality_holds(double C) const { return quadratic_cost <= C * energy_inequality_rhs; }
};

struct ConvergenceInfo {
  bool converged = false;
  bool exact = true;       ///< unregularized program (polished) or entropic
  double epsilon = 0.0;    ///< regularization of the scaling phase (absolute)
  int scaling_iterations = 0;
  int polish_iterations = 0;
  int polish_rounds = 0;
  double marginal_residual = 0.0;
  double dual_increment = 0.0;
  double max_dual_decrease = 0.0;
  double kkt_residual = 0.0;
  double c_concavity_gap = 0.0;
};

/// Dual variables of the scaling/polish phase in node order; used for warm starts.
struct WarmStart {
  Eigen::VectorXd f, g;
};

/// Optimal pair (gamma, h) with potentials and bookkeeping.
/// Node order is the one of NodeLayout: interior cells, then x_lo, x_hi.
struct TransportSolution {
  Eigen::MatrixXd gamma;
  std::vector<double> h;          ///< creation rate per interior cell
  std::vector<double> rho;        ///< target density per interior cell
  std::vector<double> phi;        ///< per node; equals Psi on the boundary
  std::vector<double> phi_star;   ///< per node; equals -Psi on the boundary
  double kappa = 0.0;
  double primal_value = 0.0;      ///< C_tau(gamma, h)
  double regularized_value = 0.0; ///< primal value plus eps KL(gamma | R); equal in exact mode
  double tau = 0.0;
  std::vector<double> positions;
  DiagnosticsReport diagnostics;
  ConvergenceInfo info;
  WarmStart duals;
  std::vector<std::string> warnings;

  std::size_t n_interior() const { return h.size(); }
  double total_mass() const;
};

/// Wb(mu, rho): minimizes sum c~ gamma + tau sum e(h) dx with interior rows = mu
/// and interior columns = (rho + tau h) dx.
TransportSolution solve_fixed_target(const Grid& g, const ModelSpec& spec, double tau,
                                     const Density& mu, const Density& rho,
                                     const SolverOptions& opts = {},
                                     const WarmStart* warm = nullptr);

struct JkoStepResult {
  Density rho_tau;
  TransportSolution solution;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

/// One minimizing-movement step: argmin_rho E(rho) + Wb(mu, rho).
JkoStepResult solve_jko_step(const Grid& g, const ModelSpec& spec, double tau, const Density& mu,
                             const SolverOptions& opts = {}, const WarmStart* warm = nullptr);

struct PotentialReport {
  std::vector<double> phi, phi_star;
  double kappa = 0.0;
  double optimality_residual = 0.0;  ///< max |phi*(x_i) + e'(h_i) - kappa|
  double c_concavity_gap = 0.0;      ///< max (phi(x) + phi*(y) - c(x,y))_+
  double slackness_violation = 0.0;  ///< max over supported pairs of c - phi - phi*
  double trace_residual = 0.0;       ///< max |e'(h_i) - log rho_i - V(x_i)|
};

/// Reads the potentials, fixes the gauge and reports the optimality residuals.
/// The c-concavity gap is measured against the plain quadratic cost, which is
/// the cost paired with the boundary-shifted potentials phi, phi*.
PotentialReport extract_potentials(const TransportSolution& sol, const ModelSpec& spec,
                                   const Grid& g, double tau);

struct TransportMaps {
  std::vector<double> T, S;              ///< barycentric target of each row / source of each column
  std::vector<double> spread_T, spread_S;
  std::vector<bool> T_defined, S_defined;
};

TransportMaps extract_transport_maps(const TransportSolution& sol, const Grid& g);

DiagnosticsReport run_diagnostics(const TransportSolution& sol, const Grid& g,
                                  const ModelSpec& spec, double tau, const Density& mu,
                                  const Density& rho_tau, double E_before, double E_after);

/// Least C with quadratic_cost <= C * rhs over a set of reports (one model, several tau).
double fit_energy_constant(const std::vector<DiagnosticsReport>& reports);

/// Support threshold used by every support-based check.
double mass_floor(const TransportSolution& sol);

}  // namespace rjko
