#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rjko/audit.hpp"
#include "rjko/density.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/solver_options.hpp"
#include "rjko/space_time.hpp"
#include "rjko/transport.hpp"

namespace rjko {

/// L-infinity envelopes for the discrete flow:
///   lower_n(x) = (1 + C0 tau)^{-n} lambda e^{-V(x)} / sup e^{-V}
///   upper(x)   = Lambda e^{-V(x)} / inf e^{-V}
struct BarrierBounds {
  double lambda = 0.0;
  double Lambda = 0.0;
  double C0 = 1.0;
  double sup_exp_minus_V = 1.0;
  double inf_exp_minus_V = 1.0;
  double window = 0.0;           ///< eps of the barrier proposition, computed from the model
  bool lambda_clipped = false;   ///< rho0 alone would allow a larger lambda
  bool Lambda_clipped = false;

  double lower(const ModelSpec& spec, double x, std::size_t n, double tau) const;
  double upper(const ModelSpec& spec, double x) const;
  /// Continuum form with e^{-C0 t} in place of the iterated factor.
  double lower_continuum(const ModelSpec& spec, double x, double t) const;
};

/// lambda = inf rho0 sup e^{-V} / e^{-V}, Lambda = sup rho0 inf e^{-V} / e^{-V},
/// then clipped into (0, 0.99 eps) and (1 / (0.99 eps), inf). eps is the
/// largest window for which the small-mass bound and the boundary comparison
/// of the barrier argument hold: min(s, min rho_D, 1 / max(max rho_D, sup r0)),
/// r0(x) = exp(e'(0, x) - V(x)) the density at which no mass is created.
BarrierBounds calibrate_barriers(const ModelSpec& spec, const Grid& g, const AssumptionAudit& audit,
                                 const Density& rho0);

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  Density rho;
  double energy = 0.0;
  double step_cost = 0.0;  ///< Wb(rho_{n-1}, rho_n); zero for the initial snapshot
  DiagnosticsReport diagnostics;
  ConvergenceInfo info;
  std::optional<TransportSolution> solution;  ///< kept when requested
};

struct Trajectory {
  double tau = 0.0;
  double t_final = 0.0;
  std::vector<StepRecord> snapshots;
  BarrierBounds barrier;
  std::vector<std::string> warnings;

  std::size_t steps() const { return snapshots.empty() ? 0 : snapshots.size() - 1; }
  SpaceTimeField field(const Grid& g) const;
};

struct MovementOptions {
  SolverOptions solver;
  bool keep_solutions = false;
  bool warm_start = true;
};

/// Number of steps is ceil(t_final / tau); snapshot n sits at t = n tau.
Trajectory run_minimizing_movement(const Grid& g, const ModelSpec& spec, const Density& rho0,
                                   double tau, double t_final, const MovementOptions& opts = {});

struct StepBarrier {
  std::size_t step = 0;
  double lower_margin = 0.0;  ///< min over cells of rho / lower - 1
  double upper_margin = 0.0;  ///< min over cells of 1 - rho / upper
  bool pass = true;
  bool continuum_pass = true;
};

struct BarrierReport {
  std::vector<StepBarrier> steps;
  std::size_t violations = 0;
  double worst_lower_margin = 0.0;
  double worst_upper_margin = 0.0;
  bool pass = true;
};

/// Relative tolerance `tol` absorbs solver round-off only.
BarrierReport barrier_check(const Trajectory& traj, const ModelSpec& spec, const Grid& g,
                            double tol = 1e-9);

/// rho^tau(t) = rho_{floor(t / tau)}.
const Density& trajectory_interpolate(const Trajectory& traj, double t);

struct RefinementRow {
  double tau = 0.0;
  double error = 0.0;
  std::size_t steps = 0;
  double seconds = 0.0;
  bool converged = true;
};

struct RefinementStudy {
  std::vector<RefinementRow> rows;
  double order = 0.0;  ///< least-squares slope of log error vs log tau
  bool strictly_decreasing = true;
};

/// Runs one trajectory per tau (in parallel) and measures the L2(0,t_final;L2_loc)
/// distance to the reference field.
RefinementStudy tau_refinement_study(const Grid& g, const ModelSpec& spec, const Density& rho0,
                                     double t_final, const std::vector<double>& tau_list,
                                     const SpaceTimeField& reference,
                                     const MovementOptions& opts = {});

struct LedgerEntry {
  std::size_t step = 0;  ///< transition step-1 -> step
  double energy_before = 0.0;
  double energy_after = 0.0;
  double step_cost = 0.0;
  double self_cost = 0.0;  ///< Wb(rho_{n-1}, rho_{n-1}); computed on request
  bool holds = true;       ///< E_after + step_cost <= E_before + self_cost (+ slack)
};

struct EnergyLedger {
  std::vector<LedgerEntry> entries;
  double quadratic_cost_sum = 0.0;
  double telescoped_rhs = 0.0;  ///< E0 - int Psi rho0 - E_N + int Psi rho_N + N tau
  bool pass = true;
};

EnergyLedger energy_ledger(const Trajectory& traj, const Grid& g, const ModelSpec& spec,
                           bool compute_self_cost = false, const SolverOptions& opts = {},
                           double slack = 1e-8);

/// sqrt(tau) (t1 - t0) + tau |E(t0) - E(t1)|.
double weak_form_budget(const Trajectory& traj, double t0, double t1);

/// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rjko
