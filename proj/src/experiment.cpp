#include "rjko/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rjko/audit.hpp"
#include "rjko/brute_force.hpp"
#include "rjko/errors.hpp"
#include "rjko/structure_checks.hpp"

namespace rjko {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string verdict(bool ok) { return ok ? "pass" : "FAIL"; }

struct Suite {
  ReportSection section{"verify", {}};
  bool all = true;
  void add(const std::string& name, bool ok, const std::string& detail) {
    section.lines.emplace_back(name, verdict(ok) + "  " + detail);
    all = all && ok;
  }
};

void run_solve(const ExperimentConfig& cfg, ExperimentResult& out) {
  const Grid g = cfg.grid();
  const ModelSpec spec = cfg.model();
  MovementOptions mo{cfg.solver, true, true};
  const auto traj = run_minimizing_movement(g, spec, cfg.initial_density(g), cfg.tau, cfg.t_final, mo);
  const auto barrier = barrier_check(traj, spec, g);
  const auto ledger = energy_ledger(traj, g, spec);
  ReportSection s{"solve", {}};
  s.lines.emplace_back("model_hash", model_hash(cfg));
  s.lines.emplace_back("tau", num(traj.tau));
  s.lines.emplace_back("steps", std::to_string(traj.steps()));
  s.lines.emplace_back("energy[0]", num(traj.snapshots.front().energy));
  s.lines.emplace_back("energy[N]", num(traj.snapshots.back().energy));
  s.lines.emplace_back("barrier", verdict(barrier.pass) + " (" + std::to_string(barrier.violations) + " violations)");
  s.lines.emplace_back("energy_ledger", verdict(ledger.pass));
  s.lines.emplace_back("warnings", std::to_string(traj.warnings.size()));
  out.sections.push_back(std::move(s));
  out.tables.emplace_back("trajectory", trajectory_table(traj, g, cfg));
  if (cfg.output_diagnostics) out.tables.emplace_back("diagnostics", diagnostics_table(traj, cfg));
}

void run_sweep(const ExperimentConfig& cfg, ExperimentResult& out) {
  const Grid g = cfg.grid();
  const ModelSpec spec = cfg.model();
  const double tau_min = *std::min_element(cfg.tau_list.begin(), cfg.tau_list.end());
  const auto ref = reference_solution(cfg, tau_min);
  MovementOptions mo{cfg.solver, false, true};
  const auto study =
      tau_refinement_study(g, spec, cfg.initial_density(g), cfg.t_final, cfg.tau_list, ref.field(), mo);
  ReportSection s{"sweep", {}};
  for (const auto& r : study.rows) s.lines.emplace_back("tau=" + num(r.tau), "error " + num(r.error));
  s.lines.emplace_back("order", num(study.order));
  s.lines.emplace_back("strictly_decreasing", study.strictly_decreasing ? "yes" : "no");
  out.sections.push_back(std::move(s));
  out.tables.emplace_back("convergence", convergence_table(study, cfg));
}

void run_oracle(const ExperimentConfig& cfg, ExperimentResult& out) {
  const auto fd = reference_solution(cfg, cfg.tau);
  ReportSection s{"oracle", {}};
  s.lines.emplace_back("fd_cells", std::to_string(fd.grid.n_cells()));
  s.lines.emplace_back("time_steps", std::to_string(fd.times.size() - 1));
  s.lines.emplace_back("halvings_used", std::to_string(fd.halvings_used));
  s.lines.emplace_back("min_rho", num(fd.values.minCoeff()));
  s.lines.emplace_back("max_rho", num(fd.values.maxCoeff()));
  out.sections.push_back(std::move(s));
  out.tables.emplace_back("fd", fd_table(fd, cfg));
}

void run_compare(const ExperimentConfig& cfg, ExperimentResult& out) {
  const Grid g = cfg.grid();
  const ModelSpec spec = cfg.model();
  const auto traj = run_minimizing_movement(g, spec, cfg.initial_density(g), cfg.tau, cfg.t_final,
                                            MovementOptions{cfg.solver, false, true});
  const auto fd = reference_solution(cfg, cfg.tau);
  const double d = compare_trajectories(traj, g, fd, cfg.t_final);
  ReportSection s{"compare", {}};
  s.lines.emplace_back("tau", num(cfg.tau));
  s.lines.emplace_back("fd_cells", std::to_string(fd.grid.n_cells()));
  s.lines.emplace_back("l2_loc_distance", num(d));
  out.sections.push_back(std::move(s));
  out.tables.emplace_back("trajectory", trajectory_table(traj, g, cfg));
}

void run_audit(const ExperimentConfig& cfg, ExperimentResult& out) {
  const Grid g = cfg.grid();
  const auto audit = validate_assumptions(cfg.model(), g);
  ReportSection s{"audit", {}};
  s.lines.emplace_back("C0", num(audit.C0));
  s.lines.emplace_back("s", num(audit.s));
  s.lines.emplace_back("B0", num(audit.B0));
  for (const auto& c : audit.checks)
    s.lines.emplace_back(c.id, verdict(c.pass) + "  worst " + num(c.worst) + (c.note.empty() ? "" : "  " + c.note));
  out.sections.push_back(std::move(s));
  if (!audit.all_pass()) out.exit_code = kExitCheckFailed;
}

void run_verify(const ExperimentConfig& cfg, ExperimentResult& out) {
  const ModelSpec spec = cfg.model();
  Suite suite;

  // Brute-force equivalence on the smallest grids.
  for (std::size_t n : {1, 2, 3}) {
    const Grid gs(cfg.x_lo, cfg.x_hi, n);
    const auto mu = cfg.initial_density(gs);
    const auto r = check_against_brute_force(gs, spec, cfg.tau, mu, nullptr, cfg.solver);
    suite.add("brute_force_jko_n" + std::to_string(n), r.pass(),
              "value err " + num(r.value_error) + ", h err " + num(r.h_error));
  }
  {
    const Grid gs(cfg.x_lo, cfg.x_hi, 2);
    const auto mu = cfg.initial_density(gs);
    const auto rho = Density::uniform(gs, 0.5 * (cfg.rho_D.lower + cfg.rho_D.upper));
    const auto r = check_against_brute_force(gs, spec, cfg.tau, mu, &rho, cfg.solver);
    suite.add("brute_force_fixed_n2", r.pass(), "value err " + num(r.value_error) + ", h err " + num(r.h_error));
  }

  // Structure of every step of a short trajectory on a small grid.
  const Grid g(cfg.x_lo, cfg.x_hi, std::min<std::size_t>(cfg.n_cells, 16));
  const double t_final = std::min(cfg.t_final, 5.0 * cfg.tau);
  MovementOptions mo{cfg.solver, true, true};
  const auto traj = run_minimizing_movement(g, spec, cfg.initial_density(g), cfg.tau, t_final, mo);
  double trace = 0.0, kappa = 0.0, gap = 0.0, pert = -1e300, cyc = -1e300;
  bool pert_ok = true, cyc_ok = true, mass_ok = true;
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    const auto& sol = *traj.snapshots[k].solution;
    const auto pr = extract_potentials(sol, spec, g, traj.tau);
    trace = std::max(trace, pr.trace_residual);
    kappa = std::max(kappa, pr.optimality_residual);
    gap = std::max(gap, pr.c_concavity_gap);
    const auto pi = perturbation_inequalities(sol, spec, g, 1e-5);
    for (double w : pi.worst) pert = std::max(pert, w);
    pert_ok = pert_ok && pi.pass;
    const auto cm = cyclical_monotonicity(sol, spec);
    cyc = std::max(cyc, cm.worst);
    cyc_ok = cyc_ok && cm.pass;
    const auto tm = transported_mass_bound(sol, traj.snapshots[k - 1].rho);
    if (tm.lambda0 > 0.0) mass_ok = mass_ok && tm.pass;
  }
  suite.add("trace_residual", trace <= 1e-5, num(trace) + " <= 1e-05");
  suite.add("kappa_constancy", kappa <= 1e-5, num(kappa) + " <= 1e-05");
  suite.add("c_concavity_gap", gap <= 1e-6, num(gap) + " <= 1e-06");
  suite.add("perturbation_inequalities", pert_ok, "worst " + num(pert));
  suite.add("cyclical_monotonicity", cyc_ok, "worst " + num(cyc));
  suite.add("transported_mass", mass_ok, "rho + tau h >= lambda0 / 4");
  const auto barrier = barrier_check(traj, spec, g);
  suite.add("barriers", barrier.pass, std::to_string(barrier.violations) + " violations");
  const auto ledger = energy_ledger(traj, g, spec);
  suite.add("energy_ledger", ledger.pass,
            "sum cost " + num(ledger.quadratic_cost_sum) + ", rhs " + num(ledger.telescoped_rhs));

  out.sections.push_back(std::move(suite.section));
  out.tables.emplace_back("diagnostics", diagnostics_table(traj, cfg));
  if (!suite.all) out.exit_code = kExitCheckFailed;
}

}  // namespace

std::optional<Command> command_from_name(const std::string& name) {
  if (name == "solve") return Command::Solve;
  if (name == "sweep") return Command::Sweep;
  if (name == "oracle") return Command::Oracle;
  if (name == "compare") return Command::Compare;
  if (name == "audit") return Command::Audit;
  if (name == "verify") return Command::Verify;
  return std::nullopt;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Sweep: return "sweep";
    case Command::Oracle: return "oracle";
    case Command::Compare: return "compare";
    case Command::Audit: return "audit";
    case Command::Verify: return "verify";
  }
  return "?";
}

FDSolution reference_solution(const ExperimentConfig& cfg, double tau_min) {
  const Grid fine(cfg.x_lo, cfg.x_hi, cfg.n_cells * static_cast<std::size_t>(cfg.oracle_space_factor));
  return solve_fd(fine, cfg.model(), cfg.initial_density(fine), cfg.t_final,
                  tau_min / cfg.oracle_time_factor);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, Command cmd, bool write_files) {
  ExperimentResult out;
  try {
    switch (cmd) {
      case Command::Solve: run_solve(cfg, out); break;
      case Command::Sweep: run_sweep(cfg, out); break;
      case Command::Oracle: run_oracle(cfg, out); break;
      case Command::Compare: run_compare(cfg, out); break;
      case Command::Audit: run_audit(cfg, out); break;
      case Command::Verify: run_verify(cfg, out); break;
    }
    if (write_files) out.written = emit_report(cfg, out.sections, out.tables);
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const SolverError& e) {
    out.exit_code = kExitSolver;
    out.message = e.what();
  } catch (const IoError& e) {
    out.exit_code = kExitIo;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitInternal;
    out.message = e.what();
  }
  return out;
}

}  // namespace rjko
