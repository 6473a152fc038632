#include "rjko/gradient_flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double integral_psi(const ModelSpec& spec, const Grid& g, const Density& rho) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += spec.psi_at(g.center(i)) * rho.mass(i);
  return s;
}

}  // namespace

double BarrierBounds::lower(const ModelSpec& spec, double x, std::size_t n, double tau) const {
  return std::pow(1.0 + C0 * tau, -static_cast<double>(n)) * lambda * std::exp(-spec.V(x)) /
         sup_exp_minus_V;
}

double BarrierBounds::upper(const ModelSpec& spec, double x) const {
  return Lambda * std::exp(-spec.V(x)) / inf_exp_minus_V;
}

double BarrierBounds::lower_continuum(const ModelSpec& spec, double x, double t) const {
  return lambda * std::exp(-(C0 * t + spec.V(x))) / sup_exp_minus_V;
}

BarrierBounds calibrate_barriers(const ModelSpec& spec, const Grid& g, const AssumptionAudit& audit,
                                 const Density& rho0) {
  if (rho0.size() != g.n_cells()) throw InvalidArgument("initial density does not match the grid");
  if (!(rho0.min_density() > 0.0)) throw InvalidArgument("initial density must be positive");
  BarrierBounds b;
  b.C0 = audit.C0;
  std::vector<double> xs = g.centers();
  xs.push_back(g.x_lo());
  xs.push_back(g.x_hi());
  b.sup_exp_minus_V = 0.0;
  b.inf_exp_minus_V = kInf;
  double sup_r0 = 0.0;
  for (double x : xs) {
    const double w = std::exp(-spec.V(x));
    b.sup_exp_minus_V = std::max(b.sup_exp_minus_V, w);
    b.inf_exp_minus_V = std::min(b.inf_exp_minus_V, w);
    sup_r0 = std::max(sup_r0, std::exp(spec.e_prime(0.0, x) - spec.V(x)));
  }
  const double rho_D_min = std::min(spec.rho_D.lower, spec.rho_D.upper);
  const double rho_D_max = std::max(spec.rho_D.lower, spec.rho_D.upper);
  b.window = std::min({audit.s, rho_D_min, 1.0 / std::max(rho_D_max, sup_r0)});

  double lam = kInf, Lam = 0.0;
  for (std::size_t i = 0; i < g.n_cells(); ++i) {
    const double w = std::exp(-spec.V(g.center(i)));
    lam = std::min(lam, rho0.density(i) * b.sup_exp_minus_V / w);
    Lam = std::max(Lam, rho0.density(i) * b.inf_exp_minus_V / w);
  }
  const double theta = 0.99;
  b.lambda = std::min(lam, theta * b.window);
  b.Lambda = std::max(Lam, 1.0 / (theta * b.window));
  b.lambda_clipped = b.lambda < lam;
  b.Lambda_clipped = b.Lambda > Lam;
  return b;
}

SpaceTimeField Trajectory::field(const Grid& g) const {
  SpaceTimeField f;
  f.x_lo = g.x_lo();
  f.x_hi = g.x_hi();
  f.interp = SpaceTimeField::TimeInterp::Floor;
  f.values.resize(static_cast<Eigen::Index>(snapshots.size()), static_cast<Eigen::Index>(g.n_cells()));
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    f.times.push_back(snapshots[k].t);
    for (std::size_t i = 0; i < g.n_cells(); ++i) f.values(k, i) = snapshots[k].rho.density(i);
  }
  return f;
}

Trajectory run_minimizing_movement(const Grid& g, const ModelSpec& spec, const Density& rho0,
                                   double tau, double t_final, const MovementOptions& opts) {
  if (!(tau > 0.0) || !(t_final > 0.0) || !(tau < t_final * (1.0 + 1e-12))) {
    throw InvalidArgument("need 0 < tau <= t_final");
  }
  if (rho0.size() != g.n_cells()) throw InvalidArgument("initial density does not match the grid");
  for (std::size_t i = 0; i < rho0.size(); ++i) {
    if (!(rho0.density(i) > 0.0)) throw InvalidArgument("initial density must be positive in every cell");
  }
  Trajectory traj;
  traj.tau = tau;
  traj.t_final = t_final;
  const AssumptionAudit audit = validate_assumptions(spec, g);
  traj.barrier = calibrate_barriers(spec, g, audit, rho0);
  if (traj.barrier.lambda_clipped || traj.barrier.Lambda_clipped) {
    traj.warnings.push_back("initial data outside the barrier window; barriers are monitored only");
  }

  const auto N = static_cast<std::size_t>(std::ceil(t_final / tau - 1e-9));
  StepRecord first;
  first.rho = rho0;
  first.energy = entropy_eval(spec, g, rho0);
  first.info.converged = true;
  traj.snapshots.push_back(std::move(first));

  WarmStart warm;
  for (std::size_t n = 1; n <= N; ++n) {
    const Density& mu = traj.snapshots.back().rho;
    JkoStepResult res;
    try {
      res = solve_jko_step(g, spec, tau, mu, opts.solver,
                           opts.warm_start && warm.f.size() ? &warm : nullptr);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(n) + ": " + e.what());
    }
    if (!res.solution.info.converged) {
      throw SolverError("step " + std::to_string(n) + ": solver did not converge");
    }
    for (const auto& w : res.solution.warnings) {
      traj.warnings.push_back("step " + std::to_string(n) + ": " + w);
    }
    warm = res.solution.duals;
    StepRecord rec;
    rec.step = n;
    rec.t = static_cast<double>(n) * tau;
    rec.rho = res.rho_tau;
    rec.energy = res.energy_after;
    rec.step_cost = res.solution.primal_value;
    rec.diagnostics = res.solution.diagnostics;
    rec.info = res.solution.info;
    if (opts.keep_solutions) rec.solution = std::move(res.solution);
    traj.snapshots.push_back(std::move(rec));
  }
  return traj;
}

BarrierReport barrier_check(const Trajectory& traj, const ModelSpec& spec, const Grid& g,
                            double tol) {
  BarrierReport rep;
  rep.worst_lower_margin = kInf;
  rep.worst_upper_margin = kInf;
  for (const auto& s : traj.snapshots) {
    StepBarrier sb;
    sb.step = s.step;
    sb.lower_margin = kInf;
    sb.upper_margin = kInf;
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      const double x = g.center(i), r = s.rho.density(i);
      const double lo = traj.barrier.lower(spec, x, s.step, traj.tau);
      const double hi = traj.barrier.upper(spec, x);
      sb.lower_margin = std::min(sb.lower_margin, r / lo - 1.0);
      sb.upper_margin = std::min(sb.upper_margin, 1.0 - r / hi);
      if (r < traj.barrier.lower_continuum(spec, x, s.t) * (1.0 - tol)) sb.continuum_pass = false;
    }
    sb.pass = sb.lower_margin >= -tol && sb.upper_margin >= -tol;
    if (!sb.pass || !sb.continuum_pass) ++rep.violations;
    rep.worst_lower_margin = std::min(rep.worst_lower_margin, sb.lower_margin);
    rep.worst_upper_margin = std::min(rep.worst_upper_margin, sb.upper_margin);
    rep.steps.push_back(sb);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

const Density& trajectory_interpolate(const Trajectory& traj, double t) {
  if (traj.snapshots.empty()) throw InvalidArgument("empty trajectory");
  const double slack = 1e-9 * traj.tau;
  if (t < -slack || t > traj.t_final + slack) throw InvalidArgument("time outside [0, t_final]");
  auto k = static_cast<std::size_t>(std::floor(t / traj.tau + 1e-9));
  k = std::min(k, traj.snapshots.size() - 1);
  return traj.snapshots[k].rho;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) throw InvalidArgument("need at least two points for a slope");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RefinementStudy tau_refinement_study(const Grid& g, const ModelSpec& spec, const Density& rho0,
                                     double t_final, const std::vector<double>& tau_list,
                                     const SpaceTimeField& reference,
                                     const MovementOptions& opts) {
  if (tau_list.size() < 3) throw InvalidArgument("tau_list needs at least three entries");
  for (std::size_t k = 1; k < tau_list.size(); ++k) {
    if (!(tau_list[k] < tau_list[k - 1])) throw InvalidArgument("tau_list must be strictly decreasing");
  }
  if (std::abs(reference.x_lo - g.x_lo()) > 1e-12 || std::abs(reference.x_hi - g.x_hi()) > 1e-12) {
    throw InvalidArgument("reference lives on a different interval");
  }
  std::vector<std::future<RefinementRow>> jobs;
  for (double tau : tau_list) {
    jobs.push_back(std::async(std::launch::async, [&, tau] {
      const auto t0 = std::chrono::steady_clock::now();
      const Trajectory tr = run_minimizing_movement(g, spec, rho0, tau, t_final, opts);
      RefinementRow row;
      row.tau = tau;
      row.steps = tr.steps();
      row.error = l2_loc_distance(tr.field(g), reference, t_final);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return row;
    }));
  }
  RefinementStudy st;
  std::vector<double> taus, errs;
  for (auto& j : jobs) {
    st.rows.push_back(j.get());
    taus.push_back(st.rows.back().tau);
    errs.push_back(st.rows.back().error);
  }
  for (std::size_t k = 1; k < errs.size(); ++k) {
    if (!(errs[k] < errs[k - 1])) st.strictly_decreasing = false;
  }
  bool positive = true;
  for (double e : errs) positive = positive && e > 0.0;
  st.order = positive ? log_log_slope(taus, errs) : 0.0;
  return st;
}

EnergyLedger energy_ledger(const Trajectory& traj, const Grid& g, const ModelSpec& spec,
                           bool compute_self_cost, const SolverOptions& opts, double slack) {
  EnergyLedger led;
  for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
    const StepRecord& prev = traj.snapshots[n - 1];
    const StepRecord& cur = traj.snapshots[n];
    LedgerEntry e;
    e.step = n;
    e.energy_before = prev.energy;
    e.energy_after = cur.energy;
    e.step_cost = cur.step_cost;
    if (compute_self_cost) {
      e.self_cost = solve_fixed_target(g, spec, traj.tau, prev.rho, prev.rho, opts).primal_value;
    }
    e.holds = e.energy_after + e.step_cost <=
              e.energy_before + e.self_cost + slack * (1.0 + std::abs(e.energy_before));
    led.pass = led.pass && e.holds;
    led.quadratic_cost_sum += cur.diagnostics.quadratic_cost;
    led.entries.push_back(e);
  }
  if (!traj.snapshots.empty()) {
    const StepRecord& a = traj.snapshots.front();
    const StepRecord& b = traj.snapshots.back();
    led.telescoped_rhs = a.energy - integral_psi(spec, g, a.rho) - b.energy +
                         integral_psi(spec, g, b.rho) + static_cast<double>(traj.steps()) * traj.tau;
  }
  return led;
}

double weak_form_budget(const Trajectory& traj, double t0, double t1) {
  const auto k0 = static_cast<std::size_t>(std::llround(t0 / traj.tau));
  const auto k1 = static_cast<std::size_t>(std::llround(t1 / traj.tau));
  if (k1 >= traj.snapshots.size() || k0 > k1) throw InvalidArgument("budget window outside trajectory");
  const double dE = std::abs(traj.snapshots[k0].energy - traj.snapshots[k1].energy);
  return std::sqrt(traj.tau) * (t1 - t0) + traj.tau * dE;
}

}  // namespace rjko
