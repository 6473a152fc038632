#include "rjko/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <tuple>

#include "rjko/errors.hpp"
#include "rjko/polish.hpp"
#include "rjko/scaling.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Column of a fixed-target problem: nu(p) = dx (rho + tau m(p)), G = tau dx e(m(p)).
class FixedTargetColumn final : public ConvexMarginal {
 public:
  FixedTargetColumn(const ModelSpec& spec, double x, double rho, double dx, double tau)
      : spec_(spec), x_(x), rho_(rho), dx_(dx), tau_(tau) {}
  double mass(double p) const override { return dx_ * (rho_ + tau_ * spec_.m(p, x_)); }
  double dmass(double p) const override { return dx_ * tau_ * spec_.m_prime(p, x_); }
  double penalty(double p) const override { return tau_ * dx_ * spec_.e(spec_.m(p, x_), x_); }
  double mass_infimum() const override {
    const double a = spec_.a(x_);
    return std::isfinite(a) ? dx_ * (rho_ + tau_ * a) : -kInf;
  }

 private:
  const ModelSpec& spec_;
  double x_, rho_, dx_, tau_;
};

// Column of the JKO program: rho and h are split so that log rho + V = e'(h) = p.
class JkoColumn final : public ConvexMarginal {
 public:
  JkoColumn(const ModelSpec& spec, double x, double dx, double tau)
      : spec_(spec), x_(x), v_(spec.V(x)), dx_(dx), tau_(tau) {}
  double mass(double p) const override {
    return dx_ * (std::exp(p - v_) + tau_ * spec_.m(p, x_));
  }
  double dmass(double p) const override {
    return dx_ * (std::exp(p - v_) + tau_ * spec_.m_prime(p, x_));
  }
  double penalty(double p) const override {
    const double rho = std::exp(p - v_);
    return dx_ * (entropy_density(rho, v_) + tau_ * spec_.e(spec_.m(p, x_), x_));
  }
  double mass_infimum() const override {
    const double a = spec_.a(x_);
    return std::isfinite(a) ? dx_ * tau_ * a : -kInf;
  }

 private:
  const ModelSpec& spec_;
  double x_, v_, dx_, tau_;
};

using WeightKey = std::tuple<std::size_t, double, double, double, double>;

const Eigen::VectorXd& cached_reference(const CostMatrix& cm, double dx, double eps) {
  thread_local std::map<WeightKey, Eigen::VectorXd> cache;
  const WeightKey key{cm.layout.n, cm.positions[cm.layout.left()], dx, cm.tau, eps};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() > 256) cache.clear();
  return cache.emplace(key, balanced_reference_log_weights(cm.positions, 2, dx, cm.tau, eps))
      .first->second;
}

double weighted_median(std::vector<std::pair<double, double>> vw) {
  if (vw.empty()) return 0.0;
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& [v, w] : vw) total += w;
  if (!(total > 0.0)) return vw[vw.size() / 2].first;
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

Density floored(const Density& d, double floor, const char* name, std::vector<std::string>& warnings) {
  Density out = d;
  const std::size_t raised = out.floor_in_place(floor);
  if (raised > 0) {
    warnings.push_back(std::string(name) + ": " + std::to_string(raised) +
                       " cell(s) raised to the density floor");
  }
  return out;
}

ScalingProblem make_problem(const CostMatrix& cm, const Density& mu, double dx,
                            std::vector<std::shared_ptr<const ConvexMarginal>> columns) {
  const std::size_t n = cm.layout.n, N = cm.layout.size();
  ScalingProblem pb;
  pb.cost = cm.c;
  pb.rows.resize(N, Marginal::free());
  pb.cols.resize(N, Marginal::free());
  for (std::size_t i = 0; i < n; ++i) {
    pb.rows[i] = Marginal::fixed(mu.mass(i));
    pb.cols[i] = Marginal::penalized(std::move(columns[i]));
  }
  pb.reference = [&cm, dx](double eps, Eigen::VectorXd& rl, Eigen::VectorXd& cl) {
    rl = cached_reference(cm, dx, eps);
    cl = rl;
  };
  return pb;
}

struct RawSolve {
  Eigen::MatrixXd plan;
  Eigen::VectorXd f, g;
  ConvergenceInfo info;
};

RawSolve run_solver(const ScalingProblem& pb, const Grid& g, double tau, const SolverOptions& opts,
                    const WarmStart* warm, std::vector<std::string>& warnings) {
  const double unit = g.dx() * g.dx() / tau;
  const bool exact = !(opts.regularization > 0.0);
  ScalingOptions so;
  so.tol = opts.tol;
  so.max_iters = opts.max_iters;
  so.check_monotone = opts.check_monotone;
  so.fail_on_max_iters = false;
  if (exact) {
    so.eps_start = std::max(opts.eps_initial, opts.eps_floor) * unit;
    so.eps_end = opts.eps_floor * unit;
    so.stop_on_stagnation = true;
  } else {
    so.eps_end = opts.regularization * unit;
    so.eps_start = std::max(opts.eps_initial * unit, so.eps_end);
  }
  ScalingResult seed;
  const ScalingResult* seed_ptr = nullptr;
  if (warm && warm->f.size() == pb.cost.rows() && warm->g.size() == pb.cost.cols()) {
    seed.f = warm->f;
    seed.g = warm->g;
    seed_ptr = &seed;
  }
  ScalingResult sr = generalized_scaling_solve(pb, so, seed_ptr);

  RawSolve out;
  out.info.exact = exact;
  out.info.epsilon = sr.eps;
  out.info.scaling_iterations = sr.iterations;
  out.info.marginal_residual = sr.marginal_residual;
  out.info.dual_increment = sr.dual_increment;
  out.info.max_dual_decrease = sr.max_dual_decrease;
  if (exact && opts.polish) {
    PolishResult pr = polish_exact(pb, sr.plan, sr.f, sr.g);
    out.plan = std::move(pr.plan);
    out.f = std::move(pr.f);
    out.g = std::move(pr.g);
    out.info.epsilon = 0.0;
    out.info.polish_iterations = pr.ipm_iterations;
    out.info.polish_rounds = pr.rounds;
    out.info.marginal_residual = pr.primal_residual;
    out.info.converged = pr.converged;
    if (!pr.converged) warnings.push_back("exact polish did not certify optimality");
  } else {
    out.plan = std::move(sr.plan);
    out.f = std::move(sr.f);
    out.g = std::move(sr.g);
    out.info.converged = sr.converged;
    if (exact) out.info.exact = false;
    if (!sr.converged) warnings.push_back("scaling iterations hit max_iters");
  }
  return out;
}

double integral_psi(const ModelSpec& spec, const Grid& g, const std::vector<double>& masses) {
  double s = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) s += spec.psi_at(g.center(i)) * masses[i];
  return s;
}

// Fills gamma, duals, value and diagnostics once h and rho are known.
void finish(TransportSolution& sol, const RawSolve& raw, const CostMatrix& cm, const Grid& g,
            const ModelSpec& spec, double tau, const Density& mu, double E_before,
            double E_after) {
  const std::size_t n = cm.layout.n, N = cm.layout.size();
  sol.gamma = raw.plan;
  for (std::size_t i = n; i < N; ++i)
    for (std::size_t j = n; j < N; ++j) sol.gamma(i, j) = 0.0;
  sol.tau = tau;
  sol.positions = cm.positions;
  sol.info = raw.info;
  sol.duals = {raw.f, raw.g};

  sol.phi.assign(N, 0.0);
  sol.phi_star.assign(N, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    sol.phi[k] = raw.f(k);
    sol.phi_star[k] = raw.g(k);
  }
  for (std::size_t b = 0; b < 2; ++b) {
    sol.phi[n + b] = cm.boundary_psi[b];
    sol.phi_star[n + b] = -cm.boundary_psi[b];
  }

  double transport = 0.0;
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = 0; i < N; ++i)
      if (!cm.forbidden(i, j) && sol.gamma(i, j) != 0.0) transport += cm(i, j) * sol.gamma(i, j);
  double creation = 0.0;
  for (std::size_t i = 0; i < n; ++i) creation += spec.e(sol.h[i], g.center(i));
  sol.primal_value = transport + tau * g.dx() * creation;

  sol.regularized_value = sol.primal_value;
  if (!raw.info.exact && raw.info.epsilon > 0.0) {
    const Eigen::VectorXd& lw = cached_reference(cm, g.dx(), raw.info.epsilon);
    double kl = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t i = 0; i < N; ++i) {
        if (cm.forbidden(i, j)) continue;
        const double r = std::exp(lw(i) + lw(j));
        const double p = sol.gamma(i, j);
        kl += (p > 0.0 ? p * std::log(p / r) - p : 0.0) + r;
      }
    }
    sol.regularized_value += raw.info.epsilon * kl;
  }

  const PotentialReport pot = extract_potentials(sol, spec, g, tau);
  sol.kappa = pot.kappa;
  sol.info.kkt_residual = pot.optimality_residual;
  sol.info.c_concavity_gap = pot.c_concavity_gap;

  std::vector<double> rho_mass(n);
  for (std::size_t i = 0; i < n; ++i) rho_mass[i] = sol.rho[i] * g.dx();
  sol.diagnostics = run_diagnostics(sol, g, spec, tau, mu,
                                    Density::from_masses(g.dx(), rho_mass), E_before, E_after);
}

void check_inputs(const Grid& g, const ModelSpec& spec, double tau, const Density& mu) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
  if (mu.size() != g.n_cells()) throw InvalidArgument("density does not match the grid");
  if (!spec.cost.e || !spec.cost.m) throw InvalidArgument("model has no cost integrand");
}

}  // namespace

double TransportSolution::total_mass() const { return gamma.sum(); }

double mass_floor(const TransportSolution& sol) { return 1e-12 * sol.gamma.sum(); }

TransportSolution solve_fixed_target(const Grid& g, const ModelSpec& spec, double tau,
                                     const Density& mu_in, const Density& rho_in,
                                     const SolverOptions& opts, const WarmStart* warm) {
  check_inputs(g, spec, tau, mu_in);
  if (rho_in.size() != g.n_cells()) throw InvalidArgument("target does not match the grid");
  TransportSolution sol;
  const Density mu = floored(mu_in, opts.density_floor, "mu", sol.warnings);
  const Density rho = floored(rho_in, opts.density_floor, "rho", sol.warnings);
  const std::size_t n = g.n_cells();
  const double dx = g.dx();
  const CostMatrix cm = build_cost_matrix(g, spec, tau);

  std::vector<std::shared_ptr<const ConvexMarginal>> cols;
  for (std::size_t j = 0; j < n; ++j)
    cols.push_back(std::make_shared<FixedTargetColumn>(spec, g.center(j), rho.density(j), dx, tau));
  const ScalingProblem pb = make_problem(cm, mu, dx, cols);
  const RawSolve raw = run_solver(pb, g, tau, opts, warm, sol.warnings);

  sol.h.resize(n);
  sol.rho.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double nu = raw.plan.col(j).sum();
    double h = (nu / dx - rho.density(j)) / tau;
    const double a = spec.a(g.center(j));
    if (std::isfinite(a) && !(h > a)) {
      // Entropic blur can leave the column at the barrier; use the dual slope instead.
      h = spec.m(-raw.g(j), g.center(j));
      sol.warnings.push_back("column " + std::to_string(j) + " at the creation barrier");
    }
    sol.h[j] = h;
    sol.rho[j] = rho.density(j);
  }
  finish(sol, raw, cm, g, spec, tau, mu, entropy_eval(spec, g, mu), entropy_eval(spec, g, rho));
  return sol;
}

JkoStepResult solve_jko_step(const Grid& g, const ModelSpec& spec, double tau,
                             const Density& mu_in, const SolverOptions& opts,
                             const WarmStart* warm) {
  check_inputs(g, spec, tau, mu_in);
  TransportSolution sol;
  const Density mu = floored(mu_in, opts.density_floor, "mu", sol.warnings);
  const std::size_t n = g.n_cells();
  const double dx = g.dx();
  const CostMatrix cm = build_cost_matrix(g, spec, tau);

  std::vector<std::shared_ptr<const ConvexMarginal>> cols;
  std::vector<std::shared_ptr<const JkoColumn>> jko;
  for (std::size_t j = 0; j < n; ++j) {
    jko.push_back(std::make_shared<JkoColumn>(spec, g.center(j), dx, tau));
    cols.push_back(jko.back());
  }
  const ScalingProblem pb = make_problem(cm, mu, dx, cols);
  const RawSolve raw = run_solver(pb, g, tau, opts, warm, sol.warnings);

  sol.h.resize(n);
  sol.rho.resize(n);
  std::vector<double> masses(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = g.center(j);
    const double nu = raw.plan.col(j).sum();
    const double p = nu > jko[j]->mass_infimum() ? jko[j]->slope_at(nu, -raw.g(j)) : -raw.g(j);
    sol.rho[j] = std::exp(p - spec.V(x));
    sol.h[j] = spec.m(p, x);
    masses[j] = sol.rho[j] * dx;
  }
  JkoStepResult out{Density::from_masses(dx, masses), {}, entropy_eval(spec, g, mu), 0.0};
  out.energy_after = entropy_eval(spec, g, out.rho_tau);
  finish(sol, raw, cm, g, spec, tau, mu, out.energy_before, out.energy_after);
  out.solution = std::move(sol);
  return out;
}

PotentialReport extract_potentials(const TransportSolution& sol, const ModelSpec& spec,
                                   const Grid& g, double tau) {
  const std::size_t n = sol.h.size(), N = n + 2;
  PotentialReport rep;
  rep.phi = sol.phi;
  rep.phi_star = sol.phi_star;
  rep.phi[n] = spec.psi.lower;
  rep.phi[n + 1] = spec.psi.upper;
  rep.phi_star[n] = -spec.psi.lower;
  rep.phi_star[n + 1] = -spec.psi.upper;

  std::vector<std::pair<double, double>> vw;
  std::vector<double> eph(n);
  for (std::size_t i = 0; i < n; ++i) {
    eph[i] = spec.e_prime(sol.h[i], g.center(i));
    const double w = i < static_cast<std::size_t>(sol.gamma.cols()) ? sol.gamma.col(i).sum() : 0.0;
    vw.emplace_back(rep.phi_star[i] + eph[i], w);
  }
  rep.kappa = weighted_median(vw);
  for (std::size_t i = 0; i < n; ++i) {
    rep.optimality_residual =
        std::max(rep.optimality_residual, std::abs(rep.phi_star[i] + eph[i] - rep.kappa));
    if (sol.rho.size() == n && sol.rho[i] > 0.0) {
      const double tr = eph[i] - std::log(sol.rho[i]) - spec.V(g.center(i));
      rep.trace_residual = std::max(rep.trace_residual, std::abs(tr));
    }
  }

  const std::vector<double>& x = sol.positions;
  const double floor = mass_floor(sol);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (i >= n && j >= n) continue;
      const double d = x[i] - x[j];
      const double c = d * d / (2.0 * tau);
      const double gap = rep.phi[i] + rep.phi_star[j] - c;
      rep.c_concavity_gap = std::max(rep.c_concavity_gap, gap);
      if (sol.gamma(i, j) > floor) rep.slackness_violation = std::max(rep.slackness_violation, -gap);
    }
  }
  return rep;
}

TransportMaps extract_transport_maps(const TransportSolution& sol, const Grid& g) {
  const std::size_t n = g.n_cells(), N = n + 2;
  const std::vector<double>& x = sol.positions;
  const double floor = mass_floor(sol);
  TransportMaps tm;
  tm.T.assign(n, 0.0);
  tm.S.assign(n, 0.0);
  tm.spread_T.assign(n, 0.0);
  tm.spread_S.assign(n, 0.0);
  tm.T_defined.assign(n, false);
  tm.S_defined.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0, m1 = 0.0, m2 = 0.0, c = 0.0, c1 = 0.0, c2 = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double r = sol.gamma(i, k), s = sol.gamma(k, i);
      m += r;
      m1 += r * x[k];
      m2 += r * x[k] * x[k];
      c += s;
      c1 += s * x[k];
      c2 += s * x[k] * x[k];
    }
    if (m > floor) {
      tm.T_defined[i] = true;
      tm.T[i] = m1 / m;
      tm.spread_T[i] = std::max(0.0, m2 / m - tm.T[i] * tm.T[i]);
    }
    if (c > floor) {
      tm.S_defined[i] = true;
      tm.S[i] = c1 / c;
      tm.spread_S[i] = std::max(0.0, c2 / c - tm.S[i] * tm.S[i]);
    }
  }
  return tm;
}

DiagnosticsReport run_diagnostics(const TransportSolution& sol, const Grid& g,
                                  const ModelSpec& spec, double tau, const Density& mu,
                                  const Density& rho_tau, double E_before, double E_after) {
  const std::size_t n = g.n_cells(), N = n + 2;
  const std::vector<double>& x = sol.positions;
  DiagnosticsReport d;
  d.mass_floor = mass_floor(sol);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      const double gm = sol.gamma(i, j);
      if (gm <= 0.0 || (i >= n && j >= n)) continue;
      const double dist = std::abs(x[i] - x[j]);
      if (gm > d.mass_floor) d.max_displacement = std::max(d.max_displacement, dist);
      if (i >= n || j >= n) d.boundary_flux += gm;
      d.quadratic_cost += dist * dist / (2.0 * tau) * gm;
    }
  }
  d.kappa_ratio_min = kInf;
  d.kappa_ratio_max = -kInf;
  const double diam = g.length();
  const double psi_sup = std::max(std::abs(spec.psi.lower), std::abs(spec.psi.upper));
  const double r = -diam * diam / (2.0 * tau) - psi_sup - 1.0;
  const double R = diam * diam / tau + 2.0 * psi_sup + 1.0;
  d.created_mass_window_margin = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = sol.h[i];
    d.created_mass_l1 += std::abs(h) * g.dx();
    d.created_mass_linf = std::max(d.created_mass_linf, std::abs(h));
    const double rt = rho_tau.density(i);
    const double denom = rt + tau * h;
    if (denom > 0.0) {
      d.kappa_ratio_min = std::min(d.kappa_ratio_min, rt / denom);
      d.kappa_ratio_max = std::max(d.kappa_ratio_max, rt / denom);
    }
    const double lo = spec.m(r, g.center(i)), hi = spec.m(R, g.center(i)) + 1.0;
    d.created_mass_window_margin = std::min({d.created_mass_window_margin, h - lo, hi - h});
  }
  if (!std::isfinite(d.kappa_ratio_min)) d.kappa_ratio_min = d.kappa_ratio_max = 1.0;
  if (n == 0) d.created_mass_window_margin = 0.0;
  d.created_mass_window_ok = d.created_mass_window_margin >= 0.0;
  d.energy_inequality_rhs = E_before - integral_psi(spec, g, mu.masses()) - E_after +
                            integral_psi(spec, g, rho_tau.masses()) + tau;
  d.optimality_residual = extract_potentials(sol, spec, g, tau).optimality_residual;
  return d;
}

double fit_energy_constant(const std::vector<DiagnosticsReport>& reports) {
  double C = 0.0;
  for (const auto& r : reports) {
    if (r.energy_inequality_rhs > 0.0) C = std::max(C, r.quadratic_cost / r.energy_inequality_rhs);
  }
  return C;
}

}  // namespace rjko
