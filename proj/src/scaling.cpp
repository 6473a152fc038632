#include "rjko/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const double* v, std::size_t n, std::size_t stride) {
  double mx = -kInf;
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k * stride]);
  if (mx == -kInf) return -kInf;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k * stride] - mx);
  return mx + std::log(s);
}

// Safeguarded Newton for an increasing function F on (lo, hi) with F(lo) < 0 < F(hi).
template <class Fn, class Dfn>
double bracketed_newton(Fn F, Dfn dF, double lo, double hi, double x0, double ftol) {
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < 300; ++it) {
    const double fx = F(x);
    if (std::abs(fx) <= ftol) return x;
    if (fx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) return x;
    const double d = dF(x);
    double xn = (std::isfinite(fx) && d > 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return x;
}

// Expands [lo, hi] around the hint until F(lo) < 0 < F(hi).
template <class Fn>
void expand_bracket(Fn F, double hint, double& lo, double& hi) {
  double step = 0.25 * (1.0 + std::abs(hint));
  const double f0 = F(hint);
  if (f0 < 0.0) {
    lo = hint;
    hi = hint + step;
    int guard = 0;
    while (!(F(hi) >= 0.0)) {
      lo = hi;
      step *= 2.0;
      hi += step;
      if (++guard > 200) throw SolverError("prox root-find: upper bracket not found");
    }
  } else {
    hi = hint;
    lo = hint - step;
    int guard = 0;
    while (!(F(lo) < 0.0)) {
      hi = lo;
      step *= 2.0;
      lo -= step;
      if (++guard > 200) throw SolverError("prox root-find: lower bracket not found");
    }
  }
}

}  // namespace

double ConvexMarginal::prox(double log_a, double eps, double hint) const {
  if (log_a == -kInf) throw SolverError("prox root-find: column receives no mass");
  const double target = eps * log_a;
  auto F = [&](double p) {
    const double nu = mass(p);
    if (!(nu > 0.0)) return -kInf;
    return p + eps * std::log(nu) - target;
  };
  auto dF = [&](double p) { return 1.0 + eps * dmass(p) / mass(p); };
  if (!std::isfinite(hint)) hint = 0.0;
  double lo = 0.0, hi = 0.0;
  expand_bracket(F, hint, lo, hi);
  return bracketed_newton(F, dF, lo, hi, hint, 1e-14 * (1.0 + std::abs(target)));
}

double ConvexMarginal::slope_at(double nu, double hint) const {
  if (!(nu > mass_infimum())) {
    throw SolverError("marginal mass " + std::to_string(nu) + " outside the penalty domain");
  }
  auto F = [&](double p) { return mass(p) - nu; };
  auto dF = [&](double p) { return dmass(p); };
  if (!std::isfinite(hint)) hint = 0.0;
  double lo = 0.0, hi = 0.0;
  expand_bracket(F, hint, lo, hi);
  return bracketed_newton(F, dF, lo, hi, hint, 1e-15 * (1.0 + std::abs(nu)));
}

Eigen::MatrixXd scaling_plan(const ScalingProblem& problem, const Eigen::VectorXd& f,
                             const Eigen::VectorXd& g, const Eigen::VectorXd& row_lw,
                             const Eigen::VectorXd& col_lw, double eps) {
  const auto R = problem.cost.rows(), C = problem.cost.cols();
  Eigen::MatrixXd P(R, C);
  for (Eigen::Index j = 0; j < C; ++j) {
    for (Eigen::Index i = 0; i < R; ++i) {
      const double c = problem.cost(i, j);
      P(i, j) = std::isfinite(c) ? std::exp((f(i) + g(j) - c) / eps + row_lw(i) + col_lw(j)) : 0.0;
    }
  }
  return P;
}

ScalingResult generalized_scaling_solve(const ScalingProblem& problem, const ScalingOptions& opts,
                                        const ScalingResult* warm) {
  const Eigen::Index R = problem.cost.rows(), C = problem.cost.cols();
  if (static_cast<std::size_t>(R) != problem.rows.size() ||
      static_cast<std::size_t>(C) != problem.cols.size()) {
    throw InvalidArgument("scaling problem: marginal list does not match cost matrix");
  }
  if (!(opts.eps_start > 0.0) || !(opts.eps_end > 0.0)) {
    throw InvalidArgument("regularization must be positive");
  }
  ScalingResult res;
  res.f = Eigen::VectorXd::Zero(R);
  res.g = Eigen::VectorXd::Zero(C);
  if (warm && warm->f.size() == R && warm->g.size() == C) {
    res.f = warm->f;
    res.g = warm->g;
  }
  double fixed_mass = 0.0;
  for (Eigen::Index i = 0; i < R; ++i) {
    if (problem.rows[i].kind == Marginal::Kind::Free) res.f(i) = 0.0;
    if (problem.rows[i].kind == Marginal::Kind::Fixed) fixed_mass += problem.rows[i].mass;
  }
  for (Eigen::Index j = 0; j < C; ++j) {
    if (problem.cols[j].kind == Marginal::Kind::Free) res.g(j) = 0.0;
  }
  const double mass_scale = std::max(1.0, fixed_mass);

  std::vector<double> levels;
  for (double e = opts.eps_start; e > opts.eps_end * (1.0 + 1e-12); e *= 0.5) levels.push_back(e);
  levels.push_back(opts.eps_end);

  // Column-major log kernel; rows of the transposed copy give contiguous row access.
  Eigen::MatrixXd logK(R, C), logKt(C, R);
  Eigen::VectorXd row_lw = Eigen::VectorXd::Zero(R), col_lw = Eigen::VectorXd::Zero(C);
  std::vector<double> buf(std::max(R, C));
  Eigen::MatrixXd prev_support;

  for (std::size_t lev = 0; lev < levels.size(); ++lev) {
    const double eps = levels[lev];
    const bool last = lev + 1 == levels.size();
    const double tol = last ? opts.tol : std::max(opts.tol, opts.stage_tol);
    if (problem.reference) {
      problem.reference(eps, row_lw, col_lw);
    } else {
      row_lw.setZero();
      col_lw.setZero();
    }
    for (Eigen::Index j = 0; j < C; ++j) {
      for (Eigen::Index i = 0; i < R; ++i) {
        const double c = problem.cost(i, j);
        logK(i, j) = std::isfinite(c) ? -c / eps + row_lw(i) + col_lw(j) : -kInf;
      }
    }
    logKt = logK.transpose();

    double D_prev = -kInf;
    bool level_converged = false;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
      // Row block.
      for (Eigen::Index i = 0; i < R; ++i) {
        const Marginal& mg = problem.rows[i];
        if (mg.kind == Marginal::Kind::Free) continue;
        for (Eigen::Index j = 0; j < C; ++j) buf[j] = logKt(j, i) + res.g(j) / eps;
        const double la = log_sum_exp(buf.data(), C, 1);
        if (mg.kind == Marginal::Kind::Fixed) {
          res.f(i) = mg.mass > 0.0 ? eps * (std::log(mg.mass) - la) : -1e300;
        } else {
          res.f(i) = -mg.penalty->prox(la, eps, -res.f(i));
        }
      }
      // Column block.
      for (Eigen::Index j = 0; j < C; ++j) {
        const Marginal& mg = problem.cols[j];
        if (mg.kind == Marginal::Kind::Free) continue;
        for (Eigen::Index i = 0; i < R; ++i) buf[i] = logK(i, j) + res.f(i) / eps;
        const double la = log_sum_exp(buf.data(), R, 1);
        if (mg.kind == Marginal::Kind::Fixed) {
          res.g(j) = mg.mass > 0.0 ? eps * (std::log(mg.mass) - la) : -1e300;
        } else {
          res.g(j) = -mg.penalty->prox(la, eps, -res.g(j));
        }
      }
      // Residuals and dual objective.
      double D = 0.0, resid = 0.0, plan_sum = 0.0;
      Eigen::VectorXd colsum = Eigen::VectorXd::Zero(C);
      for (Eigen::Index i = 0; i < R; ++i) {
        double rs = 0.0;
        for (Eigen::Index j = 0; j < C; ++j) {
          const double v = logKt(j, i);
          if (v == -kInf) continue;
          const double pij = std::exp(v + (res.f(i) + res.g(j)) / eps);
          rs += pij;
          colsum(j) += pij;
        }
        plan_sum += rs;
        const Marginal& mg = problem.rows[i];
        if (mg.kind == Marginal::Kind::Fixed) {
          resid += std::abs(rs - mg.mass);
          D += res.f(i) * mg.mass;
        } else if (mg.kind == Marginal::Kind::Penalized) {
          const double p = -res.f(i);
          resid += std::abs(rs - mg.penalty->mass(p));
          D += -p * mg.penalty->mass(p) + mg.penalty->penalty(p);
        }
      }
      for (Eigen::Index j = 0; j < C; ++j) {
        const Marginal& mg = problem.cols[j];
        if (mg.kind == Marginal::Kind::Fixed) {
          resid += std::abs(colsum(j) - mg.mass);
          D += res.g(j) * mg.mass;
        } else if (mg.kind == Marginal::Kind::Penalized) {
          const double p = -res.g(j);
          resid += std::abs(colsum(j) - mg.penalty->mass(p));
          D += -p * mg.penalty->mass(p) + mg.penalty->penalty(p);
        }
      }
      D -= eps * plan_sum;
      const double inc = std::isfinite(D_prev) ? D - D_prev : kInf;
      if (opts.check_monotone && std::isfinite(D_prev)) {
        res.max_dual_decrease = std::max(res.max_dual_decrease, -inc / (1.0 + std::abs(D)));
      }
      D_prev = D;
      res.marginal_residual = resid;
      res.dual_increment = std::abs(inc);
      res.dual_objective = D;
      if (resid <= tol * mass_scale && std::abs(inc) <= tol * std::max(1.0, std::abs(D))) {
        level_converged = true;
        ++it;
        break;
      }
    }
    res.iterations += it;
    res.levels = static_cast<int>(lev) + 1;
    res.eps = eps;
    res.converged = level_converged;
    if (!level_converged && last && opts.fail_on_max_iters) {
      throw SolverError("scaling iterations did not converge within " +
                        std::to_string(opts.max_iters) + " iterations (residual " +
                        std::to_string(res.marginal_residual) + ")");
    }
    if (opts.stop_on_stagnation) {
      Eigen::MatrixXd plan = scaling_plan(problem, res.f, res.g, row_lw, col_lw, eps);
      Eigen::MatrixXd support =
          (plan.array() > opts.support_threshold * mass_scale).cast<double>().matrix();
      if (prev_support.size() == support.size() && prev_support == support) break;
      prev_support = std::move(support);
    }
  }
  res.row_lw = row_lw;
  res.col_lw = col_lw;
  res.plan = scaling_plan(problem, res.f, res.g, row_lw, col_lw, res.eps);
  return res;
}

Eigen::VectorXd balanced_reference_log_weights(const std::vector<double>& positions,
                                               std::size_t n_boundary, double dx, double tau,
                                               double eps) {
  const std::size_t N = positions.size();
  const std::size_t n = N - n_boundary;
  const double var = tau * eps;
  // Lattice sum of the kernel in cell units.
  double T = 1.0;
  for (int d = 1; d < 10000; ++d) {
    const double t = 2.0 * std::exp(-0.5 * d * d * dx * dx / var);
    T += t;
    if (t < 1e-17 * T) break;
  }
  Eigen::VectorXd lw = Eigen::VectorXd::Constant(N, 0.5 * std::log(dx));
  for (std::size_t b = n; b < N; ++b) lw(b) = 0.5 * std::log(dx / T);
  Eigen::MatrixXd logK(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      const double d = positions[i] - positions[j];
      logK(i, j) = (i >= n && j >= n) ? -kInf : -0.5 * d * d / var;
    }
  }
  const double target = std::log(dx);
  std::vector<double> buf(N);
  for (int it = 0; it < 100000; ++it) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < N; ++j) buf[j] = logK(i, j) + lw(j);
      const double updated = 0.5 * (lw(i) + target - log_sum_exp(buf.data(), N, 1));
      change = std::max(change, std::abs(updated - lw(i)));
      lw(i) = updated;
    }
    if (change < 1e-15) break;
  }
  return lw;
}

}  // namespace rjko
