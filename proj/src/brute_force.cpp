#include "rjko/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rjko/cost_matrix.hpp"
#include "rjko/errors.hpp"
#include "rjko/transport.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls fn on every k-subset of {0..m-1}.
void for_each_subset(std::size_t m, std::size_t k,
                     const std::function<void(const std::vector<std::size_t>&)>& fn) {
  if (k > m) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

DualVertexSet::DualVertexSet(const Grid& g, const ModelSpec& spec, double tau, bool use_boundary)
    : n_(g.n_cells()), boundary_(use_boundary) {
  if (n_ + 2 > 5) throw InvalidArgument("brute force oracle: at most 5 nodes");
  const CostMatrix cm = build_cost_matrix(g, spec, tau);
  const std::size_t n = n_, L = cm.layout.left(), R = cm.layout.right();
  dplus_.resize(n);
  dminus_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    dplus_[i] = std::min(cm(i, L), cm(i, R));
    dminus_[i] = std::min(cm(L, i), cm(R, i));
  }

  // Constraint rows over the full variable vector (u, v).
  const std::size_t nv = 2 * n;
  std::vector<Eigen::VectorXd> A;
  std::vector<double> b;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(nv);
      a(i) = 1.0;
      a(n + j) = 1.0;
      A.push_back(a);
      b.push_back(cm(i, j));
    }
  }
  if (use_boundary) {
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(nv);
      a(i) = 1.0;
      A.push_back(a);
      b.push_back(dplus_[i]);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
      c(n + i) = 1.0;
      A.push_back(c);
      b.push_back(dminus_[i]);
    }
  }
  // The gauge u_0 = 0 removes the first variable in the balanced case.
  const std::size_t first = use_boundary ? 0 : 1;
  const std::size_t k = nv - first;
  double scale = 1.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  const double feas_tol = 1e-10 * scale;

  for_each_subset(A.size(), k, [&](const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd M(k, k);
    Eigen::VectorXd rhs(k);
    for (std::size_t r = 0; r < k; ++r) {
      M.row(r) = A[rows[r]].tail(k).transpose();
      rhs(r) = b[rows[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() < static_cast<Eigen::Index>(k)) return;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(nv);
    z.tail(k) = lu.solve(rhs);
    for (std::size_t r = 0; r < A.size(); ++r) {
      if (A[r].dot(z) > b[r] + feas_tol) return;
    }
    for (const auto& w : vertices_) {
      if ((w - z).lpNorm<Eigen::Infinity>() <= feas_tol) return;
    }
    vertices_.push_back(z);
  });
  if (vertices_.empty()) throw SolverError("brute force oracle: dual polyhedron has no vertex");
}

double DualVertexSet::value(const std::vector<double>& mu, const std::vector<double>& nu) const {
  for (double v : nu)
    if (v < 0.0) return kInf;
  double best = -kInf;
  for (const auto& z : vertices_) {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += z(i) * mu[i] + z(n_ + i) * nu[i];
    best = std::max(best, s);
  }
  return best;
}

double single_cell_lp_value(double d_plus, double d_minus, double mu, double nu) {
  if (d_plus + d_minus >= 0.0) {
    return std::max(mu - nu, 0.0) * d_plus + std::max(nu - mu, 0.0) * d_minus;
  }
  // Cycling through the boundary pays: send everything out and bring everything in.
  return mu * d_plus + nu * d_minus;
}

BruteForceResult brute_force_small(const Grid& g, const ModelSpec& spec, double tau,
                                   const Density& mu, const Density* rho,
                                   const BruteForceOptions& opts) {
  const std::size_t n = g.n_cells();
  if (n + 2 > 5) throw InvalidArgument("brute force oracle: at most 5 nodes");
  if (opts.grid < 2 || opts.refine_points < 3) throw InvalidArgument("brute force grid too small");
  const DualVertexSet duals(g, spec, tau, opts.use_boundary);
  const double dx = g.dx();
  const double diam = g.length();
  const double psi_sup = std::max(std::abs(spec.psi.lower), std::abs(spec.psi.upper));
  const double r = -diam * diam / (2.0 * tau) - psi_sup - 1.0;
  const double Rr = diam * diam / tau + 2.0 * psi_sup + 1.0;

  std::vector<double> lo(n), hi(n), xs(n), vs(n);
  for (std::size_t j = 0; j < n; ++j) {
    xs[j] = g.center(j);
    vs[j] = spec.V(xs[j]);
    lo[j] = r;
    hi[j] = spec.e_prime(spec.m(Rr, xs[j]) + 1.0, xs[j]);
  }

  BruteForceResult res;
  res.vertices = duals.vertex_count();
  std::vector<double> nu(n);
  // Column terms depend on p_j alone: mass nu_j and the penalty for cell j.
  auto column = [&](std::size_t j, double pj, double& nu_j) {
    const double h = spec.m(pj, xs[j]);
    const double rj = rho ? rho->density(j) : std::exp(pj - vs[j]);
    nu_j = dx * (rj + tau * h);
    double pen = tau * dx * spec.e(h, xs[j]);
    if (!rho) pen += dx * entropy_density(rj, vs[j]);
    return pen;
  };
  auto column_slope = [&](std::size_t j, double pj) {
    const double d = tau * spec.m_prime(pj, xs[j]);
    return dx * (rho ? d : d + std::exp(pj - vs[j]));
  };

  struct Cand {
    std::vector<double> p;
    double val;
  };
  std::vector<Cand> evaluated;
  std::vector<double> point(n);
  std::vector<std::vector<double>> axis_p(n), axis_nu(n), axis_pen(n);
  auto sweep = [&](const std::vector<double>& center, double spacing, int pts) {
    const double half = 0.5 * (pts - 1);
    for (std::size_t j = 0; j < n; ++j) {
      axis_p[j].resize(pts);
      axis_nu[j].resize(pts);
      axis_pen[j].resize(pts);
      for (int k = 0; k < pts; ++k) {
        axis_p[j][k] = std::clamp(center[j] + (k - half) * spacing, lo[j], hi[j]);
        axis_pen[j][k] = column(j, axis_p[j][k], axis_nu[j][k]);
      }
    }
    std::vector<int> k(n, 0);
    while (true) {
      ++res.evaluations;
      double pen = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        point[j] = axis_p[j][k[j]];
        nu[j] = axis_nu[j][k[j]];
        pen += axis_pen[j][k[j]];
      }
      const double v = duals.value(mu.masses(), nu) + pen;
      if (std::isfinite(v)) evaluated.push_back({point, v});
      std::size_t j = 0;
      while (j < n && ++k[j] == pts) k[j++] = 0;
      if (j == n) break;
    }
  };
  auto select = [&](double min_sep) {
    std::sort(evaluated.begin(), evaluated.end(),
              [](const Cand& a, const Cand& b) { return a.val < b.val; });
    std::vector<Cand> kept;
    for (auto& c : evaluated) {
      bool distinct = true;
      for (const auto& k : kept) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(c.p[j] - k.p[j]));
        if (d < min_sep) {
          distinct = false;
          break;
        }
      }
      if (distinct) kept.push_back(std::move(c));
      if (static_cast<int>(kept.size()) >= opts.keep) break;
    }
    evaluated = std::move(kept);
  };

  // First pass: uniform grid on the window, one spacing per cell.
  double spacing = 0.0;
  std::vector<double> center(n);
  for (std::size_t j = 0; j < n; ++j) {
    center[j] = 0.5 * (lo[j] + hi[j]);
    spacing = std::max(spacing, (hi[j] - lo[j]) / (opts.grid - 1));
  }
  sweep(center, spacing, opts.grid);
  if (evaluated.empty()) throw SolverError("brute force oracle: no feasible grid point");
  select(0.5 * spacing);

  while (spacing > opts.p_tol) {
    const double next = 2.0 * opts.zoom_span * spacing / (opts.refine_points - 1);
    const std::vector<Cand> centers = evaluated;
    for (const auto& c : centers) sweep(c.p, next, opts.refine_points);
    spacing = next;
    select(0.5 * spacing);
  }

  Cand best = evaluated.front();
  res.final_spacing = spacing;

  // Exact stage. The objective is max_z phi_z(p) over the dual vertices, each
  // phi_z = u_z.mu + v_z.nu(p) + pen(p) separable in p, and every column is
  // stationary at p_j = -w_j for the weighted dual value w_j. So the minimizer
  // is p = -sum_a lambda_a v_a over an active set A with equal phi_a. The grid
  // search alone stalls in kinked valleys that are not aligned with the axes.
  if (opts.use_boundary) {
    const auto& verts = duals.vertices();
    const auto& mass = mu.masses();
    auto eval = [&](const std::vector<double>& p, std::vector<double>& nu_p) {
      double pen = 0.0;
      for (std::size_t j = 0; j < n; ++j) pen += column(j, p[j], nu_p[j]);
      return duals.value(mass, nu_p) + pen;
    };
    auto phi = [&](const Eigen::VectorXd& z, const std::vector<double>& nu_p) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += z(i) * mass[i] + z(n + i) * nu_p[i];
      return v;
    };
    std::vector<double> nu_best(n);
    const double F_best = eval(best.p, nu_best);
    const double scale = 1.0 + std::abs(F_best);
    std::vector<std::size_t> near;
    for (std::size_t z = 0; z < verts.size(); ++z)
      if (phi(verts[z], nu_best) >= duals.value(mass, nu_best) - 1e-2 * scale) near.push_back(z);

    std::vector<double> p(n), nu_p(n);
    auto try_set = [&](const std::vector<std::size_t>& sel) {
      const std::size_t k = sel.size();
      std::vector<const Eigen::VectorXd*> A(k);
      for (std::size_t a = 0; a < k; ++a) A[a] = &verts[near[sel[a]]];
      Eigen::VectorXd lam = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), 1.0 / k);
      auto set_p = [&](const Eigen::VectorXd& l) {
        for (std::size_t j = 0; j < n; ++j) {
          double w = 0.0;
          for (std::size_t a = 0; a < k; ++a) w += l(a) * (*A[a])(n + j);
          p[j] = std::clamp(-w, lo[j], hi[j]);
        }
        for (std::size_t j = 0; j < n; ++j) column(j, p[j], nu_p[j]);
      };
      auto residual = [&](const Eigen::VectorXd& l) {
        set_p(l);
        Eigen::VectorXd r(static_cast<Eigen::Index>(k));
        r(0) = l.sum() - 1.0;
        for (std::size_t a = 1; a < k; ++a) r(a) = phi(*A[a], nu_p) - phi(*A[0], nu_p);
        return r;
      };
      Eigen::VectorXd r = residual(lam);
      for (int it = 0; it < 60 && r.lpNorm<Eigen::Infinity>() > 1e-14 * scale; ++it) {
        Eigen::MatrixXd J(k, k);
        J.row(0).setOnes();
        for (std::size_t a = 1; a < k; ++a)
          for (std::size_t c = 0; c < k; ++c) {
            double d = 0.0;
            for (std::size_t j = 0; j < n; ++j)
              d -= ((*A[a])(n + j) - (*A[0])(n + j)) * column_slope(j, p[j]) * (*A[c])(n + j);
            J(a, c) = d;
          }
        const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
        double t = 1.0;
        Eigen::VectorXd trial = lam + step, rt = residual(trial);
        while (rt.norm() > (1.0 - 1e-4 * t) * r.norm() && t > 1e-6) {
          t *= 0.5;
          trial = lam + t * step;
          rt = residual(trial);
        }
        if (rt.norm() >= r.norm()) break;
        lam = trial;
        r = rt;
      }
      if (r.lpNorm<Eigen::Infinity>() > 1e-11 * scale || lam.minCoeff() < -1e-10) return;
      set_p(lam);
      // certified: no vertex above the active ones
      if (duals.value(mass, nu_p) > phi(*A[0], nu_p) + 1e-11 * scale) return;
      const double F = eval(p, nu_p);
      if (F <= best.val + 1e-13 * scale) {
        best = {p, F};
        res.polished = true;
      }
    };
    for (std::size_t k = 1; k <= std::min(n + 1, near.size()); ++k) for_each_subset(near.size(), k, try_set);
  }

  res.value = best.val;
  res.p = best.p;
  res.h.resize(n);
  res.rho.resize(n);
  double pen_rho = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    res.h[j] = spec.m(best.p[j], xs[j]);
    res.rho[j] = rho ? rho->density(j) : std::exp(best.p[j] - vs[j]);
    nu[j] = dx * (res.rho[j] + tau * res.h[j]);
    if (!rho) pen_rho += dx * entropy_density(res.rho[j], vs[j]);
  }
  res.transport = res.value - pen_rho;
  return res;
}

EquivalenceReport check_against_brute_force(const Grid& g, const ModelSpec& spec, double tau,
                                            const Density& mu, const Density* rho,
                                            const SolverOptions& solver,
                                            const BruteForceOptions& oracle, double value_tol) {
  EquivalenceReport rep;
  std::vector<double> h;
  if (rho) {
    const auto sol = solve_fixed_target(g, spec, tau, mu, *rho, solver);
    rep.solver_value = sol.primal_value;
    rep.converged = sol.info.converged;
    h = sol.h;
  } else {
    const auto step = solve_jko_step(g, spec, tau, mu, solver);
    rep.solver_value = step.solution.primal_value + step.energy_after;
    rep.converged = step.solution.info.converged;
    h = step.solution.h;
  }
  const auto bf = brute_force_small(g, spec, tau, mu, rho, oracle);
  rep.oracle_value = bf.value;
  rep.oracle_polished = bf.polished;
  rep.value_error = std::abs(rep.solver_value - rep.oracle_value);
  rep.value_ok = rep.value_error <= value_tol;
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double x = g.center(j);
    // A search driven by values alone resolves a smooth minimum only to about
    // sqrt(machine eps) in p, whatever the grid spacing; the exact stage does better.
    const double floor = bf.polished ? 0.0 : std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(bf.p[j]));
    const double s = std::max({bf.polished ? 0.0 : bf.final_spacing, oracle.p_tol, floor});
    const double spread = spec.m(bf.p[j] + s, x) - spec.m(bf.p[j] - s, x);
    rep.h_tolerance = std::max(rep.h_tolerance, std::abs(spread));
    rep.h_error = std::max(rep.h_error, std::abs(h[j] - bf.h[j]));
  }
  rep.h_tolerance += 1e-8;
  rep.h_ok = rep.h_error <= rep.h_tolerance;
  return rep;
}

}  // namespace rjko
