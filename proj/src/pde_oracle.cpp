#include "rjko/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

struct Discretization {
  const Grid& g;
  const ModelSpec& spec;
  const FDOptions& opts;
  std::vector<double> xc, vc, vface;
  double rhoL = 1.0, rhoR = 1.0;

  Discretization(const Grid& grid, const ModelSpec& s, const FDOptions& o)
      : g(grid), spec(s), opts(o) {
    const std::size_t n = g.n_cells();
    xc = g.centers();
    vc.resize(n);
    for (std::size_t i = 0; i < n; ++i) vc[i] = spec.V(xc[i]);
    vface.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) vface[k] = spec.grad_V(g.x_lo() + g.dx() * k);
    rhoL = std::exp(spec.psi.lower - spec.V(g.x_lo()));
    rhoR = std::exp(spec.psi.upper - spec.V(g.x_hi()));
  }

  // Residual G and Jacobian: tridiagonal (a: sub, b: diag, c: super) plus
  // e0 = dG_0/drho_2 and en = dG_{n-1}/drho_{n-3} from the cubic ghost values.
  void assemble(const Eigen::VectorXd& r, const Eigen::VectorXd& r_old, double dt, double t_new,
                Eigen::VectorXd& G, Eigen::VectorXd& a, Eigen::VectorXd& b, Eigen::VectorXd& c,
                double& e0, double& en) const {
    const auto n = r.size();
    const double h = g.dx();
    G.resize(n);
    a.setZero(n);
    b.setZero(n);
    c.setZero(n);
    e0 = en = 0.0;
    // Interior face fluxes and their derivatives w.r.t. the two cells they couple.
    Eigen::VectorXd F(n + 1), dFl(n + 1), dFr(n + 1);
    for (Eigen::Index k = 1; k < n; ++k) {
      F(k) = (r(k) - r(k - 1)) / h + vface[k] * 0.5 * (r(k - 1) + r(k));
      dFl(k) = -1.0 / h + 0.5 * vface[k];
      dFr(k) = 1.0 / h + 0.5 * vface[k];
    }
    // Wall fluxes from ghost values extrapolating the Dirichlet datum and the
    // nearest cells: weights w[k] of rho_k (k-th cell from the wall) in
    // (rho_near - ghost) / h, wall weight folded into F directly.
    double wl[3] = {0.0, 0.0, 0.0};
    double wall = 0.0;
    if (n >= 4) {
      // ghost = (16 rho_D - 15 rho_0 + 5 rho_1 - rho_2) / 5
      wl[0] = 4.0;
      wl[1] = -1.0;
      wl[2] = 0.2;
      wall = -16.0 / 5.0;
    } else if (n >= 2) {
      // ghost = (8 rho_D - 6 rho_0 + rho_1) / 3
      wl[0] = 3.0;
      wl[1] = -1.0 / 3.0;
      wall = -8.0 / 3.0;
    } else {
      wl[0] = 2.0;
      wall = -2.0;
    }
    F(0) = wall * rhoL / h + vface[0] * rhoL;
    F(n) = -(wall * rhoR / h) + vface[n] * rhoR;
    for (int k = 0; k < 3 && k < n; ++k) {
      F(0) += wl[k] * r(k) / h;
      F(n) -= wl[k] * r(n - 1 - k) / h;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = std::log(r(i)) + vc[i];
      double src = 0.0;
      if (opts.forcing) src = opts.forcing(t_new, xc[i]);
      G(i) = (r(i) - r_old(i)) / dt - (F(i + 1) - F(i)) / h + spec.m(p, xc[i]) - src;
      b(i) += 1.0 / dt + spec.m_prime(p, xc[i]) / r(i);
      if (i + 1 < n) {
        b(i) -= dFl(i + 1) / h;
        c(i) -= dFr(i + 1) / h;
      }
      if (i > 0) {
        a(i) += dFl(i) / h;
        b(i) += dFr(i) / h;
      }
    }
    // +F_0/h in row 0, -F_n/h in row n-1.
    const double h2 = h * h;
    b(0) += wl[0] / h2;
    b(n - 1) += wl[0] / h2;
    if (n >= 2) {
      c(0) += wl[1] / h2;
      a(n - 1) += wl[1] / h2;
    }
    if (n >= 4) {
      e0 = wl[2] / h2;
      en = wl[2] / h2;
    }
  }
};

// Solves the tridiagonal system with one extra entry in the first and last
// rows, removed first by elimination with the neighbouring rows.
Eigen::VectorXd solve_banded(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c, double e0,
                             double en, Eigen::VectorXd d) {
  const auto n = b.size();
  if (e0 != 0.0 && n >= 4) {
    const double f0 = e0 / c(1);
    b(0) -= f0 * a(1);
    c(0) -= f0 * b(1);
    d(0) -= f0 * d(1);
    const double fn = en / a(n - 2);
    a(n - 1) -= fn * b(n - 2);
    b(n - 1) -= fn * c(n - 2);
    d(n - 1) -= fn * d(n - 2);
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = a(i) / b(i - 1);
    b(i) -= w * c(i - 1);
    d(i) -= w * d(i - 1);
  }
  Eigen::VectorXd x(n);
  x(n - 1) = d(n - 1) / b(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (d(i) - c(i) * x(i + 1)) / b(i);
  return x;
}

// One implicit Euler step by damped Newton; false on failure.
bool newton_step(const Discretization& D, const Eigen::VectorXd& r_old, double dt, double t_new,
                 Eigen::VectorXd& r) {
  Eigen::VectorXd G, a, b, c;
  double e0 = 0.0, en = 0.0;
  r = r_old;
  D.assemble(r, r_old, dt, t_new, G, a, b, c, e0, en);
  double norm = G.cwiseAbs().maxCoeff() * dt;
  for (int it = 0; it < D.opts.max_newton; ++it) {
    if (!std::isfinite(norm)) return false;
    if (norm <= D.opts.newton_tol) return true;
    const Eigen::VectorXd delta = solve_banded(a, b, c, e0, en, -G);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      Eigen::VectorXd trial = r + alpha * delta;
      if (trial.minCoeff() < 1e-12) continue;
      Eigen::VectorXd G2, a2, b2, c2;
      double e02 = 0.0, en2 = 0.0;
      D.assemble(trial, r_old, dt, t_new, G2, a2, b2, c2, e02, en2);
      const double n2 = G2.cwiseAbs().maxCoeff() * dt;
      if (std::isfinite(n2) && (n2 < norm || n2 <= D.opts.newton_tol)) {
        r = std::move(trial);
        G = std::move(G2);
        a = std::move(a2);
        b = std::move(b2);
        c = std::move(c2);
        e0 = e02;
        en = en2;
        norm = n2;
        accepted = true;
        break;
      }
    }
    if (!accepted) return norm <= D.opts.newton_tol;
  }
  return norm <= D.opts.newton_tol;
}

bool advance(const Discretization& D, const Eigen::VectorXd& r_old, double t_old, double dt,
             int level, Eigen::VectorXd& r, int& deepest) {
  if (newton_step(D, r_old, dt, t_old + dt, r)) return true;
  if (level >= D.opts.max_halvings) return false;
  deepest = std::max(deepest, level + 1);
  Eigen::VectorXd mid;
  if (!advance(D, r_old, t_old, 0.5 * dt, level + 1, mid, deepest)) return false;
  return advance(D, mid, t_old + 0.5 * dt, 0.5 * dt, level + 1, r, deepest);
}

}  // namespace

SpaceTimeField FDSolution::field() const {
  SpaceTimeField f;
  f.x_lo = grid.x_lo();
  f.x_hi = grid.x_hi();
  f.times = times;
  f.values = values;
  f.interp = SpaceTimeField::TimeInterp::Linear;
  return f;
}

FDSolution solve_fd(const Grid& g, const ModelSpec& spec, const Density& rho0, double t_final,
                    double dt, const FDOptions& opts) {
  if (!(dt > 0.0) || !(t_final > 0.0)) throw InvalidArgument("dt and t_final must be positive");
  if (rho0.size() != g.n_cells()) throw InvalidArgument("initial density does not match the grid");
  if (!(rho0.min_density() > 0.0)) throw InvalidArgument("initial density must be positive");
  const Discretization D(g, spec, opts);
  const auto K = static_cast<std::size_t>(std::max(1.0, std::ceil(t_final / dt - 1e-9)));
  const double h = t_final / static_cast<double>(K);
  const auto n = static_cast<Eigen::Index>(g.n_cells());

  FDSolution sol{g, {}, Eigen::MatrixXd(static_cast<Eigen::Index>(K + 1), n), {D.rhoL, D.rhoR}, 0};
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = rho0.density(static_cast<std::size_t>(i));
  sol.times.push_back(0.0);
  sol.values.row(0) = r.transpose();
  for (std::size_t k = 1; k <= K; ++k) {
    const double t_old = h * static_cast<double>(k - 1);
    Eigen::VectorXd next;
    if (!advance(D, r, t_old, h, 0, next, sol.halvings_used)) {
      throw SolverError("finite-difference Newton failed at t = " + std::to_string(t_old));
    }
    r = std::move(next);
    sol.times.push_back(h * static_cast<double>(k));
    sol.values.row(static_cast<Eigen::Index>(k)) = r.transpose();
  }
  return sol;
}

double TestFunction::operator()(double x) const {
  return std::max(0.0, 1.0 - std::abs(x - center) / half_width);
}

std::vector<double> TestFunction::sample(const Grid& g) const {
  std::vector<double> z(g.n_cells());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (*this)(g.center(i));
  return z;
}

double weak_residual(const SpaceTimeField& field, const ModelSpec& spec,
                     const std::vector<double>& zeta, double t0, double t1) {
  const std::size_t n = field.n_cells();
  if (zeta.size() != n) throw InvalidArgument("test function does not match the grid");
  if (n < 3 || zeta.front() != 0.0 || zeta.back() != 0.0) {
    throw InvalidArgument("test function must vanish in the first and last cell");
  }
  const std::size_t k0 = field.time_index(t0), k1 = field.time_index(t1);
  if (k1 < k0) throw InvalidArgument("t1 precedes t0");
  const double h = field.dx();
  std::vector<double> xc(n), vc(n), vf(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    xc[i] = field.x_lo + h * (static_cast<double>(i) + 0.5);
    vc[i] = spec.V(xc[i]);
  }
  for (std::size_t k = 0; k <= n; ++k) vf[k] = spec.grad_V(field.x_lo + h * static_cast<double>(k));

  auto pairing = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += zeta[i] * field.values(k, i) * h;
    return s;
  };
  auto generator = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t f = 1; f < n; ++f) {
      const double r0 = field.values(k, f - 1), r1 = field.values(k, f);
      const double dz = (zeta[f] - zeta[f - 1]) / h;
      s -= ((r1 - r0) / h + vf[f] * 0.5 * (r0 + r1)) * dz * h;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double r = field.values(k, i);
      s -= zeta[i] * spec.m(std::log(r) + vc[i], xc[i]) * h;
    }
    return s;
  };
  double integral = 0.0;
  for (std::size_t k = k0 + 1; k <= k1; ++k) {
    integral += (field.times[k] - field.times[k - 1]) * generator(k);
  }
  return std::abs(pairing(k1) - pairing(k0) - integral);
}

double compare_trajectories(const Trajectory& a, const Grid& g, const FDSolution& b, double t_final) {
  return l2_loc_distance(a.field(g), b.field(), t_final);
}

}  // namespace rjko
