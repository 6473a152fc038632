#include "rjko/polish.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Entry {
  Eigen::Index i, j;
  int ri, cj;  // constrained row / column index, -1 for free nodes
  double c;
};

struct IpmState {
  Eigen::VectorXd gamma, s;  // per entry
  Eigen::VectorXd f, g;      // per constrained row / column
  Eigen::VectorXd nu;        // per constrained column (fixed columns keep their mass)
  Eigen::VectorXd p;         // slope of penalized columns at nu
};

class RestrictedIpm {
 public:
  RestrictedIpm(const ScalingProblem& pb, std::vector<Entry> entries,
                const std::vector<int>& row_map, const std::vector<int>& col_map, int nr, int nc)
      : pb_(pb), e_(std::move(entries)), row_map_(row_map), col_map_(col_map), nr_(nr), nc_(nc) {
    row_node_.assign(nr, 0);
    col_node_.assign(nc, 0);
    for (std::size_t i = 0; i < row_map.size(); ++i) {
      if (row_map[i] >= 0) row_node_[row_map[i]] = static_cast<Eigen::Index>(i);
    }
    for (std::size_t j = 0; j < col_map.size(); ++j) {
      if (col_map[j] >= 0) col_node_[col_map[j]] = static_cast<Eigen::Index>(j);
    }
    for (int r = 0; r < nr; ++r) mass_scale_ += pb.rows[row_node_[r]].mass;
    mass_scale_ = std::max(mass_scale_, 1e-300);
    for (const auto& en : e_) cost_scale_ = std::max(cost_scale_, std::abs(en.c));
  }

  const Marginal& col(int cj) const { return pb_.cols[col_node_[cj]]; }
  bool penalized(int cj) const { return col(cj).kind == Marginal::Kind::Penalized; }

  double nu_floor(int cj) const { return col(cj).penalty->mass_infimum(); }

  void refresh_slopes(IpmState& st) const {
    for (int cj = 0; cj < nc_; ++cj) {
      if (penalized(cj)) st.p(cj) = col(cj).penalty->slope_at(st.nu(cj), st.p(cj));
    }
  }

  void initialize(IpmState& st, const Eigen::MatrixXd& plan0, const Eigen::VectorXd& f0,
                  const Eigen::VectorXd& g0) const {
    const std::size_t m = e_.size();
    st.gamma.resize(m);
    st.s.resize(m);
    st.f.resize(nr_);
    st.g.resize(nc_);
    st.nu.resize(nc_);
    st.p = Eigen::VectorXd::Zero(nc_);
    for (int r = 0; r < nr_; ++r) st.f(r) = f0(row_node_[r]);
    for (int cj = 0; cj < nc_; ++cj) st.g(cj) = g0(col_node_[cj]);
    const double dp = 1e-2 * mass_scale_ / static_cast<double>(m);
    const double dd = 1e-2 * (1.0 + cost_scale_);
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(nc_);
    for (std::size_t k = 0; k < m; ++k) {
      const Entry& en = e_[k];
      st.gamma(k) = std::max(plan0(en.i, en.j), dp);
      const double fi = en.ri >= 0 ? st.f(en.ri) : 0.0;
      const double gj = en.cj >= 0 ? st.g(en.cj) : 0.0;
      st.s(k) = std::max(en.c - fi - gj, dd);
      if (en.cj >= 0) colsum(en.cj) += st.gamma(k);
    }
    for (int cj = 0; cj < nc_; ++cj) {
      if (penalized(cj)) {
        const auto& pen = *col(cj).penalty;
        double nu = colsum(cj);
        const double lo = pen.mass_infimum();
        if (!(nu > lo + 1e-6 * (1.0 + std::abs(lo)))) nu = pen.mass(-st.g(cj));
        if (!(nu > lo)) nu = lo + 1e-3 * (1.0 + std::abs(lo));
        st.nu(cj) = nu;
        st.p(cj) = -st.g(cj);
      } else {
        st.nu(cj) = col(cj).mass;
      }
    }
    refresh_slopes(st);
  }

  struct Residuals {
    Eigen::VectorXd r1, r2, rd, rnu;
    double primal = 0.0, dual = 0.0, mu = 0.0;
  };

  Residuals residuals(const IpmState& st) const {
    Residuals R;
    R.r1 = Eigen::VectorXd::Zero(nr_);
    R.r2 = Eigen::VectorXd::Zero(nc_);
    R.rd.resize(e_.size());
    R.rnu = Eigen::VectorXd::Zero(nc_);
    for (int r = 0; r < nr_; ++r) R.r1(r) = pb_.rows[row_node_[r]].mass;
    for (int cj = 0; cj < nc_; ++cj) R.r2(cj) = -st.nu(cj);
    double comp = 0.0;
    for (std::size_t k = 0; k < e_.size(); ++k) {
      const Entry& en = e_[k];
      double fi = 0.0, gj = 0.0;
      if (en.ri >= 0) {
        R.r1(en.ri) -= st.gamma(k);
        fi = st.f(en.ri);
      }
      if (en.cj >= 0) {
        R.r2(en.cj) += st.gamma(k);
        gj = st.g(en.cj);
      }
      R.rd(k) = en.c - fi - gj - st.s(k);
      comp += st.gamma(k) * st.s(k);
    }
    for (int cj = 0; cj < nc_; ++cj) {
      if (penalized(cj)) R.rnu(cj) = -(st.p(cj) + st.g(cj));
    }
    R.primal = std::max(R.r1.cwiseAbs().maxCoeff(), nc_ ? R.r2.cwiseAbs().maxCoeff() : 0.0);
    R.dual = std::max(R.rd.cwiseAbs().maxCoeff(), nc_ ? R.rnu.cwiseAbs().maxCoeff() : 0.0);
    R.mu = comp / static_cast<double>(e_.size());
    return R;
  }

  struct Direction {
    Eigen::VectorXd dgamma, ds, df, dg, dnu;
  };

  Direction solve(const IpmState& st, const Residuals& R, const Eigen::VectorXd& rc,
                  const Eigen::LDLT<Eigen::MatrixXd>& ldlt, const Eigen::VectorXd& inv_g2) const {
    const std::size_t m = e_.size();
    Eigen::VectorXd w(m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nr_ + nc_);
    for (int r = 0; r < nr_; ++r) rhs(r) = R.r1(r);
    for (int cj = 0; cj < nc_; ++cj) rhs(nr_ + cj) = -R.r2(cj) + inv_g2(cj) * R.rnu(cj);
    for (std::size_t k = 0; k < m; ++k) {
      w(k) = (rc(k) - st.gamma(k) * R.rd(k)) / st.s(k);
      if (e_[k].ri >= 0) rhs(e_[k].ri) -= w(k);
      if (e_[k].cj >= 0) rhs(nr_ + e_[k].cj) -= w(k);
    }
    Eigen::VectorXd sol = ldlt.solve(rhs);
    Direction d;
    d.df = sol.head(nr_);
    d.dg = sol.tail(nc_);
    d.ds.resize(m);
    d.dgamma.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double dfi = e_[k].ri >= 0 ? d.df(e_[k].ri) : 0.0;
      const double dgj = e_[k].cj >= 0 ? d.dg(e_[k].cj) : 0.0;
      d.ds(k) = R.rd(k) - dfi - dgj;
      d.dgamma(k) = (rc(k) - st.gamma(k) * d.ds(k)) / st.s(k);
    }
    d.dnu = Eigen::VectorXd::Zero(nc_);
    for (int cj = 0; cj < nc_; ++cj) {
      if (penalized(cj)) d.dnu(cj) = inv_g2(cj) * (R.rnu(cj) - d.dg(cj));
    }
    return d;
  }

  double max_step(const IpmState& st, const Direction& d) const {
    double a = 1.0;
    for (Eigen::Index k = 0; k < st.gamma.size(); ++k) {
      if (d.dgamma(k) < 0.0) a = std::min(a, -st.gamma(k) / d.dgamma(k));
      if (d.ds(k) < 0.0) a = std::min(a, -st.s(k) / d.ds(k));
    }
    for (int cj = 0; cj < nc_; ++cj) {
      if (!penalized(cj) || d.dnu(cj) >= 0.0) continue;
      const double lo = nu_floor(cj);
      if (std::isfinite(lo)) a = std::min(a, (st.nu(cj) - lo) / -d.dnu(cj));
    }
    return a;
  }

  // Returns iterations used; fills st with the final iterate.
  int run(IpmState& st, int max_iters, double& primal, double& dual, double& mu_out) const {
    const std::size_t m = e_.size();
    const int K = nr_ + nc_;
    const double ptol = 1e-12 * (1.0 + mass_scale_);
    const double dtol = 1e-11 * (1.0 + cost_scale_);
    const double mutol = 1e-17 * mass_scale_;
    int it = 0;
    int stalls = 0;
    // Best late iterate; the Schur system loses accuracy when mu is tiny.
    IpmState best;
    double best_score = kInf, best_pr = 0.0, best_du = 0.0, best_mu = 0.0;
    int since_best = 0;
    for (; it < max_iters; ++it) {
      Residuals R = residuals(st);
      primal = R.primal;
      dual = R.dual;
      mu_out = R.mu;
      if (R.mu <= mutol) {
        const double score = std::max(R.primal / (1.0 + mass_scale_), R.dual / (1.0 + cost_scale_));
        if (score < 0.5 * best_score) {
          best = st;
          best_score = score;
          best_pr = R.primal;
          best_du = R.dual;
          best_mu = R.mu;
          since_best = 0;
        } else if (++since_best >= 5) {
          break;
        }
      }
      if (R.primal <= ptol && R.dual <= dtol && R.mu <= mutol) break;
      // The Schur system degrades once mu is tiny; the marginal correction
      // after purification removes the remaining primal error.
      if (R.mu <= mutol && R.dual <= dtol && R.primal <= 1e-10 * (1.0 + mass_scale_)) break;
      Eigen::VectorXd inv_g2 = Eigen::VectorXd::Zero(nc_);
      for (int cj = 0; cj < nc_; ++cj) {
        if (penalized(cj)) inv_g2(cj) = col(cj).penalty->dmass(st.p(cj));
      }
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, K);
      for (std::size_t k = 0; k < m; ++k) {
        const double D = st.gamma(k) / st.s(k);
        const int r = e_[k].ri, c = e_[k].cj;
        if (r >= 0) M(r, r) += D;
        if (c >= 0) M(nr_ + c, nr_ + c) += D;
        if (r >= 0 && c >= 0) {
          M(r, nr_ + c) += D;
          M(nr_ + c, r) += D;
        }
      }
      for (int cj = 0; cj < nc_; ++cj) M(nr_ + cj, nr_ + cj) += inv_g2(cj);
      const double reg = 1e-300;
      M.diagonal().array() += reg;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(M);

      // Predictor.
      Eigen::VectorXd rc = -(st.gamma.array() * st.s.array()).matrix();
      Direction aff = solve(st, R, rc, ldlt, inv_g2);
      const double a_aff = max_step(st, aff);
      double mu_aff = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        mu_aff += (st.gamma(k) + a_aff * aff.dgamma(k)) * (st.s(k) + a_aff * aff.ds(k));
      }
      mu_aff /= static_cast<double>(m);
      const double sigma = std::pow(std::max(0.0, mu_aff) / std::max(R.mu, 1e-300), 3.0);
      // Corrector.
      for (std::size_t k = 0; k < m; ++k) {
        rc(k) = sigma * R.mu - st.gamma(k) * st.s(k) - aff.dgamma(k) * aff.ds(k);
      }
      Direction d = solve(st, R, rc, ldlt, inv_g2);
      const double a = std::min(1.0, 0.995 * max_step(st, d));
      if (a < 1e-12) {
        if (++stalls > 3) break;
      } else {
        stalls = 0;
      }
      st.gamma += a * d.dgamma;
      st.s += a * d.ds;
      st.f += a * d.df;
      st.g += a * d.dg;
      for (int cj = 0; cj < nc_; ++cj) {
        if (penalized(cj)) st.nu(cj) += a * d.dnu(cj);
      }
      st.gamma = st.gamma.cwiseMax(1e-300);
      st.s = st.s.cwiseMax(1e-300);
      refresh_slopes(st);
    }
    if (std::isfinite(best_score)) {
      const double score = std::max(primal / (1.0 + mass_scale_), dual / (1.0 + cost_scale_));
      if (!(mu_out <= mutol) || best_score < score) {
        st = std::move(best);
        primal = best_pr;
        dual = best_du;
        mu_out = best_mu;
      }
    }
    return it;
  }

  const std::vector<Entry>& entries() const { return e_; }
  Eigen::Index row_node(int r) const { return row_node_[r]; }
  Eigen::Index col_node(int c) const { return col_node_[c]; }

 private:
  const ScalingProblem& pb_;
  std::vector<Entry> e_;
  std::vector<int> row_map_, col_map_;
  int nr_, nc_;
  std::vector<Eigen::Index> row_node_, col_node_;
  double mass_scale_ = 0.0;
  double cost_scale_ = 0.0;
};

// Smallest change of the plan on its support, weighted by 1/gamma, that
// restores the fixed row and column marginals. Penalized columns take the
// corrected column sums as their masses.
void correct_marginals(const ScalingProblem& pb, Eigen::MatrixXd& plan,
                       const std::vector<int>& row_map, const std::vector<int>& col_map, int nr,
                       int nc) {
  std::vector<int> fixed_col(col_map.size(), -1);
  int nf = 0;
  for (std::size_t j = 0; j < col_map.size(); ++j) {
    if (col_map[j] >= 0 && pb.cols[j].kind == Marginal::Kind::Fixed) fixed_col[j] = nf++;
  }
  (void)nc;
  const int K = nr + nf;
  if (K == 0) return;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < row_map.size(); ++i)
    if (row_map[i] >= 0) r(row_map[i]) = pb.rows[i].mass;
  for (std::size_t j = 0; j < fixed_col.size(); ++j)
    if (fixed_col[j] >= 0) r(nr + fixed_col[j]) = pb.cols[j].mass;
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
      const double D = plan(i, j);
      if (D <= 0.0) continue;
      const int a = row_map[i], b = fixed_col[j] >= 0 ? nr + fixed_col[j] : -1;
      if (a >= 0) {
        r(a) -= D;
        M(a, a) += D;
      }
      if (b >= 0) {
        r(b) -= D;
        M(b, b) += D;
      }
      if (a >= 0 && b >= 0) {
        M(a, b) += D;
        M(b, a) += D;
      }
    }
  }
  for (int k = 0; k < K; ++k)
    if (M(k, k) <= 0.0) M(k, k) = 1.0;
  const Eigen::VectorXd lam = M.completeOrthogonalDecomposition().solve(r);
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
      const double D = plan(i, j);
      if (D <= 0.0) continue;
      double t = 0.0;
      if (row_map[i] >= 0) t += lam(row_map[i]);
      if (fixed_col[j] >= 0) t += lam(nr + fixed_col[j]);
      plan(i, j) = std::max(0.0, D * (1.0 + t));
    }
  }
}

}  // namespace

PolishResult polish_exact(const ScalingProblem& problem, const Eigen::MatrixXd& plan0,
                          const Eigen::VectorXd& f0, const Eigen::VectorXd& g0,
                          const PolishOptions& opts) {
  const Eigen::Index R = problem.cost.rows(), C = problem.cost.cols();
  std::vector<int> row_map(R, -1), col_map(C, -1);
  int nr = 0, nc = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < R; ++i) {
    const auto k = problem.rows[i].kind;
    if (k == Marginal::Kind::Penalized) throw InvalidArgument("exact polish: penalized rows unsupported");
    if (k == Marginal::Kind::Fixed) {
      row_map[i] = nr++;
      total += problem.rows[i].mass;
    }
  }
  for (Eigen::Index j = 0; j < C; ++j) {
    if (problem.cols[j].kind != Marginal::Kind::Free) col_map[j] = nc++;
  }
  const double thr = opts.support_threshold * std::max(total, 1e-300);

  // Initial support: significant plan entries, the diagonal, and every pair
  // touching a free node.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in(R, C);
  in.setConstant(false);
  for (Eigen::Index i = 0; i < R; ++i) {
    for (Eigen::Index j = 0; j < C; ++j) {
      if (!std::isfinite(problem.cost(i, j))) continue;
      if (plan0(i, j) > thr || i == j || row_map[i] < 0 || col_map[j] < 0) in(i, j) = true;
    }
  }

  PolishResult out;
  Eigen::MatrixXd plan_start = plan0;
  Eigen::VectorXd f_start = f0, g_start = g0;
  for (int round = 0; round < opts.max_rounds; ++round) {
    std::vector<Entry> entries;
    for (Eigen::Index j = 0; j < C; ++j) {
      for (Eigen::Index i = 0; i < R; ++i) {
        if (in(i, j)) entries.push_back({i, j, row_map[i], col_map[j], problem.cost(i, j)});
      }
    }
    RestrictedIpm ipm(problem, entries, row_map, col_map, nr, nc);
    IpmState st;
    ipm.initialize(st, plan_start, f_start, g_start);
    double pr = 0.0, du = 0.0, mu = 0.0;
    out.ipm_iterations += ipm.run(st, opts.max_ipm_iters, pr, du, mu);
    out.rounds = round + 1;
    out.primal_residual = pr;
    out.dual_residual = du;
    out.complementarity = mu;

    out.f = Eigen::VectorXd::Zero(R);
    out.g = Eigen::VectorXd::Zero(C);
    for (int r = 0; r < nr; ++r) out.f(ipm.row_node(r)) = st.f(r);
    for (int c = 0; c < nc; ++c) out.g(ipm.col_node(c)) = st.g(c);
    out.plan = Eigen::MatrixXd::Zero(R, C);
    out.col_mass = Eigen::VectorXd::Zero(C);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      // Strict complementarity separates support from interior-point residue.
      if (st.gamma(k) > st.s(k)) out.plan(entries[k].i, entries[k].j) = st.gamma(k);
    }
    // A fixed marginal far below the complementarity level would lose its
    // whole support; keep its largest entry.
    {
      std::vector<std::size_t> best_row(R, entries.size()), best_col(C, entries.size());
      for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto i = entries[k].i, j = entries[k].j;
        if (best_row[i] == entries.size() || st.gamma(k) > st.gamma(best_row[i])) best_row[i] = k;
        if (best_col[j] == entries.size() || st.gamma(k) > st.gamma(best_col[j])) best_col[j] = k;
      }
      for (Eigen::Index i = 0; i < R; ++i) {
        const auto k = best_row[i];
        if (row_map[i] >= 0 && problem.rows[i].mass > 0.0 && k < entries.size() && out.plan.row(i).sum() == 0.0)
          out.plan(i, entries[k].j) = st.gamma(k);
      }
      for (Eigen::Index j = 0; j < C; ++j) {
        const auto k = best_col[j];
        if (problem.cols[j].kind == Marginal::Kind::Fixed && problem.cols[j].mass > 0.0 && k < entries.size() &&
            out.plan.col(j).sum() == 0.0)
          out.plan(entries[k].i, j) = st.gamma(k);
      }
    }
    correct_marginals(problem, out.plan, row_map, col_map, nr, nc);
    double resid = 0.0;
    for (Eigen::Index i = 0; i < R; ++i) {
      if (row_map[i] >= 0) resid = std::max(resid, std::abs(out.plan.row(i).sum() - problem.rows[i].mass));
    }
    for (int c = 0; c < nc; ++c) {
      const Eigen::Index j = ipm.col_node(c);
      const double colsum = out.plan.col(j).sum();
      if (problem.cols[j].kind == Marginal::Kind::Fixed) {
        resid = std::max(resid, std::abs(colsum - problem.cols[j].mass));
        out.col_mass(j) = problem.cols[j].mass;
      } else {
        out.col_mass(j) = colsum;
      }
    }
    out.primal_residual = resid;

    // Pricing over all allowed pairs.
    double worst = kInf;
    int added = 0;
    for (Eigen::Index i = 0; i < R; ++i) {
      for (Eigen::Index j = 0; j < C; ++j) {
        const double c = problem.cost(i, j);
        if (!std::isfinite(c)) continue;
        const double red = c - out.f(i) - out.g(j);
        worst = std::min(worst, red);
        if (!in(i, j) && red < -opts.pricing_tol * (1.0 + std::abs(c))) {
          in(i, j) = true;
          ++added;
        }
      }
    }
    out.min_reduced_cost = worst;
    if (added == 0) {
      out.converged = out.primal_residual <= 1e-12 * (1.0 + total) && du <= 1e-8;
      return out;
    }
    plan_start = out.plan;
    f_start = out.f;
    g_start = out.g;
  }
  out.converged = false;
  return out;
}

}  // namespace rjko
