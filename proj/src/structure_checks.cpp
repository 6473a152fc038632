#include "rjko/structure_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace rjko {

namespace {

struct Context {
  std::size_t n = 0;
  const std::vector<double>* x = nullptr;
  double tau = 1.0;
  double psi[2] = {0.0, 0.0};
  std::vector<double> ep;  // e'(h) per interior cell

  double c(std::size_t i, std::size_t j) const {
    const double d = (*x)[i] - (*x)[j];
    return d * d / (2.0 * tau);
  }
  double Psi(std::size_t b) const { return psi[b - n]; }
  // c~ extended by zero on boundary x boundary.
  double ct(std::size_t i, std::size_t j) const {
    const bool bi = i >= n, bj = j >= n;
    if (bi && bj) return 0.0;
    return c(i, j) + (bj ? Psi(j) : 0.0) - (bi ? Psi(i) : 0.0);
  }
};

Context make_context(const TransportSolution& sol, const ModelSpec& spec, const Grid& g) {
  Context cx;
  cx.n = sol.h.size();
  cx.x = &sol.positions;
  cx.tau = sol.tau;
  cx.psi[0] = spec.psi.lower;
  cx.psi[1] = spec.psi.upper;
  cx.ep.resize(cx.n);
  for (std::size_t j = 0; j < cx.n; ++j) cx.ep[j] = spec.e_prime(sol.h[j], g.center(j));
  return cx;
}

std::vector<std::pair<std::size_t, std::size_t>> supported_pairs(const TransportSolution& sol) {
  const double floor = mass_floor(sol);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (Eigen::Index j = 0; j < sol.gamma.cols(); ++j)
    for (Eigen::Index i = 0; i < sol.gamma.rows(); ++i)
      if (sol.gamma(i, j) > floor) out.emplace_back(i, j);
  return out;
}

}  // namespace

const char* PerturbationReport::label(std::size_t k) {
  static const char* names[kCount] = {
      "interior rerouting",          "reroute to boundary",
      "exit vs interior target",     "exit vs other boundary node",
      "entry lower bound",           "entry vs other boundary node",
      "entry upper bound"};
  return k < kCount ? names[k] : "?";
}

PerturbationReport perturbation_inequalities(const TransportSolution& sol, const ModelSpec& spec,
                                             const Grid& g, double tol, std::size_t samples,
                                             std::uint64_t seed) {
  const Context cx = make_context(sol, spec, g);
  const std::size_t n = cx.n, N = n + 2;
  PerturbationReport rep;
  rep.worst.fill(-std::numeric_limits<double>::infinity());
  double scale = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) scale = std::max(scale, std::abs(cx.ct(i, j)));
  for (double v : cx.ep) scale = std::max(scale, std::abs(v));
  rep.tolerance = tol * (1.0 + scale);

  auto pairs = supported_pairs(sol);
  if (pairs.size() > samples) {
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(samples);
  }
  rep.pairs_sampled = pairs.size();
  auto note = [&](std::size_t k, double lhs, double rhs) {
    rep.worst[k] = std::max(rep.worst[k], lhs - rhs);
    ++rep.tested[k];
  };

  for (const auto& [s, y] : pairs) {
    if (y < n) {
      // Mass from s arrives at interior y.
      const double lhs = cx.ep[y] + cx.c(y, s);
      for (std::size_t y2 = 0; y2 < n; ++y2) note(0, lhs, cx.ep[y2] + cx.c(y2, s));
      if (s < n) {
        for (std::size_t b = n; b < N; ++b) note(1, lhs, cx.c(b, s) + cx.Psi(b));
      } else {
        for (std::size_t b = n; b < N; ++b) note(5, cx.c(y, s) - cx.Psi(s), cx.c(y, b) - cx.Psi(b));
        note(6, cx.c(y, s) - cx.Psi(s), -cx.ep[y]);
      }
    } else if (s < n) {
      // Interior s exits through boundary node y.
      const double lhs = cx.c(s, y) + cx.Psi(y);
      for (std::size_t y1 = 0; y1 < n; ++y1) note(2, lhs, cx.ep[y1] + cx.c(s, y1));
      for (std::size_t b = n; b < N; ++b) note(3, lhs, cx.c(s, b) + cx.Psi(b));
    }
  }
  // Lower bound holds for every interior cell and boundary node.
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t b = n; b < N; ++b) note(4, 0.0, cx.ep[y] + cx.c(y, b) - cx.Psi(b));

  for (std::size_t k = 0; k < PerturbationReport::kCount; ++k) {
    if (rep.tested[k] == 0) rep.worst[k] = 0.0;
    if (rep.worst[k] > rep.tolerance) rep.pass = false;
  }
  return rep;
}

CyclicalMonotonicityReport cyclical_monotonicity(const TransportSolution& sol,
                                                 const ModelSpec& spec, double tol,
                                                 std::size_t cycles, std::uint64_t seed) {
  const std::size_t n = sol.h.size();
  Context cx;
  cx.n = n;
  cx.x = &sol.positions;
  cx.tau = sol.tau;
  cx.psi[0] = spec.psi.lower;
  cx.psi[1] = spec.psi.upper;

  auto pairs = supported_pairs(sol);
  for (std::size_t a = n; a < n + 2; ++a)
    for (std::size_t b = n; b < n + 2; ++b) pairs.emplace_back(a, b);

  CyclicalMonotonicityReport rep;
  double scale = 0.0;
  for (const auto& [i, j] : pairs) scale = std::max(scale, std::abs(cx.ct(i, j)));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  for (std::size_t t = 0; t < cycles; ++t) {
    const std::size_t len = 2 + t % 2;
    std::size_t idx[3];
    for (std::size_t k = 0; k < len; ++k) idx[k] = pick(rng);
    double on = 0.0, shifted = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const auto [xi, yi] = pairs[idx[k]];
      const std::size_t yn = pairs[idx[(k + 1) % len]].second;
      on += cx.ct(xi, yi);
      shifted += cx.ct(xi, yn);
    }
    rep.worst = std::max(rep.worst, on - shifted);
    ++rep.cycles_tested;
  }
  rep.pass = rep.worst <= tol * (1.0 + scale);
  return rep;
}

TransportedMassReport transported_mass_bound(const TransportSolution& sol, const Density& mu) {
  TransportedMassReport rep;
  const std::size_t n = sol.h.size();
  rep.lambda0 = std::numeric_limits<double>::infinity();
  rep.min_transported = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    rep.lambda0 = std::min({rep.lambda0, mu.density(i), sol.rho[i]});
    rep.min_transported = std::min(rep.min_transported, sol.rho[i] + sol.tau * sol.h[i]);
  }
  rep.pass = rep.min_transported >= 0.25 * rep.lambda0;
  return rep;
}

}  // namespace rjko
