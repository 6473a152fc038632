#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "rjko/density.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/transport.hpp"

namespace rjko {

/// The seven perturbation inequalities of optimal pairs, in discrete form.
/// Index: 0 interior rerouting, 1 reroute to boundary, 2 boundary exit vs
/// interior target, 3 boundary exit vs other boundary node, 4 boundary
/// entry lower bound, 5 boundary entry vs other boundary node, 6 boundary
/// entry upper bound.
struct PerturbationReport {
  static constexpr std::size_t kCount = 7;
  std::array<double, kCount> worst{};  ///< largest violation (lhs - rhs), <= 0 when satisfied
  std::array<std::size_t, kCount> tested{};
  std::size_t pairs_sampled = 0;
  double tolerance = 0.0;
  bool pass = true;
  static const char* label(std::size_t k);
};

/// Samples up to `samples` supported pairs (gamma > mass floor) and checks
/// every inequality that applies to each against all competing nodes.
/// Violations are compared with tol * (1 + max cost).
PerturbationReport perturbation_inequalities(const TransportSolution& sol, const ModelSpec& spec,
                                             const Grid& g, double tol = 1e-6,
                                             std::size_t samples = 100,
                                             std::uint64_t seed = 20240917);

struct CyclicalMonotonicityReport {
  std::size_t cycles_tested = 0;
  double worst = 0.0;  ///< max of sum c(x_k, y_k) - sum c(x_k, y_{k+1})
  bool pass = true;
};

/// Random 2- and 3-cycles drawn from supp(gamma) together with the
/// boundary x boundary pairs, where the cost is zero.
CyclicalMonotonicityReport cyclical_monotonicity(const TransportSolution& sol,
                                                 const ModelSpec& spec, double tol = 1e-6,
                                                 std::size_t cycles = 200,
                                                 std::uint64_t seed = 20240917);

struct TransportedMassReport {
  double lambda0 = 0.0;       ///< min over cells of mu and rho densities
  double min_transported = 0.0;  ///< min of rho + tau h
  bool pass = true;           ///< min_transported >= lambda0 / 4
};

TransportedMassReport transported_mass_bound(const TransportSolution& sol, const Density& mu);

}  // namespace rjko
