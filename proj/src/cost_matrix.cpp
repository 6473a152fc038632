#include "rjko/cost_matrix.hpp"

#include "rjko/errors.hpp"

namespace rjko {

CostMatrix build_cost_matrix(const Grid& g, const ModelSpec& spec, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  CostMatrix cm;
  cm.layout.n = g.n_cells();
  cm.tau = tau;
  const std::size_t N = cm.layout.size();
  cm.positions = g.centers();
  cm.positions.push_back(g.x_lo());
  cm.positions.push_back(g.x_hi());
  cm.boundary_psi[0] = spec.psi.lower;
  cm.boundary_psi[1] = spec.psi.upper;
  cm.c.resize(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (cm.forbidden(i, j)) {
        cm.c(i, j) = kInfiniteCost;
        continue;
      }
      cm.c(i, j) = cm.quadratic(i, j) + cm.node_psi(j) - cm.node_psi(i);
    }
  }
  return cm;
}

}  // namespace rjko
