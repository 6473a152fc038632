#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "rjko/grid.hpp"
#include "rjko/model.hpp"

namespace rjko {

/// Node order used by every plan: interior cells 0..n-1, then x_lo (index n)
/// and x_hi (index n+1).
struct NodeLayout {
  std::size_t n = 0;
  std::size_t size() const { return n + 2; }
  std::size_t left() const { return n; }
  std::size_t right() const { return n + 1; }
  bool is_boundary(std::size_t k) const { return k >= n; }
};

/// c~(x,y) = |x-y|^2/(2 tau) + Psi(y) 1_{interior x boundary} - Psi(x) 1_{boundary x interior}.
/// Boundary x boundary entries are forbidden and stored as +inf.
struct CostMatrix {
  NodeLayout layout;
  double tau = 0.0;
  std::vector<double> positions;  ///< node coordinates in layout order
  Eigen::MatrixXd c;

  bool forbidden(std::size_t i, std::size_t j) const {
    return layout.is_boundary(i) && layout.is_boundary(j);
  }
  double operator()(std::size_t i, std::size_t j) const { return c(i, j); }
  double quadratic(std::size_t i, std::size_t j) const {
    const double d = positions[i] - positions[j];
    return d * d / (2.0 * tau);
  }
  /// Psi at a node (zero for interior nodes).
  double node_psi(std::size_t k) const { return k < layout.n ? 0.0 : boundary_psi[k - layout.n]; }

  double boundary_psi[2] = {0.0, 0.0};
};

CostMatrix build_cost_matrix(const Grid& g, const ModelSpec& spec, double tau);

}  // namespace rjko
