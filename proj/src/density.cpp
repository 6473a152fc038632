#include "rjko/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rjko/errors.hpp"

namespace rjko {

Density Density::from_masses(double dx, std::vector<double> masses) {
  if (!(dx > 0.0)) throw InvalidArgument("cell width must be positive");
  for (double m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw InvalidArgument("density masses must be finite and nonnegative");
    }
  }
  Density d;
  d.dx_ = dx;
  d.mass_ = std::move(masses);
  return d;
}

Density Density::from_values(const Grid& g, const std::vector<double>& densities) {
  if (densities.size() != g.n_cells()) throw InvalidArgument("density size does not match grid");
  std::vector<double> m(densities.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = densities[i] * g.dx();
  return from_masses(g.dx(), std::move(m));
}

Density Density::uniform(const Grid& g, double value) {
  return from_values(g, std::vector<double>(g.n_cells(), value));
}

Density Density::from_function(const Grid& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.n_cells());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g.center(i));
  return from_values(g, v);
}

std::vector<double> Density::values() const {
  std::vector<double> v(mass_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mass_[i] / dx_;
  return v;
}

double Density::total_mass() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

double Density::min_density() const {
  return mass_.empty() ? 0.0 : *std::min_element(mass_.begin(), mass_.end()) / dx_;
}

double Density::max_density() const {
  return mass_.empty() ? 0.0 : *std::max_element(mass_.begin(), mass_.end()) / dx_;
}

std::size_t Density::floor_in_place(double density_floor) {
  std::size_t count = 0;
  for (double& m : mass_) {
    if (m < density_floor * dx_) {
      m = density_floor * dx_;
      ++count;
    }
  }
  return count;
}

}  // namespace rjko
