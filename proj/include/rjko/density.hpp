#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rjko/grid.hpp"

namespace rjko {

/// Nonnegative cell masses on the interior cells. density(i) = mass(i) / dx.
class Density {
 public:
  Density() = default;
  static Density from_masses(double dx, std::vector<double> masses);
  static Density from_values(const Grid& g, const std::vector<double>& densities);
  static Density uniform(const Grid& g, double value);
  static Density from_function(const Grid& g, const std::function<double(double)>& f);

  std::size_t size() const { return mass_.size(); }
  double dx() const { return dx_; }
  double mass(std::size_t i) const { return mass_[i]; }
  double density(std::size_t i) const { return mass_[i] / dx_; }
  const std::vector<double>& masses() const { return mass_; }
  std::vector<double> values() const;
  double total_mass() const;
  double min_density() const;
  double max_density() const;

  /// Raises every density below floor to floor. Returns the count raised.
  std::size_t floor_in_place(double density_floor);

 private:
  double dx_ = 1.0;
  std::vector<double> mass_;
};

}  // namespace rjko
