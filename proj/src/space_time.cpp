#include "rjko/space_time.hpp"

#include <algorithm>
#include <cmath>

#include "rjko/errors.hpp"

namespace rjko {

Eigen::VectorXd SpaceTimeField::at(double t) const {
  if (times.empty()) throw InvalidArgument("empty space-time field");
  const double slack = 1e-9 * (1.0 + std::abs(times.back()));
  if (t < times.front() - slack || t > times.back() + slack) {
    throw InvalidArgument("time outside the field's range");
  }
  auto it = std::upper_bound(times.begin(), times.end(), t + slack);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  k = k == 0 ? 0 : k - 1;
  if (interp == TimeInterp::Floor || k + 1 >= times.size()) return values.row(k).transpose();
  const double w = std::clamp((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0);
  return ((1.0 - w) * values.row(k) + w * values.row(k + 1)).transpose();
}

namespace {

double profile_average(const Eigen::VectorXd& v, double x_lo, double h, double a, double b) {
  const auto n = v.size();
  const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((a - x_lo) / h)) - 1);
  double s = 0.0;
  for (Eigen::Index i = first; i < n; ++i) {
    const double lo = x_lo + h * static_cast<double>(i), hi = lo + h;
    if (lo >= b) break;
    const double overlap = std::min(hi, b) - std::max(lo, a);
    if (overlap > 0.0) s += overlap * v(i);
  }
  return s / (b - a);
}

}  // namespace

double SpaceTimeField::average(double t, double a, double b) const {
  return profile_average(at(t), x_lo, dx(), a, b);
}

std::size_t SpaceTimeField::time_index(double t) const {
  const double slack = 1e-9 * (1.0 + std::abs(t));
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - t) <= slack) return k;
  }
  throw InvalidArgument("time is not a node of the field");
}

double l2_loc_distance(const SpaceTimeField& a, const SpaceTimeField& b, double t_final) {
  if (std::abs(a.x_lo - b.x_lo) > 1e-12 || std::abs(a.x_hi - b.x_hi) > 1e-12) {
    throw InvalidArgument("fields live on different intervals");
  }
  const SpaceTimeField& coarse = a.n_cells() <= b.n_cells() ? a : b;
  const std::size_t n = coarse.n_cells();
  if (n < 3) throw InvalidArgument("need at least three cells for the interior window");
  const double h = coarse.dx();

  std::vector<double> breaks{0.0, t_final};
  for (const auto* f : {&a, &b}) {
    for (double t : f->times)
      if (t > 0.0 && t < t_final) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double u, double v) { return std::abs(u - v) <= 1e-12 * (1.0 + std::abs(u)); }),
               breaks.end());

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double dt = breaks[k + 1] - breaks[k];
    const double tm = 0.5 * (breaks[k] + breaks[k + 1]);
    const Eigen::VectorXd va = a.at(tm), vb = b.at(tm);
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double lo = coarse.x_lo + h * static_cast<double>(i);
      const double d = profile_average(va, a.x_lo, a.dx(), lo, lo + h) -
                       profile_average(vb, b.x_lo, b.dx(), lo, lo + h);
      s += d * d * h;
    }
    total += s * dt;
  }
  return std::sqrt(total);
}

}  // namespace rjko
