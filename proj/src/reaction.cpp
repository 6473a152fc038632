#include "rjko/reaction.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ReactionSpec power_reaction(const ReactionPreset& p) {
  ReactionSpec s;
  s.label = "power";
  s.F_prime = [p](double r, double x) { return p.W(x) * std::pow(r, 1.0 + p.beta(x)) - p.Q(x); };
  s.F_double_prime = [p](double r, double x) {
    return p.W(x) * (1.0 + p.beta(x)) * std::pow(r, p.beta(x));
  };
  s.F_prime_inverse = [p](double z, double x) {
    const double u = (z + p.Q(x)) / p.W(x);
    return u > 0.0 ? std::pow(u, 1.0 / (1.0 + p.beta(x))) : 0.0;
  };
  s.inf_F_prime = [p](double x) { return -p.Q(x); };
  return s;
}

ReactionSpec log_reaction(const ReactionPreset& p) {
  ReactionSpec s;
  s.label = "log";
  s.F_prime = [p](double r, double x) { return p.W(x) * std::log(r) - p.Q(x); };
  s.F_double_prime = [p](double r, double x) { return p.W(x) / r; };
  s.F_prime_inverse = [p](double z, double x) { return std::exp((z + p.Q(x)) / p.W(x)); };
  s.inf_F_prime = [](double) { return -kInf; };
  return s;
}

ReactionSpec signed_power_reaction(const ReactionPreset& p) {
  ReactionSpec s;
  s.label = "signed-power";
  s.F_prime = [p](double r, double x) {
    const double d = r - 1.0;
    return p.W(x) * std::copysign(std::pow(std::abs(d), p.alpha(x)), d) - p.Q(x);
  };
  s.F_double_prime = [p](double r, double x) {
    const double d = std::abs(r - 1.0);
    if (d == 0.0) return kInf;
    return p.W(x) * p.alpha(x) * std::pow(d, p.alpha(x) - 1.0);
  };
  s.F_prime_inverse = [p](double z, double x) {
    const double u = (z + p.Q(x)) / p.W(x);
    const double r = 1.0 + std::copysign(std::pow(std::abs(u), 1.0 / p.alpha(x)), u);
    return r > 0.0 ? r : 0.0;
  };
  s.inf_F_prime = [p](double x) { return -p.W(x) - p.Q(x); };
  return s;
}

}  // namespace

ReactionSpec make_reaction(const ReactionPreset& preset) {
  ReactionSpec s;
  switch (preset.kind) {
    case ReactionKind::Power:
      s = power_reaction(preset);
      break;
    case ReactionKind::Log:
      s = log_reaction(preset);
      break;
    case ReactionKind::SignedPower:
      s = signed_power_reaction(preset);
      break;
  }
  s.preset = preset;
  return s;
}

std::optional<ReactionKind> reaction_kind_from_name(const std::string& name) {
  if (name == "power") return ReactionKind::Power;
  if (name == "log") return ReactionKind::Log;
  if (name == "signed-power") return ReactionKind::SignedPower;
  return std::nullopt;
}

std::string reaction_kind_name(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::Power:
      return "power";
    case ReactionKind::Log:
      return "log";
    case ReactionKind::SignedPower:
      return "signed-power";
  }
  return "unknown";
}

double invert_F_prime_bisection(const ReactionSpec& reaction, double z, double x, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const double lower = reaction.inf_F_prime ? reaction.inf_F_prime(x) : -kInf;
  if (!(z > lower)) {
    throw InvalidArgument("F' cannot be inverted at z = " + std::to_string(z) +
                          " (not above inf F')");
  }
  double lo = 1.0, hi = 1.0;
  const auto& F = reaction.F_prime;
  int guard = 0;
  while (F(lo, x) > z) {
    hi = lo;
    lo *= 0.5;
    if (++guard > 1100 || lo == 0.0) throw SolverError("F' inversion: lower bracket not found");
  }
  guard = 0;
  while (F(hi, x) < z) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 1100 || !std::isfinite(hi)) {
      throw SolverError("F' inversion: upper bracket not found");
    }
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = F(mid, x) - z;
    if (std::abs(fm) <= tol) return mid;
    if (fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) return mid;
  }
  return 0.5 * (lo + hi);
}

double invert_F_prime(const ReactionSpec& reaction, double z, double x, double tol) {
  if (reaction.F_prime_inverse) {
    const double lower = reaction.inf_F_prime ? reaction.inf_F_prime(x) : -kInf;
    if (!(z > lower)) {
      throw InvalidArgument("F' cannot be inverted at z = " + std::to_string(z) +
                            " (not above inf F')");
    }
    return reaction.F_prime_inverse(z, x);
  }
  return invert_F_prime_bisection(reaction, z, x, tol);
}

}  // namespace rjko
