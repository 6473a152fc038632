#pragma once

#include <functional>
#include <optional>
#include <string>

namespace rjko {

/// c0 + c1 * x. Used for the x-dependence of every scalar model coefficient.
struct Affine {
  double c0 = 0.0;
  double c1 = 0.0;
  double operator()(double x) const { return c0 + c1 * x; }
  double slope() const { return c1; }
  bool operator==(const Affine&) const = default;
};

enum class ReactionKind { Power, Log, SignedPower };

/// Parameters of the three preset families.
///   power:        F'(r) = W r^(1+beta) - Q
///   log:          F'(r) = W log r - Q
///   signed-power: F'(r) = W (r-1)|1-r|^(alpha-1) - Q
struct ReactionPreset {
  ReactionKind kind = ReactionKind::Power;
  Affine W{1.0, 0.0};
  Affine Q{1.0, 0.0};
  Affine beta{0.0, 0.0};
  Affine alpha{0.5, 0.0};
  bool operator==(const ReactionPreset&) const = default;
};

/// Reaction potential F_x through its derivatives. F_prime_inverse is optional;
/// when absent invert_F_prime falls back to bisection.
struct ReactionSpec {
  std::function<double(double r, double x)> F_prime;
  std::function<double(double r, double x)> F_double_prime;
  std::function<double(double z, double x)> F_prime_inverse;  // may be empty
  std::function<double(double x)> inf_F_prime;                 // may return -inf
  std::string label;
  /// Set for the preset families; enables closed-form cost integrands.
  std::optional<ReactionPreset> preset;
};

ReactionSpec make_reaction(const ReactionPreset& preset);

/// Preset registry lookup: "power", "log", "signed-power".
std::optional<ReactionKind> reaction_kind_from_name(const std::string& name);
std::string reaction_kind_name(ReactionKind kind);

/// r > 0 with |F'_x(r) - z| <= tol. Closed form when the spec has one, otherwise
/// geometric bracket growth from r = 1 followed by bisection.
double invert_F_prime(const ReactionSpec& reaction, double z, double x, double tol = 1e-12);

/// Same, but ignores any closed form (exposed for cross-checks).
double invert_F_prime_bisection(const ReactionSpec& reaction, double z, double x, double tol);

}  // namespace rjko
