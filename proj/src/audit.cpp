#include "rjko/audit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, int n) {
  auto v = linspace(std::log(a), std::log(b), n);
  for (double& t : v) t = std::exp(t);
  return v;
}

// Runs a check body; an exception counts as a failure of that check.
void guarded(std::vector<AuditCheck>& out, const std::string& id,
             const std::function<AuditCheck()>& body) {
  try {
    AuditCheck c = body();
    c.id = id;
    out.push_back(std::move(c));
  } catch (const std::exception& ex) {
    out.push_back({id, false, 0.0, std::string("evaluation failed: ") + ex.what()});
  }
}

}  // namespace

bool AssumptionAudit::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.pass; });
}

const AuditCheck* AssumptionAudit::find(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

AssumptionAudit validate_assumptions(const ModelSpec& spec, const Grid& g, int sample_budget) {
  if (sample_budget < 100) throw InvalidArgument("sample budget must be at least 100");
  AssumptionAudit audit;
  const int nx = std::clamp(sample_budget / 50, 2, 9);
  const auto xs = linspace(g.x_lo(), g.x_hi(), nx);
  const int nz = std::max(20, sample_budget / nx);
  auto& checks = audit.checks;

  if (spec.reaction) {
    const ReactionSpec& F = *spec.reaction;
    guarded(checks, "(F1)", [&] {
      AuditCheck c;
      c.worst = std::numeric_limits<double>::infinity();
      const auto rs = logspace(1e-6, 1e6, nz);
      for (double x : xs) {
        for (std::size_t k = 1; k < rs.size(); ++k) {
          const double d = F.F_prime(rs[k], x) - F.F_prime(rs[k - 1], x);
          c.worst = std::min(c.worst, d);
        }
      }
      c.pass = c.worst > 0.0;
      c.note = "min increment of F' over sampled r";
      return c;
    });
    guarded(checks, "(F2)", [&] {
      AuditCheck c;
      const auto rs = logspace(1e-4, 1e4, nz);
      for (double x : xs) {
        for (double r : rs) {
          const double err = std::abs(spec.e_prime(F.F_prime(r, x), x) - (std::log(r) + spec.V(x)));
          c.worst = std::max(c.worst, err);
        }
      }
      c.pass = c.worst <= 1e-8;
      c.note = "max |e'(F'(r)) - log r - V|";
      return c;
    });
    if (F.preset) {
      guarded(checks, "(F3)", [&] {
        AuditCheck c;
        c.worst = std::numeric_limits<double>::infinity();
        for (double x : xs) {
          c.worst = std::min(c.worst, F.preset->W(x));
          if (F.preset->Q(x) < 0.0) c.note = "Q < 0 somewhere";
        }
        c.pass = c.worst > 0.0 && c.note.empty();
        if (c.note.empty()) c.note = "min W (must be > 0), Q >= 0";
        return c;
      });
    }
  }

  // Sample window inside D(e_x).
  auto z_window = [&](double x) {
    const double a = spec.a(x);
    const double lo = std::isfinite(a) ? a + 1e-3 * (1.0 + std::abs(a)) : -50.0;
    return linspace(lo, 50.0, nz);
  };

  guarded(checks, "(C6)", [&] {
    AuditCheck c;
    bool monotone = true;
    for (double x : xs) {
      const auto zs = z_window(x);
      double prev = -kInfiniteCost;
      for (double z : zs) {
        const double ep = spec.e_prime(z, x);
        if (!(ep > prev)) monotone = false;
        prev = ep;
        const double back = spec.m(ep, x);
        c.worst = std::max(c.worst, std::abs(back - z) / (1.0 + std::abs(z)));
      }
    }
    c.pass = monotone && c.worst <= 1e-8;
    c.note = "e' strictly increasing; max relative |m(e'(z)) - z|";
    return c;
  });

  guarded(checks, "(C2)", [&] {
    AuditCheck c;
    for (double x : xs) {
      const auto zs = z_window(x);
      const double d = (zs[1] - zs[0]);
      for (std::size_t k = 1; k + 1 < zs.size(); ++k) {
        const double e0 = spec.e(zs[k - 1], x), e1 = spec.e(zs[k], x), e2 = spec.e(zs[k + 1], x);
        const double second = (e0 + e2 - 2.0 * e1) / (d * d);
        const double scale = 1e-9 * (1.0 + std::abs(e1)) / (d * d);
        c.worst = std::min(c.worst, second + scale);
      }
    }
    c.pass = c.worst >= 0.0;
    c.note = "min scaled second difference of e";
    return c;
  });

  guarded(checks, "(C3)", [&] {
    AuditCheck c;
    c.worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (double x : xs) {
      // C(L) = min over the window of e(z) - L|z| must be finite.
      for (double L : {0.0, 1.0, 10.0}) {
        double CL = kInfiniteCost;
        for (double z : z_window(x)) CL = std::min(CL, spec.e(z, x) - L * std::abs(z));
        if (!std::isfinite(CL)) ok = false;
      }
      // Growth probe: secant slope at large |z| exceeds the largest L.
      const double Z = 1e6;
      const double up = spec.e(Z, x) / Z;
      c.worst = std::min(c.worst, up);
      if (!(up > 10.0) || !(up > spec.e(Z / 10.0, x) / (Z / 10.0))) ok = false;
      if (!std::isfinite(spec.a(x))) {
        const double down = spec.e(-Z, x) / Z;
        c.worst = std::min(c.worst, down);
        if (!(down > 10.0)) ok = false;
      }
    }
    c.pass = ok;
    c.note = "min secant slope e(z)/|z| at |z| = 1e6";
    return c;
  });

  guarded(checks, "(C9)", [&] {
    AuditCheck c;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n_cells(); ++i) acc += spec.e(0.0, g.center(i)) * g.dx();
    c.worst = std::abs(acc);
    c.pass = c.worst <= 1e-10;
    c.note = "|sum e(0, x_i) dx|";
    return c;
  });

  guarded(checks, "(C8)", [&] {
    AuditCheck c;
    // Below the reaction zero r0(x) the creation rate is negative, which gives
    // a canonical window (0, s).
    double s = 1.0;
    for (double x : xs) s = std::min(s, std::exp(spec.e_prime(0.0, x) - spec.V(x)));
    double ratio = 0.0;
    for (double x : xs) {
      for (double r : logspace(1e-10 * s, s, nz)) {
        ratio = std::max(ratio, spec.m(std::log(r) + spec.V(x), x) / r);
      }
    }
    audit.s = s;
    audit.C0 = std::max(1.0, ratio);
    c.worst = ratio;
    c.pass = std::isfinite(ratio) && s > 0.0;
    c.note = "sup m(log r + V)/r on (0, s); C0 = max(1, sup)";
    return c;
  });

  guarded(checks, "(C8-B0)", [&] {
    AuditCheck c;
    audit.s1 = 1.0;
    double B0 = 0.0;
    const double hx = 1e-6 * g.length();
    for (double x : xs) {
      const double xl = std::max(g.x_lo(), x - hx), xr = std::min(g.x_hi(), x + hx);
      for (double p : linspace(-20.0, audit.s1, nz)) {
        B0 = std::max(B0, std::abs(spec.m(p, xr) - spec.m(p, xl)) / (xr - xl));
      }
    }
    audit.B0 = B0;
    c.worst = B0;
    c.pass = std::isfinite(B0);
    c.note = "sup |d/dx m(p, x)| for p in [-20, s1]";
    return c;
  });

  guarded(checks, "(B1)", [&] {
    AuditCheck c;
    for (double x : xs) audit.lip_V = std::max(audit.lip_V, std::abs(spec.grad_V(x)));
    c.worst = audit.lip_V;
    c.pass = std::isfinite(audit.lip_V);
    c.note = "Lip V";
    return c;
  });

  guarded(checks, "(B3)", [&] {
    AuditCheck c;
    audit.lip_Psi = spec.lip_psi();
    audit.lip_rho_D = std::abs(spec.rho_D.upper - spec.rho_D.lower) / g.length();
    c.worst = std::min(spec.rho_D.lower, spec.rho_D.upper);
    c.pass = c.worst > 0.0;
    c.note = "min rho_D (must be > 0)";
    return c;
  });

  return audit;
}

}  // namespace rjko
