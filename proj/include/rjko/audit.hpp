#pragma once

#include <string>
#include <vector>

#include "rjko/grid.hpp"
#include "rjko/model.hpp"

namespace rjko {

struct AuditCheck {
  std::string id;      ///< assumption label, e.g. "(C6)"
  bool pass = true;
  double worst = 0.0;  ///< worst sampled value of the checked quantity
  std::string note;
};

/// Empirical constants and pass/fail annotations for the model assumptions.
/// The constants are fitted on samples, they are not the (existential) ones
/// of the analysis.
struct AssumptionAudit {
  double C0 = 1.0;  ///< m(log r + V) <= C0 r on (0, s)
  double s = 1.0;
  double s1 = 1.0;  ///< upper end of the p-window for B0
  double B0 = 0.0;  ///< sup |d/dx m(p, x)| for p < s1
  double lip_V = 0.0;
  double lip_Psi = 0.0;
  double lip_rho_D = 0.0;
  std::vector<AuditCheck> checks;

  bool all_pass() const;
  const AuditCheck* find(const std::string& id) const;
};

/// Samples (z,x), (r,x), (p,x) and records each checkable assumption.
/// Never throws on a failed assumption; failures are annotations.
AssumptionAudit validate_assumptions(const ModelSpec& spec, const Grid& g, int sample_budget = 400);

}  // namespace rjko
