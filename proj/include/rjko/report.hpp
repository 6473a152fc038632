#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rjko/config.hpp"
#include "rjko/gradient_flow.hpp"
#include "rjko/pde_oracle.hpp"

namespace rjko {

/// A numeric CSV with `# key=value` header lines. The first header line is
/// always `# schema=<id>`. Values are written with 17 significant digits.
///
/// Schemas (columns):
///   rjko.trajectory/1   step, t, x, rho, h, phi_star   (h, phi_star nan at step 0)
///   rjko.diagnostics/1  step, t, energy, step_cost, boundary_flux, max_displacement,
///                       created_mass_l1, kkt_residual, c_concavity_gap, marginal_residual
///   rjko.convergence/1  tau, error, steps, converged
///   rjko.fd/1           t, x, rho
///
/// Header keys other than `generated` are deterministic; `generated` carries a
/// timestamp and is the only line that differs between identical runs.
struct CsvTable {
  std::string schema;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  const std::string* find_meta(const std::string& key) const;
  /// Same schema, columns, deterministic meta and rows (nan equal to nan).
  bool same_content(const CsvTable& o) const;
};

void write_csv(std::ostream& out, const CsvTable& table, bool timestamp = true);
void write_csv(const std::string& path, const CsvTable& table, bool timestamp = true);
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

/// Header fields shared by every table of one experiment.
std::vector<std::pair<std::string, std::string>> standard_meta(const ExperimentConfig& cfg);

CsvTable trajectory_table(const Trajectory& traj, const Grid& g, const ExperimentConfig& cfg);
CsvTable diagnostics_table(const Trajectory& traj, const ExperimentConfig& cfg);
CsvTable convergence_table(const RefinementStudy& study, const ExperimentConfig& cfg);
CsvTable fd_table(const FDSolution& fd, const ExperimentConfig& cfg);

struct ReportSection {
  std::string title;
  std::vector<std::pair<std::string, std::string>> lines;
};

/// Human-readable summary plus the tables, written under cfg.output_dir as
/// <prefix>_<name>.csv and <prefix>_report.txt. Returns the written paths.
std::vector<std::string> emit_report(const ExperimentConfig& cfg,
                                     const std::vector<ReportSection>& sections,
                                     const std::vector<std::pair<std::string, CsvTable>>& tables);

std::string render_sections(const std::vector<ReportSection>& sections);

}  // namespace rjko
