#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rjko/config.hpp"
#include "rjko/report.hpp"

namespace rjko {

enum class Command { Solve, Sweep, Oracle, Compare, Audit, Verify };

std::optional<Command> command_from_name(const std::string& name);
std::string command_name(Command c);

/// Process exit codes, one per failure class.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  ///< ran to completion, some check did not pass
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIo = 4,
  kExitInternal = 5,
};

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string message;  ///< error text when exit_code is not 0 or 1
  std::vector<ReportSection> sections;
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::string> written;  ///< files written by emit_report
};

/// Runs one subcommand. Module exceptions are caught and mapped to exit codes.
/// When write_files is set the report and tables go to cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, Command cmd, bool write_files = true);

/// FD reference for a config: space_factor x finer mesh, dt = tau_min / time_factor.
FDSolution reference_solution(const ExperimentConfig& cfg, double tau_min);

}  // namespace rjko
