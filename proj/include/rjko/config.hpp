#pragma once

#include <string>
#include <vector>

#include "rjko/density.hpp"
#include "rjko/grid.hpp"
#include "rjko/model.hpp"
#include "rjko/reaction.hpp"
#include "rjko/solver_options.hpp"

namespace rjko {

/// Flat `key = value` document, keys dotted by section:
///
///   preset = decaying            # stationary | decaying | custom
///   domain.n_cells = 64
///   model.reaction = power       # power | log | signed-power
///   model.W = 1, 0.5             # c0, c1  ->  1 + 0.5 x
///   model.rho_D = 1, 1           # lower, upper
///   initial.amplitude = 0.1      # rho0 = base + amplitude sin(pi (x - x_lo) / L)
///   scheme.tau_list = 0.08, 0.04, 0.02, 0.01
///
/// '#' starts a comment. The preset is applied first, explicit keys override it
/// wherever they appear in the document.
struct ExperimentConfig {
  std::string preset = "custom";

  double x_lo = 0.0;
  double x_hi = 1.0;
  std::size_t n_cells = 64;

  ReactionPreset reaction;
  Affine V{0.0, 0.0};
  BoundaryValues rho_D{1.0, 1.0};

  double initial_base = 1.0;
  double initial_amplitude = 0.0;

  double tau = 0.05;
  std::vector<double> tau_list{0.08, 0.04, 0.02, 0.01};
  double t_final = 1.0;

  SolverOptions solver;

  int oracle_space_factor = 4;
  int oracle_time_factor = 8;

  std::string output_dir = ".";
  std::string output_prefix = "rjko";
  bool output_diagnostics = true;

  Grid grid() const { return Grid(x_lo, x_hi, n_cells); }
  ModelSpec model() const;
  Density initial_density(const Grid& g) const;
  double initial(double x) const;

  bool operator==(const ExperimentConfig& o) const;
};

/// Throws ConfigError (with the line number where one applies).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every field, in parse order; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

/// Only the model and domain keys; input of model_hash.
std::string render_model(const ExperimentConfig& cfg);

/// FNV-1a 64 of render_model, as 16 hex digits.
std::string model_hash(const ExperimentConfig& cfg);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace rjko
