#include "rjko/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty())
    throw ConfigError("expected a number, got '" + s + "'", line);
  return v;
}

std::vector<double> to_list(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& item : split_commas(s)) out.push_back(to_double(item, line));
  return out;
}

Affine to_affine(const std::string& s, int line) {
  const auto v = to_list(s, line);
  if (v.empty() || v.size() > 2) throw ConfigError("expected 'c0' or 'c0, c1'", line);
  return {v[0], v.size() == 2 ? v[1] : 0.0};
}

BoundaryValues to_pair(const std::string& s, int line) {
  const auto v = to_list(s, line);
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() != 2) throw ConfigError("expected 'lower, upper'", line);
  return {v[0], v[1]};
}

bool to_bool(const std::string& s, int line) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'", line);
}

std::size_t to_count(const std::string& s, int line) {
  const double v = to_double(s, line);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
    throw ConfigError("expected a positive integer, got '" + s + "'", line);
  return static_cast<std::size_t>(v);
}

std::string affine_text(Affine a) { return format_double(a.c0) + ", " + format_double(a.c1); }

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"preset", [](ExperimentConfig& c, const std::string& v, int) { c.preset = v; }},
      {"domain.x_lo", [](ExperimentConfig& c, const std::string& v, int l) { c.x_lo = to_double(v, l); }},
      {"domain.x_hi", [](ExperimentConfig& c, const std::string& v, int l) { c.x_hi = to_double(v, l); }},
      {"domain.n_cells", [](ExperimentConfig& c, const std::string& v, int l) { c.n_cells = to_count(v, l); }},
      {"model.reaction",
       [](ExperimentConfig& c, const std::string& v, int l) {
         const auto k = reaction_kind_from_name(v);
         if (!k) throw ConfigError("unknown reaction preset '" + v + "'", l);
         c.reaction.kind = *k;
       }},
      {"model.W", [](ExperimentConfig& c, const std::string& v, int l) { c.reaction.W = to_affine(v, l); }},
      {"model.Q", [](ExperimentConfig& c, const std::string& v, int l) { c.reaction.Q = to_affine(v, l); }},
      {"model.beta", [](ExperimentConfig& c, const std::string& v, int l) { c.reaction.beta = to_affine(v, l); }},
      {"model.alpha", [](ExperimentConfig& c, const std::string& v, int l) { c.reaction.alpha = to_affine(v, l); }},
      {"model.V", [](ExperimentConfig& c, const std::string& v, int l) { c.V = to_affine(v, l); }},
      {"model.rho_D", [](ExperimentConfig& c, const std::string& v, int l) { c.rho_D = to_pair(v, l); }},
      {"initial.base", [](ExperimentConfig& c, const std::string& v, int l) { c.initial_base = to_double(v, l); }},
      {"initial.amplitude",
       [](ExperimentConfig& c, const std::string& v, int l) { c.initial_amplitude = to_double(v, l); }},
      {"scheme.tau", [](ExperimentConfig& c, const std::string& v, int l) { c.tau = to_double(v, l); }},
      {"scheme.tau_list", [](ExperimentConfig& c, const std::string& v, int l) { c.tau_list = to_list(v, l); }},
      {"scheme.t_final", [](ExperimentConfig& c, const std::string& v, int l) { c.t_final = to_double(v, l); }},
      {"solver.tol", [](ExperimentConfig& c, const std::string& v, int l) { c.solver.tol = to_double(v, l); }},
      {"solver.kkt_tol", [](ExperimentConfig& c, const std::string& v, int l) { c.solver.kkt_tol = to_double(v, l); }},
      {"solver.max_iters",
       [](ExperimentConfig& c, const std::string& v, int l) { c.solver.max_iters = static_cast<int>(to_count(v, l)); }},
      {"solver.regularization",
       [](ExperimentConfig& c, const std::string& v, int l) { c.solver.regularization = to_double(v, l); }},
      {"solver.eps_initial",
       [](ExperimentConfig& c, const std::string& v, int l) { c.solver.eps_initial = to_double(v, l); }},
      {"solver.eps_floor", [](ExperimentConfig& c, const std::string& v, int l) { c.solver.eps_floor = to_double(v, l); }},
      {"solver.polish", [](ExperimentConfig& c, const std::string& v, int l) { c.solver.polish = to_bool(v, l); }},
      {"solver.density_floor",
       [](ExperimentConfig& c, const std::string& v, int l) { c.solver.density_floor = to_double(v, l); }},
      {"solver.check_monotone",
       [](ExperimentConfig& c, const std::string& v, int l) { c.solver.check_monotone = to_bool(v, l); }},
      {"oracle.space_factor",
       [](ExperimentConfig& c, const std::string& v, int l) { c.oracle_space_factor = static_cast<int>(to_count(v, l)); }},
      {"oracle.time_factor",
       [](ExperimentConfig& c, const std::string& v, int l) { c.oracle_time_factor = static_cast<int>(to_count(v, l)); }},
      {"output.dir", [](ExperimentConfig& c, const std::string& v, int) { c.output_dir = v; }},
      {"output.prefix", [](ExperimentConfig& c, const std::string& v, int) { c.output_prefix = v; }},
      {"output.diagnostics",
       [](ExperimentConfig& c, const std::string& v, int l) { c.output_diagnostics = to_bool(v, l); }},
  };
  return table;
}

void apply_preset(ExperimentConfig& c, int line) {
  if (c.preset == "custom") return;
  if (c.preset != "stationary" && c.preset != "decaying")
    throw ConfigError("unknown preset '" + c.preset + "' (stationary, decaying, custom)", line);
  // F'(r) = r - 1, V = 0, rho_D = 1: rho = 1 is the steady state.
  c.reaction = ReactionPreset{};
  c.reaction.kind = ReactionKind::Power;
  c.reaction.W = {1.0, 0.0};
  c.reaction.Q = {1.0, 0.0};
  c.reaction.beta = {0.0, 0.0};
  c.V = {0.0, 0.0};
  c.rho_D = {1.0, 1.0};
  c.initial_base = 1.0;
  c.initial_amplitude = c.preset == "decaying" ? 0.1 : 0.0;
  // The smooth bump is a second-order perturbation: the unregularized plan
  // stays on the diagonal once sqrt(tau) is a few cells, so the sweep runs entropic.
  if (c.preset == "decaying") c.solver.regularization = 0.5;
}

// Minimum of an affine function over [a, b].
double min_over(Affine f, double a, double b) { return std::min(f(a), f(b)); }
double max_over(Affine f, double a, double b) { return std::max(f(a), f(b)); }

void validate(const ExperimentConfig& c) {
  if (!(c.x_hi > c.x_lo)) throw ConfigError("domain: x_hi must exceed x_lo");
  const double a = c.x_lo, b = c.x_hi;
  if (!(min_over(c.reaction.W, a, b) > 0.0))
    throw ConfigError("model.W: W must be strictly positive on the domain (reaction preset)");
  if (!(min_over(c.reaction.Q, a, b) >= 0.0))
    throw ConfigError("model.Q: Q must be non-negative on the domain (reaction preset)");
  if (c.reaction.kind == ReactionKind::Power && !(min_over(c.reaction.beta, a, b) >= 0.0))
    throw ConfigError("model.beta: beta must be >= 0 (reaction preset)");
  if (c.reaction.kind == ReactionKind::SignedPower &&
      !(min_over(c.reaction.alpha, a, b) > 0.0 && max_over(c.reaction.alpha, a, b) < 1.0))
    throw ConfigError("model.alpha: alpha must lie in (0, 1) (reaction preset)");
  if (!(c.rho_D.lower > 0.0 && c.rho_D.upper > 0.0))
    throw ConfigError("model.rho_D: Dirichlet data must be positive (B3)");
  if (!(c.initial_base - std::abs(c.initial_amplitude) > 0.0))
    throw ConfigError("initial: rho0 must be positive");
  if (!(c.tau > 0.0)) throw ConfigError("scheme.tau must be positive");
  if (!(c.t_final > 0.0)) throw ConfigError("scheme.t_final must be positive");
  if (c.tau_list.size() < 3) throw ConfigError("scheme.tau_list needs at least 3 entries");
  for (std::size_t i = 0; i < c.tau_list.size(); ++i) {
    if (!(c.tau_list[i] > 0.0)) throw ConfigError("scheme.tau_list entries must be positive");
    if (i > 0 && !(c.tau_list[i] < c.tau_list[i - 1]))
      throw ConfigError("scheme.tau_list must be strictly decreasing");
  }
  if (!(c.solver.tol > 0.0 && c.solver.kkt_tol > 0.0)) throw ConfigError("solver tolerances must be positive");
  if (!(c.solver.regularization >= 0.0)) throw ConfigError("solver.regularization must be >= 0");
  if (!(c.solver.eps_initial >= c.solver.eps_floor && c.solver.eps_floor > 0.0))
    throw ConfigError("solver: need eps_initial >= eps_floor > 0");
  if (!(c.solver.density_floor > 0.0)) throw ConfigError("solver.density_floor must be positive");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? end : buf);
}

ModelSpec ExperimentConfig::model() const {
  return make_reaction_model(x_lo, x_hi, ScalarField::affine(V), rho_D, make_reaction(reaction));
}

double ExperimentConfig::initial(double x) const {
  return initial_base + initial_amplitude * std::sin(std::numbers::pi * (x - x_lo) / (x_hi - x_lo));
}

Density ExperimentConfig::initial_density(const Grid& g) const {
  return Density::from_function(g, [this](double x) { return initial(x); });
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  auto solver_eq = [](const SolverOptions& a, const SolverOptions& b) {
    return a.tol == b.tol && a.kkt_tol == b.kkt_tol && a.max_iters == b.max_iters &&
           a.regularization == b.regularization && a.eps_initial == b.eps_initial &&
           a.eps_floor == b.eps_floor && a.polish == b.polish && a.density_floor == b.density_floor &&
           a.check_monotone == b.check_monotone;
  };
  return preset == o.preset && x_lo == o.x_lo && x_hi == o.x_hi && n_cells == o.n_cells &&
         reaction == o.reaction && V == o.V && rho_D.lower == o.rho_D.lower &&
         rho_D.upper == o.rho_D.upper && initial_base == o.initial_base &&
         initial_amplitude == o.initial_amplitude && tau == o.tau && tau_list == o.tau_list &&
         t_final == o.t_final && solver_eq(solver, o.solver) &&
         oracle_space_factor == o.oracle_space_factor && oracle_time_factor == o.oracle_time_factor &&
         output_dir == o.output_dir && output_prefix == o.output_prefix &&
         output_diagnostics == o.output_diagnostics;
}

ExperimentConfig parse_config(const std::string& text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  int preset_line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("empty key", line);
    if (e.value.empty()) throw ConfigError("empty value for '" + e.key + "'", line);
    if (!setters().contains(e.key)) throw ConfigError("unknown key '" + e.key + "'", line);
    if (auto it = seen.find(e.key); it != seen.end())
      throw ConfigError("duplicate key '" + e.key + "' (first on line " + std::to_string(it->second) + ")",
                        line);
    seen[e.key] = line;
    if (e.key == "preset") preset_line = line;
    entries.push_back(std::move(e));
  }

  ExperimentConfig cfg;
  for (const auto& e : entries)
    if (e.key == "preset") cfg.preset = e.value;
  apply_preset(cfg, preset_line);
  for (const auto& e : entries)
    if (e.key != "preset") setters().at(e.key)(cfg, e.value, e.line);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string render_model(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "domain.x_lo = " << format_double(c.x_lo) << "\n"
    << "domain.x_hi = " << format_double(c.x_hi) << "\n"
    << "domain.n_cells = " << c.n_cells << "\n"
    << "model.reaction = " << reaction_kind_name(c.reaction.kind) << "\n"
    << "model.W = " << affine_text(c.reaction.W) << "\n"
    << "model.Q = " << affine_text(c.reaction.Q) << "\n"
    << "model.beta = " << affine_text(c.reaction.beta) << "\n"
    << "model.alpha = " << affine_text(c.reaction.alpha) << "\n"
    << "model.V = " << affine_text(c.V) << "\n"
    << "model.rho_D = " << format_double(c.rho_D.lower) << ", " << format_double(c.rho_D.upper) << "\n";
  return o.str();
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "preset = " << c.preset << "\n"
    << render_model(c)
    << "initial.base = " << format_double(c.initial_base) << "\n"
    << "initial.amplitude = " << format_double(c.initial_amplitude) << "\n"
    << "scheme.tau = " << format_double(c.tau) << "\n"
    << "scheme.tau_list = " << list_text(c.tau_list) << "\n"
    << "scheme.t_final = " << format_double(c.t_final) << "\n"
    << "solver.tol = " << format_double(c.solver.tol) << "\n"
    << "solver.kkt_tol = " << format_double(c.solver.kkt_tol) << "\n"
    << "solver.max_iters = " << c.solver.max_iters << "\n"
    << "solver.regularization = " << format_double(c.solver.regularization) << "\n"
    << "solver.eps_initial = " << format_double(c.solver.eps_initial) << "\n"
    << "solver.eps_floor = " << format_double(c.solver.eps_floor) << "\n"
    << "solver.polish = " << (c.solver.polish ? "true" : "false") << "\n"
    << "solver.density_floor = " << format_double(c.solver.density_floor) << "\n"
    << "solver.check_monotone = " << (c.solver.check_monotone ? "true" : "false") << "\n"
    << "oracle.space_factor = " << c.oracle_space_factor << "\n"
    << "oracle.time_factor = " << c.oracle_time_factor << "\n"
    << "output.dir = " << c.output_dir << "\n"
    << "output.prefix = " << c.output_prefix << "\n"
    << "output.diagnostics = " << (c.output_diagnostics ? "true" : "false") << "\n";
  return o.str();
}

std::string model_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : render_model(cfg)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rjko
