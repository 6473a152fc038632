#include "rjko/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rjko/errors.hpp"

namespace rjko {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

double parse_cell(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw IoError("bad CSV value '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string solver_text(const SolverOptions& s) {
  std::ostringstream o;
  o << "tol:" << format_double(s.tol) << " kkt_tol:" << format_double(s.kkt_tol)
    << " max_iters:" << s.max_iters << " regularization:" << format_double(s.regularization)
    << " eps:" << format_double(s.eps_initial) << "-" << format_double(s.eps_floor)
    << " polish:" << (s.polish ? 1 : 0);
  return o.str();
}

}  // namespace

const std::string* CsvTable::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

bool CsvTable::same_content(const CsvTable& o) const {
  auto det = [](const CsvTable& t) {
    std::vector<std::pair<std::string, std::string>> m;
    for (const auto& kv : t.meta)
      if (kv.first != "generated") m.push_back(kv);
    return m;
  };
  if (schema != o.schema || columns != o.columns || det(*this) != det(o) || rows.size() != o.rows.size())
    return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != o.rows[i].size()) return false;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const double a = rows[i][j], b = o.rows[i][j];
      if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
    }
  }
  return true;
}

void write_csv(std::ostream& out, const CsvTable& t, bool timestamp) {
  out << "# schema=" << t.schema << "\n";
  for (const auto& [k, v] : t.meta) out << "# " << k << "=" << v << "\n";
  if (timestamp) out << "# generated=" << now_utc() << "\n";
  for (std::size_t j = 0; j < t.columns.size(); ++j) out << (j ? "," : "") << t.columns[j];
  out << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw IoError("CSV row width does not match the header");
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << cell_text(row[j]);
    out << "\n";
  }
  if (!out) throw IoError("CSV write failed");
}

void write_csv(const std::string& path, const CsvTable& t, bool timestamp) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_csv(f, t, timestamp);
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
      if (key == "schema")
        t.schema = value;
      else if (key != "generated")
        t.meta.emplace_back(std::move(key), std::move(value));
      continue;
    }
    if (!have_header) {
      t.columns = split(line);
      have_header = true;
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) throw IoError("CSV row width does not match the header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.rows.push_back(std::move(row));
  }
  if (t.schema.empty()) throw IoError("CSV without schema header");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  return read_csv(f);
}

std::vector<std::pair<std::string, std::string>> standard_meta(const ExperimentConfig& cfg) {
  return {{"model_hash", model_hash(cfg)},
          {"preset", cfg.preset},
          {"n_cells", std::to_string(cfg.n_cells)},
          {"solver", solver_text(cfg.solver)}};
}

CsvTable trajectory_table(const Trajectory& traj, const Grid& g, const ExperimentConfig& cfg) {
  CsvTable t{"rjko.trajectory/1", standard_meta(cfg), {"step", "t", "x", "rho", "h", "phi_star"}, {}};
  t.meta.emplace_back("tau", format_double(traj.tau));
  for (const auto& s : traj.snapshots) {
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      double h = kNaN, ps = kNaN;
      if (s.solution) {
        h = s.solution->h[i];
        ps = s.solution->phi_star[i];
      }
      t.rows.push_back({static_cast<double>(s.step), s.t, g.center(i), s.rho.density(i), h, ps});
    }
  }
  return t;
}

CsvTable diagnostics_table(const Trajectory& traj, const ExperimentConfig& cfg) {
  CsvTable t{"rjko.diagnostics/1",
             standard_meta(cfg),
             {"step", "t", "energy", "step_cost", "boundary_flux", "max_displacement", "created_mass_l1",
              "kkt_residual", "c_concavity_gap", "marginal_residual"},
             {}};
  t.meta.emplace_back("tau", format_double(traj.tau));
  for (const auto& s : traj.snapshots) {
    const auto& d = s.diagnostics;
    t.rows.push_back({static_cast<double>(s.step), s.t, s.energy, s.step_cost, d.boundary_flux,
                      d.max_displacement, d.created_mass_l1, s.info.kkt_residual, s.info.c_concavity_gap,
                      s.info.marginal_residual});
  }
  return t;
}

CsvTable convergence_table(const RefinementStudy& study, const ExperimentConfig& cfg) {
  CsvTable t{"rjko.convergence/1", standard_meta(cfg), {"tau", "error", "steps", "converged"}, {}};
  t.meta.emplace_back("order", format_double(study.order));
  t.meta.emplace_back("strictly_decreasing", study.strictly_decreasing ? "true" : "false");
  for (const auto& r : study.rows)
    t.rows.push_back({r.tau, r.error, static_cast<double>(r.steps), r.converged ? 1.0 : 0.0});
  return t;
}

CsvTable fd_table(const FDSolution& fd, const ExperimentConfig& cfg) {
  CsvTable t{"rjko.fd/1", standard_meta(cfg), {"t", "x", "rho"}, {}};
  t.meta.emplace_back("fd_cells", std::to_string(fd.grid.n_cells()));
  for (std::size_t k = 0; k < fd.times.size(); ++k)
    for (std::size_t i = 0; i < fd.grid.n_cells(); ++i)
      t.rows.push_back({fd.times[k], fd.grid.center(i), fd.values(static_cast<Eigen::Index>(k),
                                                                   static_cast<Eigen::Index>(i))});
  return t;
}

std::string render_sections(const std::vector<ReportSection>& sections) {
  std::ostringstream o;
  for (const auto& s : sections) {
    o << "== " << s.title << " ==\n";
    std::size_t w = 0;
    for (const auto& kv : s.lines) w = std::max(w, kv.first.size());
    for (const auto& [k, v] : s.lines) o << "  " << k << std::string(w - k.size() + 2, ' ') << v << "\n";
  }
  return o.str();
}

std::vector<std::string> emit_report(const ExperimentConfig& cfg,
                                     const std::vector<ReportSection>& sections,
                                     const std::vector<std::pair<std::string, CsvTable>>& tables) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir + ": " + ec.message());
  std::vector<std::string> paths;
  for (const auto& [name, table] : tables) {
    const auto p = (fs::path(cfg.output_dir) / (cfg.output_prefix + "_" + name + ".csv")).string();
    write_csv(p, table);
    paths.push_back(p);
  }
  const auto p = (fs::path(cfg.output_dir) / (cfg.output_prefix + "_report.txt")).string();
  std::ofstream f(p);
  if (!f) throw IoError("cannot open " + p + " for writing");
  f << render_sections(sections);
  if (!f) throw IoError("report write failed");
  paths.push_back(p);
  return paths;
}

}  // namespace rjko
