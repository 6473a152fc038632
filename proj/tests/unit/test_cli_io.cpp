#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rjko/config.hpp"
#include "rjko/errors.hpp"
#include "rjko/experiment.hpp"
#include "rjko/report.hpp"

using namespace rjko;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string body(const std::string& path) {
  std::ifstream f(path);
  std::string out, line;
  while (std::getline(f, line))
    if (line.rfind("# generated=", 0) != 0) out += line + "\n";
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rjko_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal stationary document takes the defaults") {
  const auto c = parse_config("preset = stationary\n");
  CHECK(c.preset == "stationary");
  CHECK(c.n_cells == 64);
  CHECK(c.reaction.kind == ReactionKind::Power);
  CHECK(c.rho_D.lower == 1.0);
  CHECK(c.initial_amplitude == 0.0);
  CHECK(c.tau_list.size() == 4);
  CHECK(c.oracle_space_factor == 4);
  CHECK(c.oracle_time_factor == 8);

  const auto d = parse_config("initial.amplitude = 0.3   # override\npreset = decaying\n");
  CHECK(d.initial_amplitude == 0.3);
  CHECK(parse_config("preset = decaying").initial_amplitude == 0.1);
  CHECK(parse_config("preset = decaying").solver.regularization == 0.5);
  CHECK(parse_config("preset = decaying\nsolver.regularization = 0").solver.regularization == 0.0);
  CHECK(c.solver.regularization == 0.0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse_config("model.Q = -1"), ConfigError);
  CHECK_THROWS_AS(parse_config("model.W = 0"), ConfigError);
  CHECK_THROWS_AS(parse_config("scheme.tau_list = 0.01, 0.02, 0.04"), ConfigError);
  CHECK_THROWS_AS(parse_config("scheme.tau_list = 0.04, 0.02"), ConfigError);
  CHECK_THROWS_AS(parse_config("model.rho_D = 1, 0"), ConfigError);
  CHECK_THROWS_AS(parse_config("initial.base = 0.5\ninitial.amplitude = -0.6"), ConfigError);
  CHECK_THROWS_AS(parse_config("model.reaction = signed-power\nmodel.alpha = 1.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("solver.eps_initial = 1e-4\nsolver.eps_floor = 1e-3"), ConfigError);
  CHECK_THROWS_AS(parse_config("preset = wavy"), ConfigError);
  CHECK(error_line("preset = stationary\n\ndomain.n_cels = 8\n") == 3);
  CHECK(error_line("domain.n_cells = 8\ndomain.n_cells = 16\n") == 2);
  CHECK(error_line("domain.n_cells = 0.5\n") == 1);
  CHECK(error_line("just text\n") == 1);
}

TEST_CASE("config round trip") {
  auto c = parse_config("preset = decaying\nmodel.reaction = signed-power\nmodel.alpha = 0.25\n"
                        "model.V = 0.1, 0.3\ndomain.n_cells = 12\nscheme.tau = 0.1\n");
  c.solver.tol = 3e-9;
  const auto again = parse_config(render_config(c));
  CHECK(again == c);
  CHECK(model_hash(again) == model_hash(c));
  CHECK(model_hash(c).size() == 16);
  auto other = c;
  other.rho_D.upper = 1.5;
  CHECK(model_hash(other) != model_hash(c));
  other = c;
  other.tau = 0.05;  // scheme keys do not enter the model hash
  CHECK(model_hash(other) == model_hash(c));
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("CSV round trips") {
  CsvTable t;
  t.schema = "rjko.fd/1";
  t.meta = {{"model_hash", "0123456789abcdef"}, {"n_cells", "3"}};
  t.columns = {"t", "x", "rho"};
  t.rows = {{0.0, 1.0 / 3.0, 1e-300},
            {0.1, -2.5e7, std::numeric_limits<double>::quiet_NaN()},
            {std::numeric_limits<double>::infinity(), 0.7, 1.0 + 1e-15}};
  for (bool stamp : {true, false}) {
    std::stringstream ss;
    write_csv(ss, t, stamp);
    CHECK((ss.str().find("# generated=") != std::string::npos) == stamp);
    const auto back = read_csv(ss);
    CHECK(back.same_content(t));
    CHECK(back.rows[0][1] == 1.0 / 3.0);
    CHECK(std::isnan(back.rows[1][2]));
    CHECK(back.rows[2][2] == 1.0 + 1e-15);
    CHECK(back.find_meta("generated") == nullptr);  // the timestamp is not content
  }
  std::stringstream bad("# schema=x\nt,x\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(bad), IoError);
  std::stringstream noschema("t\n1\n");
  CHECK_THROWS_AS(read_csv(noschema), IoError);
}

TEST_CASE("solve on the stationary preset writes constant rows") {
  auto c = parse_config("preset = stationary\ndomain.n_cells = 8\nscheme.tau = 0.1\nscheme.t_final = 0.3\n");
  const auto res = run_experiment(c, Command::Solve, false);
  REQUIRE(res.exit_code == kExitOk);
  const CsvTable* traj = nullptr;
  for (const auto& [name, table] : res.tables)
    if (table.schema == "rjko.trajectory/1") traj = &table;
  REQUIRE(traj != nullptr);
  CHECK(traj->rows.size() == 4 * 8);
  for (const auto& row : traj->rows) CHECK(std::abs(row[3] - 1.0) <= 1e-6);
  REQUIRE(traj->find_meta("model_hash") != nullptr);
  CHECK(*traj->find_meta("model_hash") == model_hash(c));
}

TEST_CASE("reruns produce identical CSV bodies") {
  const auto dir = scratch_dir("rerun");
  auto c = parse_config("preset = decaying\ndomain.n_cells = 8\nscheme.tau = 0.1\nscheme.t_final = 0.2\n");
  c.output_dir = dir.string();
  c.output_prefix = "a";
  const auto r1 = run_experiment(c, Command::Solve, true);
  c.output_prefix = "b";
  const auto r2 = run_experiment(c, Command::Solve, true);
  REQUIRE(r1.exit_code == kExitOk);
  REQUIRE(r2.exit_code == kExitOk);
  REQUIRE(r1.written.size() == r2.written.size());
  std::size_t csvs = 0;
  for (std::size_t i = 0; i < r1.written.size(); ++i) {
    if (fs::path(r1.written[i]).extension() != ".csv") continue;
    ++csvs;
    CHECK(body(r1.written[i]) == body(r2.written[i]));
    CHECK(read_csv(r1.written[i]).same_content(read_csv(r2.written[i])));
  }
  CHECK(csvs >= 2);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(command_from_name("verify") == Command::Verify);
  CHECK_FALSE(command_from_name("plot").has_value());
  CHECK(command_name(Command::Sweep) == "sweep");

  auto c = parse_config("preset = stationary\ndomain.n_cells = 4\nscheme.tau = 0.1\nscheme.t_final = 0.1\n");
  CHECK(run_experiment(c, Command::Audit, false).exit_code == kExitOk);

  // a file where the output directory should be
  const auto dir = scratch_dir("io");
  fs::create_directories(dir);
  std::ofstream(dir / "blocker") << "x";
  auto io = c;
  io.output_dir = (dir / "blocker" / "sub").string();
  const auto r = run_experiment(io, Command::Solve, true);
  CHECK(r.exit_code == kExitIo);
  CHECK_FALSE(r.message.empty());
  fs::remove_all(dir);

  auto bad = c;
  bad.rho_D.lower = -1.0;  // bypasses the parser; the model constructor rejects it
  CHECK(run_experiment(bad, Command::Solve, false).exit_code != kExitOk);

  auto stuck = parse_config("preset = decaying\ndomain.n_cells = 8\nscheme.tau = 0.1\nscheme.t_final = 0.1\n"
                            "solver.max_iters = 1\nsolver.polish = false\n");
  CHECK(run_experiment(stuck, Command::Solve, false).exit_code == kExitSolver);
}
