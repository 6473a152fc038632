// rjko: command-line front end. Usage: rjko <command> [config] [--set key=value]...

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rjko/config.hpp"
#include "rjko/errors.hpp"
#include "rjko/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimizing movements with boundary reservoirs: solver, oracle and checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  bool print_config = false;
  bool no_files = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "one trajectory with diagnostics"},
      {"sweep", "tau refinement study against the FD reference"},
      {"oracle", "finite-difference solve"},
      {"compare", "L2 distance between one trajectory and the FD reference"},
      {"audit", "assumption audit of the model"},
      {"verify", "invariant suite on small grids, including brute-force equivalence"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "config file (key = value); defaults when omitted");
    sub->add_option("--set", overrides, "extra 'key = value' line, applied after the file");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    sub->add_flag("--no-files", no_files, "do not write the report and CSV files");
  }

  CLI11_PARSE(app, argc, argv);

  rjko::ExperimentConfig cfg;
  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw rjko::IoError("cannot open config file " + config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      text = ss.str();
    }
    // Overrides replace earlier lines with the same key.
    auto key_of = [](const std::string& line) {
      auto k = line.substr(0, line.find('='));
      k.erase(0, k.find_first_not_of(" \t"));
      k.erase(k.find_last_not_of(" \t") + 1);
      return k;
    };
    for (const auto& o : overrides) {
      std::string kept;
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);)
        if (line.find('=') == std::string::npos || key_of(line) != key_of(o)) kept += line + "\n";
      text = kept + o + "\n";
    }
    cfg = rjko::parse_config(text);
  } catch (const rjko::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return rjko::kExitConfig;
  } catch (const rjko::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return rjko::kExitIo;
  }

  if (print_config) {
    std::cout << rjko::render_config(cfg);
    return rjko::kExitOk;
  }

  const auto* sub = app.get_subcommands().front();
  const auto cmd = *rjko::command_from_name(sub->get_name());
  const auto res = rjko::run_experiment(cfg, cmd, !no_files);
  std::cout << rjko::render_sections(res.sections);
  for (const auto& p : res.written) std::cout << "wrote " << p << "\n";
  if (!res.message.empty()) std::cerr << rjko::command_name(cmd) << ": " << res.message << "\n";
  return res.exit_code;
}
