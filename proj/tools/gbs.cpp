#include "experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace gbs;
using namespace gbs::tools;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

Json solutions_json() {
  Json out = Json::array();
  for (const auto& info : list_solutions()) {
    std::map<std::string, double> unit;
    for (const auto& p : info.params) unit[p] = 1.0;
    out.push_back({{"name", info.name},
                   {"params", info.params},
                   {"on_shell", info.on_shell},
                   {"spacetime_dim", make_solution(info.name, unit).dim},
                   {"families", make_solution(info.name, unit).family_names()},
                   {"description", info.description}});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gauss-Bonnet string worldsheet experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  bool timings = false;

  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_path, "Report path; overrides output.report");
  run->add_option("--seed", seed, "Seed; overrides the config");
  run->add_flag("--timings", timings, "Record wall-clock timings (breaks byte-identical reports)");

  auto* list = app.add_subcommand("list-solutions", "List the exact solutions");

  auto* validate = app.add_subcommand("validate", "Validate a config and print it resolved");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    std::cout << solutions_json().dump(2) << "\n";
    return 0;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_path.empty()) cfg.report_path = out_path;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (validate->parsed()) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return 0;
  }

  Report report;
  try {
    report = run_experiment(cfg, timings);
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  try {
    if (cfg.report_path.empty()) {
      std::cout << report.render();
    } else {
      write_file(cfg.report_path, report.render());
    }
    if (!cfg.csv_path.empty()) write_file(cfg.csv_path, report.csv.render());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  std::cerr << cfg.kind << ": " << (report.pass ? "pass" : "FAIL") << "\n";
  return exit_status(report);
}
