#ifndef GBSTRING_TOOLS_EXPERIMENT_HPP
#define GBSTRING_TOOLS_EXPERIMENT_HPP

#include "gbstring/dynamics.hpp"
#include "gbstring/solutions.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbs::tools {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Invalid or unknown configuration entries (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  int n_tau = 129;
  int n_sigma = 32;
  double tau_min = 0.1;
  double tau_max = 0.9;
};

struct ExperimentConfig {
  std::string solution;
  std::map<std::string, double> solution_params;
  int spacetime_dim = 0;  // 0: the solution's own dimension
  GridConfig grid;
  ActionParams action;
  std::string kind;
  Json options;  // kind-specific, defaults filled in
  std::string report_path;
  std::string csv_path;
  std::uint64_t seed = 0;
};

std::vector<std::string> experiment_kinds();

/// Validates everything before any computation and fills in defaults.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// The resolved configuration as embedded in reports.
Json to_json(const ExperimentConfig& c);

/// One row per active grid point: tau, sigma, then the named columns.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string render() const;
};

struct Report {
  Json json;  // schema_version, config, results, tolerances, pass, timings_ms
  bool pass = false;
  CsvTable csv;
  std::string render() const;  // JSON text, 2-space indent, trailing newline
};

/// Runs one experiment. Numerical failures propagate as the library's
/// exceptions; `timings` adds wall-clock timings (non-deterministic).
Report run_experiment(const ExperimentConfig& c, bool timings = false);

/// Exit status of the CLI for a finished report.
inline int exit_status(const Report& r) { return r.pass ? 0 : 1; }

}  // namespace gbs::tools

#endif  // GBSTRING_TOOLS_EXPERIMENT_HPP
