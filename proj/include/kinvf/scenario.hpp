#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/grid.hpp"

namespace kinvf {

// Config files are flat `key = value` lines; `#` starts a comment. Keys:
//   name, dimension, x_extent, x_points, v_extent, v_points  (one value, or one per axis)
//   initial = gaussian | box | table
//     gaussian: center, width, v_width, amplitude
//     box: same keys; amplitude on |x - center| <= width, |v| <= v_width, cosine taper of `taper`
//     table: table = <path>, values in grid order, relative paths from the config file
//   solver = free_exact | vlasov_poisson;  product = on (free_exact, gaussian, one 1D1V factor per axis)
//   mu = 1 | -1;  field = on | off;  coefficients = on | off
//   dt, t_end, sample_every;  output_dir (relative to the config file)
//   diagnostic = <kind> key=value ...   (repeatable, see README for kinds and columns)
enum class InitialKind { gaussian, box, table };
enum class SolverKind { free_exact, vlasov_poisson };

struct DiagnosticSpec {
  std::string kind;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) != 0; }
  std::string text(const std::string& key, const std::string& fallback = "") const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;  // ConfigError if missing
};

struct ScenarioConfig {
  std::string name;
  int dimension = 1;
  std::vector<double> x_extent, v_extent;
  std::vector<int> x_points, v_points;
  InitialKind initial = InitialKind::gaussian;
  std::vector<double> center, width, v_width;
  double amplitude = 1.0;
  double taper = 0.0;
  std::filesystem::path table_path;
  SolverKind solver = SolverKind::vlasov_poisson;
  bool product = false;
  int mu = 1;
  bool field_on = true;
  bool coefficients = false;
  double dt = 0.05;
  double t_end = 1.0;
  double sample_every = 1.0;
  std::vector<DiagnosticSpec> diagnostics;
  std::filesystem::path output_dir;
};

// Throw ConfigError on any syntax, schema or file problem.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_config(const std::filesystem::path& path);

// `a:step:b` (inclusive, a + k step) or a comma list; non-negative, increasing.
std::vector<double> parse_times(const std::string& text);

PhaseGrid scenario_grid(const ScenarioConfig& c);
// 1D1V grid of factor i for product runs.
PhaseGrid factor_grid(const ScenarioConfig& c, int i);
DistributionField initial_data(const ScenarioConfig& c);

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = true;
};

struct DiagnosticOutput {
  std::string kind;
  std::string file;  // CSV name inside output_dir
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> summary;
  std::vector<InvariantCheck> checks;
};

struct ScenarioResult {
  std::string name;
  std::vector<DiagnosticOutput> outputs;
  bool aborted = false;
  std::string abort_message;
  double t_reached = 0.0;

  bool invariants_hold() const;
  // 0 ok, 3 solver abort, 4 invariant failure
  int exit_code() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAbort = 3;
inline constexpr int kExitInvariant = 4;
inline constexpr int kSummarySchemaVersion = 1;

// Runs the solver and every diagnostic. Solver aborts are caught and reported;
// outputs hold what was computed before the abort.
ScenarioResult run_scenario(const ScenarioConfig& c);

// CSV per diagnostic (%.17g) and summary.json in c.output_dir.
void write_outputs(const ScenarioConfig& c, const ScenarioResult& r);
std::string summary_json(const ScenarioResult& r);
std::string to_csv(const DiagnosticOutput& d);

}  // namespace kinvf
