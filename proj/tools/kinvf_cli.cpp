// kinvf run <config> | verify <config> | fit <csv> --window a b [--column name]
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kinvf/diagnostics.hpp"
#include "kinvf/errors.hpp"
#include "kinvf/kernels.hpp"
#include "kinvf/scenario.hpp"

using namespace kinvf;

namespace {

void print_checks(const ScenarioResult& r) {
  for (const auto& o : r.outputs)
    for (const auto& ch : o.checks)
      std::printf("%-4s %-24s %-28s value=%.6g limit=%.6g\n", ch.pass ? "PASS" : "FAIL", o.file.c_str(),
                  ch.name.c_str(), ch.value, ch.limit);
  if (r.aborted) std::printf("ABORT at t=%.6g: %s\n", r.t_reached, r.abort_message.c_str());
}

int run(const std::string& path, bool write) {
  const ScenarioConfig c = load_config(path);
  const ScenarioResult r = run_scenario(c);
  if (write) {
    write_outputs(c, r);
    std::printf("wrote %zu CSV files and summary.json to %s\n", r.outputs.size(), c.output_dir.string().c_str());
  }
  print_checks(r);
  return r.exit_code();
}

int fit(const std::string& path, double a, double b, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string s; std::getline(ss, s, ',');) header.push_back(s);
  }
  if (header.empty() || header[0] != "t") throw ConfigError(path + ": first column must be t");
  std::size_t col = 1;
  if (!column.empty()) {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) throw ConfigError(path + ": no column " + column);
    col = static_cast<std::size_t>(it - header.begin());
  }
  if (col >= header.size()) throw ConfigError(path + ": no value column");
  std::vector<SeriesPoint> s;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string v; std::getline(ss, v, ',');) row.push_back(std::stod(v));
    if (row.size() != header.size()) throw ConfigError(path + ": ragged row");
    s.push_back({row[0], row[col]});
  }
  const FitResult f = fit_decay_exponent(s, a, b);
  nlohmann::ordered_json j;
  j["file"] = path;
  j["column"] = header[col];
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  j["window"] = {f.t_min, f.t_max};
  j["points"] = f.points;
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinvf: kinetic vector field diagnostics"};
  app.require_subcommand(1);
  std::string config, csv, column;
  std::vector<double> window;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and write CSV and JSON outputs");
  run_cmd->add_option("config", config, "scenario config file")->required();
  auto* verify_cmd = app.add_subcommand("verify", "run a scenario and check invariants only");
  verify_cmd->add_option("config", config, "scenario config file")->required();
  auto* fit_cmd = app.add_subcommand("fit", "fit a decay exponent to a CSV column");
  fit_cmd->add_option("csv", csv, "CSV with a t column")->required();
  fit_cmd->add_option("--window", window, "t_min t_max")->expected(2)->required();
  fit_cmd->add_option("--column", column, "value column (default: second)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const int threads = configure_threads_from_env();
  std::fprintf(stderr, "kinvf: %d thread(s)\n", threads);
  try {
    if (*run_cmd) return run(config, true);
    if (*verify_cmd) return run(config, false);
    return fit(csv, window.at(0), window.at(1), column);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SolverAbort& e) {
    std::fprintf(stderr, "solver abort: %s\n", e.what());
    return kExitAbort;
  } catch (const SupportError& e) {
    std::fprintf(stderr, "solver abort: %s\n", e.what());
    return kExitAbort;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitConfig;
  }
}
