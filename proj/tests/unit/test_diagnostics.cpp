#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kinvf/diagnostics.hpp"
#include "kinvf/errors.hpp"
#include "kinvf/scenario.hpp"

using namespace kinvf;

namespace {

std::vector<SeriesPoint> series(double a, double h, int count, auto&& fn) {
  std::vector<SeriesPoint> s;
  for (int k = 0; k < count; ++k) s.push_back({a + k * h, fn(a + k * h)});
  return s;
}

ScenarioConfig parse(const std::string& text, const std::filesystem::path& base = ".") {
  std::istringstream in(text);
  return parse_config(in, base);
}

const char* kSmallVP = R"(
name = tiny
dimension = 1
x_extent = 16
x_points = 161
v_extent = 1.5
v_points = 61
width = 2
v_width = 0.25
amplitude = 0.1
solver = vlasov_poisson
dt = 0.1
t_end = 1
sample_every = 0.5
)";

}  // namespace

TEST_CASE("fit_decay_exponent") {
  SUBCASE("power law") {
    const auto s = series(1.0, 1.0, 10, [](double t) { return 3.0 * std::pow(t, -2.0); });
    const FitResult f = fit_decay_exponent(s);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.points == 10);
  }
  SUBCASE("constant series") {
    const FitResult f = fit_decay_exponent(series(1.0, 0.5, 7, [](double) { return 0.4; }));
    CHECK(std::fabs(f.slope) < 1e-14);
    CHECK(f.r_squared == 1.0);
  }
  SUBCASE("window") {
    // t^-1 below 10, t^-3 above
    const auto s = series(1.0, 1.0, 30, [](double t) { return t < 10 ? 1.0 / t : 100.0 * std::pow(t, -3.0); });
    const FitResult f = fit_decay_exponent(s, 12.0, 25.0);
    CHECK(f.slope == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(f.t_min == 12.0);
    CHECK(f.t_max == 25.0);
    CHECK(f.points == 14);
  }
  SUBCASE("noisy data: r^2 strictly inside [0, 1]") {
    const auto s = series(1.0, 1.0, 20, [](double t) { return std::pow(t, -1.0) * (1.0 + 0.3 * std::sin(3 * t)); });
    const FitResult f = fit_decay_exponent(s);
    CHECK(f.r_squared > 0.0);
    CHECK(f.r_squared < 1.0);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(fit_decay_exponent(series(1.0, 1.0, 4, [](double t) { return t; })), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay_exponent(series(1.0, 1.0, 6, [](double t) { return t - 3.0; })), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay_exponent(series(0.0, 1.0, 6, [](double) { return 1.0; })), std::invalid_argument);
    CHECK_THROWS_AS(fit_decay_exponent(series(1.0, 1.0, 20, [](double t) { return t; }), 2.0, 4.0),
                    std::invalid_argument);
  }
}

TEST_CASE("fit_log_growth") {
  const auto exact = series(0.0, 0.5, 41, [](double t) { return 0.3 + 0.7 * std::log1p(t); });
  const LogGrowthFit g = fit_log_growth(exact);
  CHECK(g.c0 == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(g.c1 == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(g.relative_residual < 1e-12);
  // t^2 is far from logarithmic
  const LogGrowthFit q = fit_log_growth(series(0.0, 0.5, 41, [](double t) { return t * t; }));
  CHECK(q.relative_residual > 0.1);
  CHECK(fit_log_growth(series(0.0, 1.0, 6, [](double) { return 2.0; })).relative_residual == 0.0);
}

TEST_CASE("ratio_report") {
  const auto zero = series(1.0, 1.0, 5, [](double) { return 0.0; });
  CHECK(ratio_report(zero, 2.0).sup == 0.0);
  const auto same = series(1.0, 1.0, 5, [](double) { return 2.0; });
  const RatioReport r = ratio_report(same, 2.0);
  CHECK(r.sup == 1.0);
  CHECK(r.mean == 1.0);
  const auto up = series(1.0, 1.0, 5, [](double t) { return t; });
  const RatioReport s = ratio_report(up, 2.0, same, 0.1);
  CHECK(s.sup == 2.5);
  CHECK(s.t_at_sup == 5.0);
  CHECK(s.drift == doctest::Approx(0.6));
  CHECK_FALSE(s.refinement_stable);
  CHECK(ratio_report(same, 2.0, same).refinement_stable);
  CHECK_THROWS_AS(ratio_report(same, 0.0), std::invalid_argument);
}

TEST_CASE("config parsing") {
  SUBCASE("defaults and per-axis values") {
    const ScenarioConfig c = parse(std::string(kSmallVP) + "diagnostic = conservation word=U1*S\n");
    CHECK(c.name == "tiny");
    CHECK(c.x_points == std::vector<int>{161});
    CHECK(c.mu == 1);
    CHECK(c.field_on);
    CHECK_FALSE(c.coefficients);
    REQUIRE(c.diagnostics.size() == 1);
    CHECK(c.diagnostics[0].text("word") == "U1*S");
    CHECK(c.output_dir == std::filesystem::path(".") / "out/tiny");
  }
  SUBCASE("times") {
    CHECK(parse_times("2:0.5:4") == std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0});
    CHECK(parse_times("1, 3,7") == std::vector<double>{1.0, 3.0, 7.0});
    CHECK(parse_times("2:0.5:50").size() == 97);
    CHECK_THROWS_AS(parse_times("3,2"), ConfigError);
    CHECK_THROWS_AS(parse_times("1:0:2"), ConfigError);
  }
  SUBCASE("schema errors") {
    const std::string base = kSmallVP;
    CHECK_THROWS_AS(parse("name = x\n"), ConfigError);
    CHECK_THROWS_AS(parse(base + "colour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse(base + "mu = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse(base + "name = again\n"), ConfigError);
    CHECK_THROWS_AS(parse(base + "diagnostic = decay times=1:1:5\n"), ConfigError);  // free-only kind
    CHECK_THROWS_AS(parse(base + "diagnostic = conservation word=U2\n"), ConfigError);  // n = 1
    CHECK_THROWS_AS(parse(base + "diagnostic = coefficient_growth\n"), ConfigError);  // coefficients off
    CHECK_THROWS_AS(parse(base + "initial = table\ntable = missing.txt\n"), ConfigError);
    std::string bad_dt = base;
    bad_dt.replace(bad_dt.find("dt = 0.1"), 8, "dt = 2.0");
    CHECK_THROWS_AS(parse(bad_dt), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
  }
}

TEST_CASE("table initial data round-trips") {
  const auto dir = std::filesystem::temp_directory_path() / "kinvf_test_table";
  std::filesystem::create_directories(dir);
  const ScenarioConfig g = parse(kSmallVP);
  const DistributionField f = initial_data(g);
  {
    std::ofstream out(dir / "f0.txt");
    out.precision(17);
    for (std::size_t i = 0; i < f.size(); ++i) out << f[i] << "\n";
  }
  // table data takes no shape keys
  std::string text = kSmallVP;
  for (const char* key : {"width = 2\n", "v_width = 0.25\n", "amplitude = 0.1\n"})
    text.erase(text.find(key), std::strlen(key));
  const ScenarioConfig c = parse(text + "initial = table\ntable = f0.txt\n", dir);
  CHECK(max_abs_difference(initial_data(c), f) == 0.0);
  {
    std::ofstream out(dir / "short.txt");
    out << "1 2 3\n";
  }
  CHECK_THROWS_AS(initial_data(parse(text + "initial = table\ntable = short.txt\n", dir)),
                  ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scenario runs") {
  SUBCASE("zero amplitude: success and all-zero outputs") {
    std::string text = kSmallVP;
    text.replace(text.find("amplitude = 0.1"), 15, "amplitude = 0");
    const ScenarioConfig c = parse(text + "coefficients = on\ndiagnostic = mass\ndiagnostic = norm_E N=1\n"
                                          "diagnostic = coefficient_growth field=U1\n");
    const ScenarioResult r = run_scenario(c);
    CHECK(r.exit_code() == kExitOk);
    REQUIRE(r.outputs.size() == 3);
    for (const auto& o : r.outputs) {
      CHECK(o.rows.size() == 3);
      for (const auto& row : o.rows)
        for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] == 0.0);
    }
  }
  SUBCASE("invariant failure gives exit 4, outputs still present") {
    const ScenarioConfig c = parse(std::string(kSmallVP) + "diagnostic = norm_E N=1 max_ratio=0.5\ndiagnostic = mass\n");
    const ScenarioResult r = run_scenario(c);
    CHECK(r.exit_code() == kExitInvariant);
    CHECK(r.outputs.size() == 2);
    CHECK(r.outputs[0].rows.size() == 3);
  }
  SUBCASE("support abort gives exit 3 and partial series") {
    std::string text = kSmallVP;
    text.replace(text.find("t_end = 1"), 9, "t_end = 30");
    const ScenarioResult r = run_scenario(parse(text + "diagnostic = mass\n"));
    CHECK(r.aborted);
    CHECK(r.exit_code() == kExitAbort);
    CHECK(r.t_reached > 0.0);
    CHECK(r.t_reached < 30.0);
    CHECK(!r.outputs[0].rows.empty());
  }
  SUBCASE("free transport with an expected slope") {
    const ScenarioConfig c = parse(R"(
name = free
dimension = 1
x_extent = 6
x_points = 121
v_extent = 6
v_points = 121
width = 0.7071067811865476
v_width = 0.7071067811865476
solver = free_exact
diagnostic = decay times=2:1:50 expect_slope=-1 slope_tol=0.05
diagnostic = bardos_degond times=1:1:20
diagnostic = l1 word=U1 times=5,10
)");
    const ScenarioResult r = run_scenario(c);
    CHECK(r.exit_code() == kExitOk);
    CHECK(r.outputs[0].summary.at("slope") < -0.95);
    CHECK(r.outputs[0].summary.at("slope") > -1.05);
    CHECK(r.outputs[0].file == "00_decay.csv");
  }
}

TEST_CASE("outputs are deterministic and well formed") {
  const ScenarioConfig c = parse(std::string(kSmallVP) + "diagnostic = mass\ndiagnostic = conservation\n");
  const ScenarioResult a = run_scenario(c), b = run_scenario(c);
  CHECK(summary_json(a) == summary_json(b));
  for (std::size_t k = 0; k < a.outputs.size(); ++k) CHECK(to_csv(a.outputs[k]) == to_csv(b.outputs[k]));
  const std::string csv = to_csv(a.outputs[0]);
  CHECK(csv.rfind("t,mass,drift\n0,", 0) == 0);
  // %.17g round-trips
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const double mass = std::stod(row.substr(row.find(',') + 1));
  CHECK(mass == a.outputs[0].rows[0][1]);
  const std::string js = summary_json(a);
  CHECK(js.find("\"schema_version\": 1") != std::string::npos);
  CHECK(js.find("\"status\": \"ok\"") != std::string::npos);
}
