#include "kinvf/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>

#include "kinvf/diagnostics.hpp"
#include "kinvf/errors.hpp"
#include "kinvf/free_transport.hpp"
#include "kinvf/grid_ops.hpp"
#include "kinvf/modified_vf.hpp"
#include "kinvf/poisson.hpp"
#include "kinvf/vlasov_poisson.hpp"

namespace kinvf {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

double to_number(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& key, const std::string& s) {
  const double v = to_number(key, s);
  if (v != std::floor(v) || std::fabs(v) > 1e9) throw ConfigError(key + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

bool to_switch(const std::string& key, const std::string& s) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected on or off, got '" + s + "'");
}

// one value per axis, or one value repeated
template <class T, class Parse>
std::vector<T> per_axis(const std::string& key, const std::string& value, int n, Parse parse) {
  const auto parts = split_ws(value);
  if (parts.size() != 1 && static_cast<int>(parts.size()) != n)
    throw ConfigError(key + ": expected 1 or " + std::to_string(n) + " values");
  std::vector<T> out;
  for (int i = 0; i < n; ++i) out.push_back(parse(key, parts[parts.size() == 1 ? 0 : i]));
  return out;
}

OperatorWord word_param(const DiagnosticSpec& d, int dim, Flavor fl) {
  try {
    return parse_word(d.text("word"), dim, fl);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(d.kind + ": bad word '" + d.text("word") + "': " + e.what());
  }
}

std::vector<double> times_param(const DiagnosticSpec& d) {
  if (!d.has("times")) throw ConfigError(d.kind + ": times missing");
  return parse_times(d.text("times"));
}

const std::vector<std::string> kFreeKinds = {"decay", "weighted_decay", "modified_ks", "derivative_decay",
                                             "time_derivative_decay", "bardos_degond", "ks_ratio",
                                             "l1", "field_decay"};
const std::vector<std::string> kVPKinds = {"mass", "conservation", "weighted_conservation", "norm_E",
                                           "coefficient_growth", "modified_ks", "commutation"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string DiagnosticSpec::text(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double DiagnosticSpec::number(const std::string& key, double fallback) const {
  return has(key) ? to_number(kind + "." + key, text(key)) : fallback;
}

double DiagnosticSpec::number(const std::string& key) const {
  if (!has(key)) throw ConfigError(kind + ": " + key + " missing");
  return to_number(kind + "." + key, text(key));
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> p;
    std::stringstream ss(text);
    for (std::string s; std::getline(ss, s, ':');) p.push_back(trim(s));
    if (p.size() != 3) throw ConfigError("times: expected a:step:b");
    const double a = to_number("times", p[0]), h = to_number("times", p[1]), b = to_number("times", p[2]);
    if (!(h > 0.0) || b < a) throw ConfigError("times: empty or reversed range");
    const long k = std::lround(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= k; ++i) out.push_back(a + i * h);
  } else {
    std::stringstream ss(text);
    for (std::string s; std::getline(ss, s, ',');) out.push_back(to_number("times", trim(s)));
  }
  if (out.empty()) throw ConfigError("times: empty");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(out[i] >= 0.0) || (i > 0 && !(out[i] > out[i - 1])))
      throw ConfigError("times: must be non-negative and increasing");
  return out;
}

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> diag_lines;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "diagnostic") {
      diag_lines.push_back(value);
    } else if (!kv.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
    }
  }
  auto take = [&](const std::string& key, bool required, const std::string& fallback = "") {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (required) throw ConfigError("missing key " + key);
      return fallback;
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  ScenarioConfig c;
  c.name = take("name", true);
  c.dimension = to_int("dimension", take("dimension", true));
  if (c.dimension < 1 || c.dimension > 3) throw ConfigError("dimension must be 1, 2 or 3");
  const int n = c.dimension;
  c.x_extent = per_axis<double>("x_extent", take("x_extent", true), n, to_number);
  c.v_extent = per_axis<double>("v_extent", take("v_extent", true), n, to_number);
  c.x_points = per_axis<int>("x_points", take("x_points", true), n, to_int);
  c.v_points = per_axis<int>("v_points", take("v_points", true), n, to_int);
  for (int i = 0; i < n; ++i) {
    if (!(c.x_extent[i] > 0.0) || !(c.v_extent[i] > 0.0)) throw ConfigError("extents must be positive");
    if (c.x_points[i] < 5 || c.v_points[i] < 5) throw ConfigError("at least 5 points per axis");
  }

  const std::string init = take("initial", false, "gaussian");
  if (init == "gaussian") c.initial = InitialKind::gaussian;
  else if (init == "box") c.initial = InitialKind::box;
  else if (init == "table") c.initial = InitialKind::table;
  else throw ConfigError("initial: unknown kind '" + init + "'");
  if (c.initial == InitialKind::table) {
    c.table_path = base_dir / take("table", true);
    if (!std::filesystem::exists(c.table_path)) throw ConfigError("table: no such file " + c.table_path.string());
  } else {
    c.center = per_axis<double>("center", take("center", false, "0"), n, to_number);
    c.width = per_axis<double>("width", take("width", false, "1"), n, to_number);
    c.v_width = per_axis<double>("v_width", take("v_width", false, "1"), n, to_number);
    c.amplitude = to_number("amplitude", take("amplitude", false, "1"));
    c.taper = to_number("taper", take("taper", false, "0"));
    for (int i = 0; i < n; ++i)
      if (!(c.width[i] > 0.0) || !(c.v_width[i] > 0.0)) throw ConfigError("widths must be positive");
    if (c.taper < 0.0) throw ConfigError("taper must be >= 0");
  }

  const std::string solver = take("solver", true);
  if (solver == "free_exact") c.solver = SolverKind::free_exact;
  else if (solver == "vlasov_poisson") c.solver = SolverKind::vlasov_poisson;
  else throw ConfigError("solver: unknown '" + solver + "'");
  c.product = to_switch("product", take("product", false, "off"));
  if (c.product && (c.solver != SolverKind::free_exact || c.initial != InitialKind::gaussian))
    throw ConfigError("product: only for free_exact with gaussian data");
  c.mu = to_int("mu", take("mu", false, "1"));
  if (c.mu != 1 && c.mu != -1) throw ConfigError("mu must be 1 or -1");
  c.field_on = to_switch("field", take("field", false, "on"));
  c.coefficients = to_switch("coefficients", take("coefficients", false, "off"));
  c.dt = to_number("dt", take("dt", false, "0.05"));
  c.t_end = to_number("t_end", take("t_end", false, "1"));
  c.sample_every = to_number("sample_every", take("sample_every", false, "1"));
  if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(c.t_end > c.dt)) throw ConfigError("t_end must exceed dt");
  if (!(c.sample_every > 0.0)) throw ConfigError("sample_every must be positive");
  c.output_dir = base_dir / take("output_dir", false, "out/" + c.name);

  if (!kv.empty()) throw ConfigError("unknown key " + kv.begin()->first);

  const bool free = c.solver == SolverKind::free_exact;
  for (const auto& dl : diag_lines) {
    const auto parts = split_ws(dl);
    if (parts.empty()) throw ConfigError("diagnostic: empty");
    DiagnosticSpec d;
    d.kind = parts[0];
    if (!contains(free ? kFreeKinds : kVPKinds, d.kind))
      throw ConfigError("diagnostic: '" + d.kind + "' not available for this solver");
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string::npos) throw ConfigError("diagnostic " + d.kind + ": expected key=value");
      d.params[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
    }
    // validate words and times now so errors surface as parse errors
    const Flavor fl = d.kind == "field_decay" ? Flavor::macroscopic : Flavor::microscopic;
    if (d.has("word")) word_param(d, n, fl);
    if (d.has("field")) {
      const auto w = parse_word(d.text("field"), n, Flavor::microscopic);
      if (w.size() != 1) throw ConfigError(d.kind + ": field must be a single letter");
    }
    if (free) times_param(d);
    if ((d.kind == "coefficient_growth" || d.kind == "modified_ks") && !c.coefficients && !free)
      throw ConfigError(d.kind + ": needs coefficients = on");
    if (c.product && (d.kind == "ks_ratio" || d.kind == "l1"))
      throw ConfigError(d.kind + ": not available for product data");
    c.diagnostics.push_back(std::move(d));
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path().empty() ? "." : path.parent_path());
}

PhaseGrid scenario_grid(const ScenarioConfig& c) {
  std::vector<AxisSpec> xs, vs;
  for (int i = 0; i < c.dimension; ++i) {
    xs.emplace_back(-c.x_extent[i], c.x_extent[i], c.x_points[i]);
    vs.emplace_back(-c.v_extent[i], c.v_extent[i], c.v_points[i]);
  }
  return PhaseGrid(std::move(xs), std::move(vs));
}

PhaseGrid factor_grid(const ScenarioConfig& c, int i) {
  return PhaseGrid({AxisSpec(-c.x_extent[i], c.x_extent[i], c.x_points[i])},
                   {AxisSpec(-c.v_extent[i], c.v_extent[i], c.v_points[i])});
}

namespace {

// 1 on |y| <= w, cosine taper to 0 over [w, w + taper]
double plateau(double y, double w, double taper) {
  const double a = std::fabs(y);
  if (a <= w) return 1.0;
  if (taper <= 0.0 || a >= w + taper) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (a - w) / taper));
}

DistributionField factor_data(const ScenarioConfig& c, int i, double amp) {
  return DistributionField::sample(factor_grid(c, i), 0.0, [&](auto x, auto v) {
    const double y = (x[0] - c.center[i]) / c.width[i], u = v[0] / c.v_width[i];
    return amp * std::exp(-0.5 * (y * y + u * u));
  });
}

}  // namespace

DistributionField initial_data(const ScenarioConfig& c) {
  const PhaseGrid g = scenario_grid(c);
  const int n = c.dimension;
  switch (c.initial) {
    case InitialKind::gaussian:
      return DistributionField::sample(g, 0.0, [&](auto x, auto v) {
        double r = 0.0;
        for (int i = 0; i < n; ++i) {
          const double y = (x[i] - c.center[i]) / c.width[i], u = v[i] / c.v_width[i];
          r += y * y + u * u;
        }
        return c.amplitude * std::exp(-0.5 * r);
      });
    case InitialKind::box:
      return DistributionField::sample(g, 0.0, [&](auto x, auto v) {
        double p = c.amplitude;
        for (int i = 0; i < n; ++i)
          p *= plateau(x[i] - c.center[i], c.width[i], c.taper) * plateau(v[i], c.v_width[i], c.taper);
        return p;
      });
    case InitialKind::table: {
      std::ifstream in(c.table_path);
      std::vector<double> vals;
      for (double x; in >> x;) vals.push_back(x);
      if (!in.eof()) throw ConfigError("table: non-numeric entry in " + c.table_path.string());
      if (vals.size() != g.size())
        throw ConfigError("table: " + std::to_string(vals.size()) + " values, grid has " +
                          std::to_string(g.size()));
      return DistributionField(g, 0.0, std::move(vals));
    }
  }
  throw ConfigError("initial: unknown kind");
}

bool ScenarioResult::invariants_hold() const {
  for (const auto& o : outputs)
    for (const auto& ch : o.checks)
      if (!ch.pass) return false;
  return true;
}

int ScenarioResult::exit_code() const {
  if (aborted) return kExitAbort;
  return invariants_hold() ? kExitOk : kExitInvariant;
}

namespace {

void check_le(DiagnosticOutput& o, const std::string& name, double value, double limit) {
  o.checks.push_back({name, value, limit, value <= limit});
}

std::vector<SeriesPoint> column_series(const DiagnosticOutput& o, std::size_t col, double t_min = 0.0) {
  std::vector<SeriesPoint> s;
  for (const auto& r : o.rows)
    if (r[0] >= t_min) s.push_back({r[0], r[col]});
  return s;
}

// Decay fit of column col over [fit_min, fit_max] when the data allow it;
// expect_slope turns it into a check.
void add_decay_fit(DiagnosticOutput& o, const DiagnosticSpec& d, std::size_t col) {
  const auto s = column_series(o, col);
  try {
    const FitResult f = fit_decay_exponent(s, d.number("fit_min", -kWholeSeries), d.number("fit_max", kWholeSeries));
    o.summary["slope"] = f.slope;
    o.summary["intercept"] = f.intercept;
    o.summary["r_squared"] = f.r_squared;
    o.summary["fit_t_min"] = f.t_min;
    o.summary["fit_t_max"] = f.t_max;
    if (d.has("expect_slope"))
      check_le(o, "slope_error", std::fabs(f.slope - d.number("expect_slope")), d.number("slope_tol", 0.05));
  } catch (const std::invalid_argument&) {
    if (d.has("expect_slope")) o.checks.push_back({"slope_fit_available", 0.0, 1.0, false});
  }
}

DiagnosticOutput series_output(const std::string& kind, const DecaySeries& s) {
  DiagnosticOutput o;
  o.kind = kind;
  o.columns = {"t", "value"};
  for (const auto& p : s.points) o.rows.push_back({p.t, p.value});
  o.summary["boundary_warning"] = s.boundary_warning ? 1.0 : 0.0;
  return o;
}

std::vector<int> alpha_param(const DiagnosticSpec& d, int n) {
  std::vector<int> a;
  std::stringstream ss(d.text("alpha", "1"));
  for (std::string s; std::getline(ss, s, ',');) a.push_back(to_int("alpha", trim(s)));
  a.resize(n, 0);
  if (static_cast<int>(a.size()) != n) throw ConfigError("alpha: too many entries");
  return a;
}

template <class Sol>
DiagnosticOutput free_common(const ScenarioConfig& c, const Sol& sol, const DiagnosticSpec& d, bool& done) {
  const int n = c.dimension;
  const auto times = times_param(d);
  done = true;
  if (d.kind == "decay") {
    auto o = series_output(d.kind, decay_series(sol, word_param(d, n, Flavor::microscopic), times));
    add_decay_fit(o, d, 1);
    return o;
  }
  if (d.kind == "weighted_decay" || d.kind == "modified_ks") {
    // free transport: the coefficients vanish and the modified probe is the plain one
    auto o = series_output(d.kind, weighted_decay_series(sol, word_param(d, n, Flavor::microscopic), times));
    add_decay_fit(o, d, 1);
    if (d.has("max_slope") && o.summary.count("slope"))
      check_le(o, "trend_slope", std::fabs(o.summary["slope"]), d.number("max_slope"));
    return o;
  }
  if (d.kind == "derivative_decay") {
    const auto a = alpha_param(d, n);
    auto o = series_output(d.kind, improved_derivative_decay_series(sol, a, times));
    add_decay_fit(o, d, 1);
    return o;
  }
  if (d.kind == "time_derivative_decay") {
    auto o = series_output(d.kind, time_derivative_decay_series(sol, times));
    add_decay_fit(o, d, 1);
    return o;
  }
  if (d.kind == "bardos_degond") {
    const double rhs = bardos_degond_rhs(sol);
    const auto s = decay_series(sol, OperatorWord{}, times);
    DiagnosticOutput o;
    o.kind = d.kind;
    o.columns = {"t", "lhs", "rhs"};
    double violations = 0.0, worst = 0.0;
    for (const auto& p : s.points) {
      const double lhs = std::pow(p.t, n) * p.value;
      o.rows.push_back({p.t, lhs, rhs});
      if (p.t >= 1.0) {
        worst = std::max(worst, lhs / rhs);
        if (lhs > rhs) violations += 1.0;
      }
    }
    o.summary["max_ratio"] = worst;
    check_le(o, "violations", violations, 0.0);
    return o;
  }
  if (d.kind == "field_decay") {
    // box radius0 + speed t per axis, following the support of free transport
    const int pts = static_cast<int>(d.number("points", 33));
    std::vector<SpatialField> rho;
    for (double t : times) {
      std::vector<AxisSpec> xs;
      for (int i = 0; i < n; ++i) {
        const double R = d.number("radius0", c.x_extent[i]) + d.number("speed", c.v_extent[i]) * t;
        xs.emplace_back(-R, R, pts);
      }
      rho.push_back(density(sol, SpatialGrid(xs), t));
    }
    DiagnosticOutput o;
    o.kind = d.kind;
    o.columns = {"t", "value"};
    for (const auto& p : l2_gradient_decay(rho, word_param(d, n, Flavor::macroscopic)))
      o.rows.push_back({p.t, p.value});
    add_decay_fit(o, d, 1);
    return o;
  }
  done = false;
  return {};
}

DiagnosticOutput run_free_diagnostic(const ScenarioConfig& c, const FreeSolution& sol, const DiagnosticSpec& d) {
  bool done = false;
  DiagnosticOutput o = free_common(c, sol, d, done);
  if (done) return o;
  const auto times = times_param(d);
  o.kind = d.kind;
  if (d.kind == "ks_ratio") {
    const KsRatio r = ks_ratio(sol, times);
    o.columns = {"ratio", "t", "x_norm"};
    o.rows.push_back({r.ratio, r.t, r.x_norm});
    o.summary["ratio"] = r.ratio;
    o.summary["ks_rhs"] = ks_rhs(sol, c.dimension);
    o.checks.push_back({"finite", r.ratio, INFINITY, std::isfinite(r.ratio)});
    return o;
  }
  // l1
  const OperatorWord w = word_param(d, c.dimension, Flavor::microscopic);
  const double l0 = transported_l1_norm(sol, w, 0.0);
  o.columns = {"t", "l1", "drift"};
  double worst = 0.0;
  for (double t : times) {
    const double l = transported_l1_norm(sol, w, t);
    const double drift = l0 > 0.0 ? std::fabs(l / l0 - 1.0) : std::fabs(l);
    worst = std::max(worst, drift);
    o.rows.push_back({t, l, drift});
  }
  o.summary["max_drift"] = worst;
  check_le(o, "max_drift", worst, d.number("tol", 1e-3));
  return o;
}

// Streaming probes for self-consistent runs.
struct Probe {
  virtual ~Probe() = default;
  virtual void add(const VPState& s, const CoefficientSet* c) = 0;
  virtual DiagnosticOutput finish() = 0;
};

struct MassProbe : Probe {
  DiagnosticSpec d;
  DiagnosticOutput o;
  double m0 = 0.0, worst = 0.0;
  explicit MassProbe(DiagnosticSpec spec) : d(std::move(spec)) {
    o.kind = d.kind;
    o.columns = {"t", "mass", "drift"};
  }
  void add(const VPState& s, const CoefficientSet*) override {
    const double m = integrate(s.f);
    if (o.rows.empty()) m0 = m;
    const double drift = m0 != 0.0 ? std::fabs(m / m0 - 1.0) : std::fabs(m);
    worst = std::max(worst, drift);
    o.rows.push_back({s.time, m, drift});
  }
  DiagnosticOutput finish() override {
    o.summary["max_drift"] = worst;
    check_le(o, "max_drift", worst, d.number("tol", 1e-6));
    return o;
  }
};

struct ConservationProbe : Probe {
  DiagnosticSpec d;
  ConservationMonitor m;
  ConservationProbe(DiagnosticSpec spec, int n)
      : d(std::move(spec)), m(word_param(d, n, Flavor::microscopic)) {}
  void add(const VPState& s, const CoefficientSet*) override { m.add(s); }
  DiagnosticOutput finish() override {
    DiagnosticOutput o;
    o.kind = d.kind;
    o.columns = {"t", "l1", "source", "bound", "holds"};
    double violations = 0.0, drift = 0.0;
    const auto& pts = m.series();
    for (const auto& p : pts) {
      o.rows.push_back({p.t, p.l1, p.source, p.bound, p.holds ? 1.0 : 0.0});
      if (!p.holds) violations += 1.0;
      if (pts.front().l1 > 0.0) drift = std::max(drift, std::fabs(p.l1 / pts.front().l1 - 1.0));
    }
    o.summary["max_drift"] = drift;
    check_le(o, "violations", violations, 0.0);
    if (d.has("drift_tol")) check_le(o, "max_drift", drift, d.number("drift_tol"));
    return o;
  }
};

struct WeightedProbe : Probe {
  DiagnosticSpec d;
  WeightedConservationMonitor m;
  WeightedProbe(DiagnosticSpec spec, int n)
      : d(std::move(spec)),
        m(word_param(d, n, Flavor::microscopic), d.number("p", 1.1), d.number("q", 0.11)) {}
  void add(const VPState& s, const CoefficientSet*) override { m.add(s); }
  DiagnosticOutput finish() override {
    DiagnosticOutput o;
    o.kind = d.kind;
    o.columns = {"t", "lhs", "initial", "source", "field", "explicit_bound", "constant", "holds"};
    double violations = 0.0, constant = 0.0;
    for (const auto& p : m.series()) {
      o.rows.push_back({p.t, p.lhs, p.initial, p.source, p.field, p.explicit_bound, p.constant, p.holds ? 1.0 : 0.0});
      if (!p.holds) violations += 1.0;
      constant = std::max(constant, p.constant);
    }
    o.summary["constant"] = constant;
    check_le(o, "violations", violations, 0.0);
    return o;
  }
};

struct NormProbe : Probe {
  DiagnosticSpec d;
  int N;
  double delta;
  std::vector<SeriesPoint> norms;
  DiagnosticOutput o;
  explicit NormProbe(DiagnosticSpec spec)
      : d(std::move(spec)), N(static_cast<int>(d.number("N", 1))), delta(d.number("delta", 0.1)) {
    o.kind = d.kind;
    o.columns = {"t", "total", "l1_part", "weighted_part"};
  }
  void add(const VPState& s, const CoefficientSet*) override {
    const NormReport r = norm_E(s.f, N, delta);
    norms.push_back({s.time, r.total});
    o.rows.push_back({s.time, r.total, r.l1_part, r.weighted_lp_part});
  }
  DiagnosticOutput finish() override {
    const BootstrapReport b = bootstrap_monitor(norms);
    o.summary["max_ratio"] = b.max_ratio;
    o.summary["t_at_max"] = b.t_at_max;
    check_le(o, "max_ratio", b.max_ratio, d.number("max_ratio", 2.0));
    return o;
  }
};

struct CoefficientProbe : Probe {
  DiagnosticSpec d;
  FieldId z;
  int k, i;
  DiagnosticOutput o;
  CoefficientProbe(DiagnosticSpec spec, int n)
      : d(std::move(spec)),
        z(parse_word(d.text("field", "U1"), n, Flavor::microscopic).letters.at(0)),
        k(static_cast<int>(d.number("k", 0))),
        i(static_cast<int>(d.number("i", 0))) {
    if (k < 0 || k >= n || i < 0 || i >= n) throw ConfigError(d.kind + ": k and i must be axis indices");
    o.kind = d.kind;
    o.columns = {"t", "sup", "grad_sup"};
  }
  void add(const VPState& s, const CoefficientSet* c) override {
    o.rows.push_back({s.time, coefficient_sup(*c, z, k), coefficient_gradient_sup(*c, z, k, i)});
  }
  DiagnosticOutput finish() override {
    const double t_min = d.number("fit_min", 1.0);
    try {
      const auto g = fit_log_growth(column_series(o, 1, t_min));
      o.summary["log_c0"] = g.c0;
      o.summary["log_c1"] = g.c1;
      o.summary["log_relative_residual"] = g.relative_residual;
      if (d.has("max_residual"))
        check_le(o, "log_relative_residual", g.relative_residual, d.number("max_residual"));
    } catch (const std::invalid_argument&) {
      if (d.has("max_residual")) o.checks.push_back({"log_fit_available", 0.0, 1.0, false});
    }
    try {
      const auto f = fit_decay_exponent(column_series(o, 2, t_min));
      o.summary["grad_log_slope"] = f.slope;
      if (d.has("max_slope")) check_le(o, "grad_log_slope", std::fabs(f.slope), d.number("max_slope"));
    } catch (const std::invalid_argument&) {
      if (d.has("max_slope")) o.checks.push_back({"slope_fit_available", 0.0, 1.0, false});
    }
    return o;
  }
};

struct ModifiedKsProbe : Probe {
  DiagnosticSpec d;
  OperatorWord w;
  DiagnosticOutput o;
  ModifiedKsProbe(DiagnosticSpec spec, int n) : d(std::move(spec)), w(word_param(d, n, Flavor::microscopic)) {
    o.kind = d.kind;
    o.columns = {"t", "value"};
  }
  void add(const VPState& s, const CoefficientSet* c) override {
    o.rows.push_back({s.time, modified_ks_value(s.f, *c, w)});
  }
  DiagnosticOutput finish() override {
    try {
      const auto f = fit_decay_exponent(column_series(o, 1, d.number("fit_min", 1.0)));
      o.summary["slope"] = f.slope;
      if (d.has("max_slope")) check_le(o, "trend_slope", std::fabs(f.slope), d.number("max_slope"));
    } catch (const std::invalid_argument&) {
      if (d.has("max_slope")) o.checks.push_back({"slope_fit_available", 0.0, 1.0, false});
    }
    return o;
  }
};

DiagnosticOutput run_commutation(const ScenarioConfig& c, const VPState& s0, const DiagnosticSpec& d) {
  DiagnosticOutput o;
  o.kind = d.kind;
  o.columns = {"t", "lhs", "rhs", "residual", "uncorrected_residual", "bad_term", "bad_term_mismatch"};
  const int i = static_cast<int>(d.number("i", 0));
  if (i < 0 || i >= c.dimension) throw ConfigError("commutation: i must be an axis index");
  double worst = 0.0;
  for (const auto& r : improved_commutation_series(s0, i, c.t_end, c.dt, c.sample_every)) {
    o.rows.push_back({r.t, r.lhs, r.rhs, r.residual, r.uncorrected_residual, r.bad_term, r.bad_term_mismatch});
    worst = std::max(worst, r.bad_term_mismatch);
  }
  o.summary["max_bad_term_mismatch"] = worst;
  check_le(o, "max_bad_term_mismatch", worst, d.number("mismatch_tol", 0.05));
  return o;
}

void name_files(ScenarioResult& r) {
  for (std::size_t k = 0; k < r.outputs.size(); ++k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu_", k);
    r.outputs[k].file = buf + r.outputs[k].kind + ".csv";
  }
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& c) {
  ScenarioResult r;
  r.name = c.name;

  if (c.solver == SolverKind::free_exact) {
    try {
      if (c.product) {
        std::vector<FreeSolution> factors;
        for (int i = 0; i < c.dimension; ++i)
          factors.emplace_back(factor_data(c, i, i == 0 ? c.amplitude : 1.0));
        const ProductFreeSolution sol(std::move(factors));
        for (const auto& d : c.diagnostics) {
          bool done = false;
          r.outputs.push_back(free_common(c, sol, d, done));
          if (!done) throw ConfigError(d.kind + ": not available for product data");
        }
      } else {
        const FreeSolution sol(initial_data(c));
        for (const auto& d : c.diagnostics) r.outputs.push_back(run_free_diagnostic(c, sol, d));
      }
      r.t_reached = c.t_end;
    } catch (const SupportError& e) {
      r.aborted = true;
      r.abort_message = e.what();
    }
    name_files(r);
    return r;
  }

  const VPState s0 = make_state(initial_data(c), c.mu, c.field_on);
  std::vector<std::unique_ptr<Probe>> probes;
  std::vector<const DiagnosticSpec*> separate;
  for (const auto& d : c.diagnostics) {
    if (d.kind == "mass") probes.push_back(std::make_unique<MassProbe>(d));
    else if (d.kind == "conservation") probes.push_back(std::make_unique<ConservationProbe>(d, c.dimension));
    else if (d.kind == "weighted_conservation") probes.push_back(std::make_unique<WeightedProbe>(d, c.dimension));
    else if (d.kind == "norm_E") probes.push_back(std::make_unique<NormProbe>(d));
    else if (d.kind == "coefficient_growth") probes.push_back(std::make_unique<CoefficientProbe>(d, c.dimension));
    else if (d.kind == "modified_ks") probes.push_back(std::make_unique<ModifiedKsProbe>(d, c.dimension));
    else separate.push_back(&d);
  }
  r.t_reached = s0.time;
  try {
    if (c.coefficients) {
      CoefficientSet cs = CoefficientSet::zero(s0.f.grid(), s0.time);
      evolve_with_coefficients(s0, cs, c.t_end, c.dt, c.sample_every,
                               [&](const VPState& s, const CoefficientSet& co) {
                                 for (auto& p : probes) p->add(s, &co);
                                 r.t_reached = s.time;
                               });
    } else {
      evolve(s0, c.t_end, c.dt, c.sample_every, [&](const VPState& s) {
        for (auto& p : probes) p->add(s, nullptr);
        r.t_reached = s.time;
      });
    }
  } catch (const SolverAbort& e) {
    r.aborted = true;
    r.abort_message = e.what();
  }
  for (auto& p : probes) r.outputs.push_back(p->finish());
  if (!r.aborted) {
    for (const auto* d : separate) {
      try {
        r.outputs.push_back(run_commutation(c, s0, *d));
      } catch (const SolverAbort& e) {
        r.aborted = true;
        r.abort_message = e.what();
        break;
      }
    }
  }
  name_files(r);
  return r;
}

std::string to_csv(const DiagnosticOutput& d) {
  std::string out;
  for (std::size_t k = 0; k < d.columns.size(); ++k) out += (k ? "," : "") + d.columns[k];
  out += "\n";
  char buf[32];
  for (const auto& row : d.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      if (k) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string summary_json(const ScenarioResult& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["name"] = r.name;
  j["status"] = r.aborted ? "solver_abort" : (r.invariants_hold() ? "ok" : "invariant_failure");
  j["exit_code"] = r.exit_code();
  j["t_reached"] = r.t_reached;
  if (r.aborted) j["abort_message"] = r.abort_message;
  j["diagnostics"] = ordered_json::array();
  for (const auto& o : r.outputs) {
    ordered_json d;
    d["kind"] = o.kind;
    d["file"] = o.file;
    d["columns"] = o.columns;
    d["rows"] = o.rows.size();
    d["summary"] = ordered_json::object();
    for (const auto& [k, v] : o.summary) d["summary"][k] = std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
    d["checks"] = ordered_json::array();
    for (const auto& ch : o.checks)
      d["checks"].push_back({{"name", ch.name},
                             {"value", std::isfinite(ch.value) ? ordered_json(ch.value) : ordered_json(nullptr)},
                             {"limit", std::isfinite(ch.limit) ? ordered_json(ch.limit) : ordered_json(nullptr)},
                             {"pass", ch.pass}});
    j["diagnostics"].push_back(std::move(d));
  }
  return j.dump(2) + "\n";
}

void write_outputs(const ScenarioConfig& c, const ScenarioResult& r) {
  std::filesystem::create_directories(c.output_dir);
  for (const auto& o : r.outputs) {
    std::ofstream f(c.output_dir / o.file, std::ios::binary);
    f << to_csv(o);
  }
  std::ofstream(c.output_dir / "summary.json", std::ios::binary) << summary_json(r);
}

}  // namespace kinvf
