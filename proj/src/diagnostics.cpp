#include "kinvf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kinvf {

namespace {

struct Line {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit: abscissae must not all coincide");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - l.intercept - l.slope * x[i];
    ss_res += r * r;
  }
  // constant data is fitted exactly
  l.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return l;
}

std::vector<SeriesPoint> window(std::span<const SeriesPoint> s, double t_min, double t_max) {
  std::vector<SeriesPoint> out;
  for (const auto& p : s)
    if (p.t >= t_min && p.t <= t_max) out.push_back(p);
  if (out.size() < 5) throw std::invalid_argument("fit: fewer than 5 points in the window");
  return out;
}

}  // namespace

FitResult fit_decay_exponent(std::span<const SeriesPoint> series, double t_min, double t_max) {
  const auto pts = window(series, t_min, t_max);
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!(p.t > 0.0)) throw std::invalid_argument("fit_decay_exponent: times must be positive");
    if (!(p.value > 0.0) || !std::isfinite(p.value))
      throw std::invalid_argument("fit_decay_exponent: values must be positive");
    x.push_back(std::log(p.t));
    y.push_back(std::log(p.value));
  }
  const Line l = least_squares(x, y);
  FitResult r;
  r.slope = l.slope;
  r.intercept = l.intercept;
  r.r_squared = l.r2;
  r.t_min = pts.front().t;
  r.t_max = pts.back().t;
  r.points = pts.size();
  return r;
}

LogGrowthFit fit_log_growth(std::span<const SeriesPoint> series, double t_min, double t_max) {
  const auto pts = window(series, t_min, t_max);
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!(p.t > -1.0) || !std::isfinite(p.value)) throw std::invalid_argument("fit_log_growth: bad point");
    x.push_back(std::log1p(p.t));
    y.push_back(p.value);
  }
  const Line l = least_squares(x, y);
  LogGrowthFit r;
  r.c0 = l.intercept;
  r.c1 = l.slope;
  r.points = pts.size();
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  r.range = *hi - *lo;
  for (std::size_t i = 0; i < x.size(); ++i)
    r.max_residual = std::max(r.max_residual, std::fabs(y[i] - r.c0 - r.c1 * x[i]));
  r.relative_residual = r.range > 0.0 ? r.max_residual / r.range : 0.0;
  return r;
}

RatioReport ratio_report(std::span<const SeriesPoint> lhs, double rhs) {
  if (!(rhs > 0.0)) throw std::invalid_argument("ratio_report: rhs must be positive");
  RatioReport r;
  if (lhs.empty()) return r;
  for (const auto& p : lhs) {
    const double q = p.value / rhs;
    r.mean += q;
    if (q > r.sup) {
      r.sup = q;
      r.t_at_sup = p.t;
    }
  }
  r.mean /= static_cast<double>(lhs.size());
  r.refined_sup = r.sup;
  return r;
}

RatioReport ratio_report(std::span<const SeriesPoint> lhs, double rhs,
                         std::span<const SeriesPoint> refined_lhs, double drift_tol) {
  RatioReport r = ratio_report(lhs, rhs);
  r.refined_sup = ratio_report(refined_lhs, rhs).sup;
  const double diff = std::fabs(r.refined_sup - r.sup);
  r.drift = r.sup > 0.0 ? diff / r.sup : (diff > 0.0 ? INFINITY : 0.0);
  r.refinement_stable = r.drift < drift_tol;
  return r;
}

}  // namespace kinvf
