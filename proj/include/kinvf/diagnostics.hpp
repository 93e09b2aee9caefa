#pragma once

#include <limits>
#include <span>

#include "kinvf/free_transport.hpp"

namespace kinvf {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double t_min = 0.0;  // data range actually used
  double t_max = 0.0;
  std::size_t points = 0;
};

inline constexpr double kWholeSeries = std::numeric_limits<double>::infinity();

// Least squares of log value against log t over t in [t_min, t_max]. Needs
// at least 5 points in the window, t > 0 and value > 0 (std::invalid_argument).
FitResult fit_decay_exponent(std::span<const SeriesPoint> series, double t_min = -kWholeSeries,
                             double t_max = kWholeSeries);

// value ~ c0 + c1 log(1 + t). relative_residual = max |value - fit| / (max - min);
// 0 for a constant series.
struct LogGrowthFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double max_residual = 0.0;
  double range = 0.0;
  double relative_residual = 0.0;
  std::size_t points = 0;
};

LogGrowthFit fit_log_growth(std::span<const SeriesPoint> series, double t_min = -kWholeSeries,
                            double t_max = kWholeSeries);

struct RatioReport {
  double sup = 0.0;
  double mean = 0.0;
  double t_at_sup = 0.0;
  double refined_sup = 0.0;  // same sup at the refined resolution, if given
  double drift = 0.0;        // |refined_sup - sup| / sup
  bool refinement_stable = true;
};

// lhs / rhs over the series. rhs must be positive. With a refined series the
// flag checks drift < drift_tol.
RatioReport ratio_report(std::span<const SeriesPoint> lhs, double rhs);
RatioReport ratio_report(std::span<const SeriesPoint> lhs, double rhs,
                         std::span<const SeriesPoint> refined_lhs, double drift_tol = 0.1);

}  // namespace kinvf
