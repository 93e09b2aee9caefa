#pragma once

#include <span>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/kernels.hpp"

namespace kinvf {

inline constexpr double kSupportTol = 1e-12;

std::vector<double> trapezoid_weights(const AxisSpec& axis);
// Row-major tensor product of per-axis trapezoid weights.
std::vector<double> trapezoid_weights(std::span<const AxisSpec> axes);
std::vector<double> spatial_weights(const PhaseGrid& grid);
std::vector<double> velocity_weights(const PhaseGrid& grid);
// (1 + |v|^2)^(q/2) over the velocity block.
std::vector<double> velocity_weight_power(const PhaseGrid& grid, double q);

SpatialField velocity_average(const DistributionField& f);
// Velocity moment: integral of v^i f dv.
SpatialField velocity_moment(const DistributionField& f, int i);
double integrate(const DistributionField& f);
double integrate(const SpatialField& f, int component = 0);

// (∫∫ (1+|v|^2)^(q p / 2) |f|^p dx dv)^(1/p)
double lp_norm_xv(const DistributionField& f, double p, double q = 0.0);
double l1_norm(const DistributionField& f);
double lp_norm_x(const SpatialField& f, double p, int component = 0);

DistributionField partial(const DistributionField& f, PhaseAxis axis);
SpatialField partial(const SpatialField& f, int axis, int component = 0);

// Tensor-product cubic interpolation; 0 outside the grid box.
double interpolate(const DistributionField& f, std::span<const double> point);
double interpolate(const SpatialField& f, std::span<const double> x, int component = 0);

// a(x) * f(x, v)
DistributionField broadcast_multiply(const SpatialField& a, const DistributionField& f,
                                     int component = 0);

// Throws SupportError if |f| reaches tol on the outermost layer.
void require_compact_support(const DistributionField& f, double tol = kSupportTol);

}  // namespace kinvf
