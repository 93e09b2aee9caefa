#include "kinvf/grid_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kinvf/errors.hpp"

namespace kinvf {

std::vector<double> trapezoid_weights(const AxisSpec& axis) {
  std::vector<double> w(axis.points, axis.spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

std::vector<double> trapezoid_weights(std::span<const AxisSpec> axes) {
  std::vector<double> w{1.0};
  for (const auto& a : axes) {
    const auto wa = trapezoid_weights(a);
    std::vector<double> next;
    next.reserve(w.size() * wa.size());
    for (double x : w)
      for (double y : wa) next.push_back(x * y);
    w = std::move(next);
  }
  return w;
}

std::vector<double> spatial_weights(const PhaseGrid& grid) {
  return trapezoid_weights(std::span<const AxisSpec>(grid.layout().axes().data(), grid.dim()));
}

std::vector<double> velocity_weights(const PhaseGrid& grid) {
  return trapezoid_weights(
      std::span<const AxisSpec>(grid.layout().axes().data() + grid.dim(), grid.dim()));
}

std::vector<double> velocity_weight_power(const PhaseGrid& grid, double q) {
  const int n = grid.dim();
  std::vector<double> w(grid.velocity_block(), 1.0);
  if (q == 0.0) return w;
  for (std::size_t b = 0; b < w.size(); ++b) {
    std::size_t rem = b;
    double v2 = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      const int e = grid.v_axis(i).points;
      const double v = grid.v_axis(i).node(static_cast<int>(rem % e));
      v2 += v * v;
      rem /= e;
    }
    w[b] = std::pow(1.0 + v2, 0.5 * q);
  }
  return w;
}

SpatialField velocity_average(const DistributionField& f) {
  const auto& g = f.grid();
  const auto w = velocity_weights(g);
  std::vector<double> rho(g.spatial_size());
  kernels::contract_inner(f.values().data(), g.spatial_size(), w, rho.data());
  return SpatialField(g.spatial(), f.time(), std::move(rho));
}

SpatialField velocity_moment(const DistributionField& f, int i) {
  const auto& g = f.grid();
  auto w = velocity_weights(g);
  const int n = g.dim();
  std::size_t inner_stride = 1;
  for (int k = n - 1; k > i; --k) inner_stride *= g.v_axis(k).points;
  for (std::size_t b = 0; b < w.size(); ++b) {
    const int idx = static_cast<int>((b / inner_stride) % g.v_axis(i).points);
    w[b] *= g.v_axis(i).node(idx);
  }
  std::vector<double> m(g.spatial_size());
  kernels::contract_inner(f.values().data(), g.spatial_size(), w, m.data());
  return SpatialField(g.spatial(), f.time(), std::move(m));
}

double integrate(const DistributionField& f) {
  const auto rho = velocity_average(f);
  return integrate(rho);
}

double integrate(const SpatialField& f, int component) {
  const auto w = trapezoid_weights(std::span<const AxisSpec>(f.grid().layout().axes()));
  const auto& v = f.component(component);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * v[i];
  return acc;
}

double lp_norm_xv(const DistributionField& f, double p, double q) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_xv: p must be at least 1");
  if (!(q >= 0.0)) throw std::invalid_argument("lp_norm_xv: weight exponent must be non-negative");
  const auto& g = f.grid();
  const auto wx = spatial_weights(g);
  auto wv = velocity_weights(g);
  if (q != 0.0) {
    const auto chi = velocity_weight_power(g, q * p);
    for (std::size_t b = 0; b < wv.size(); ++b) wv[b] *= chi[b];
  }
  const double s = kernels::weighted_power_sum(f.values().data(), wx, wv, p);
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

double l1_norm(const DistributionField& f) { return lp_norm_xv(f, 1.0, 0.0); }

double lp_norm_x(const SpatialField& f, double p, int component) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_x: p must be at least 1");
  const auto w = trapezoid_weights(std::span<const AxisSpec>(f.grid().layout().axes()));
  const std::vector<double> one{1.0};
  const double s = kernels::weighted_power_sum(f.component(component).data(), w, one, p);
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

DistributionField partial(const DistributionField& f, PhaseAxis axis) {
  if (axis.index < 0 || axis.index >= f.dim()) throw std::invalid_argument("partial: bad axis");
  std::vector<double> out(f.size());
  kernels::diff_axis(f.values().data(), out.data(), f.grid().layout(), axis.flat(f.dim()));
  return f.with_values(std::move(out));
}

SpatialField partial(const SpatialField& f, int axis, int component) {
  if (axis < 0 || axis >= f.dim()) throw std::invalid_argument("partial: bad axis");
  std::vector<double> out(f.size());
  kernels::diff_axis(f.component(component).data(), out.data(), f.grid().layout(), axis);
  return SpatialField(f.grid(), f.time(), std::move(out));
}

namespace {

double tensor_interpolate(const TensorGrid& g, const double* data, std::span<const double> point) {
  const int r = g.rank();
  if (static_cast<int>(point.size()) != r)
    throw std::invalid_argument("interpolate: point has wrong dimension");
  kernels::Stencil4 st[6];
  for (int k = 0; k < r; ++k) {
    const auto& a = g.axis(k);
    const double p = (point[k] - a.min) / a.spacing();
    if (!(p >= -1e-12 && p <= a.points - 1 + 1e-12)) return 0.0;
    st[k] = kernels::cubic_stencil(std::clamp(p, 0.0, double(a.points - 1)), a.points);
  }
  int total = 1;
  for (int k = 0; k < r; ++k) total *= 4;
  double acc = 0.0;
  for (int c = 0; c < total; ++c) {
    int rem = c;
    double w = 1.0;
    std::size_t off = 0;
    for (int k = r - 1; k >= 0; --k) {
      const int m = rem % 4;
      rem /= 4;
      w *= st[k].w[m];
      off += g.stride(k) * static_cast<std::size_t>(st[k].start + m);
    }
    acc += w * data[off];
  }
  return acc;
}

}  // namespace

double interpolate(const DistributionField& f, std::span<const double> point) {
  return tensor_interpolate(f.grid().layout(), f.values().data(), point);
}

double interpolate(const SpatialField& f, std::span<const double> x, int component) {
  return tensor_interpolate(f.grid().layout(), f.component(component).data(), x);
}

DistributionField broadcast_multiply(const SpatialField& a, const DistributionField& f,
                                     int component) {
  if (!(a.grid() == f.grid().spatial()))
    throw std::invalid_argument("broadcast_multiply: grids differ");
  const std::size_t block = f.grid().velocity_block();
  const auto& av = a.component(component);
  std::vector<double> out(f.size());
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < av.size(); ++s)
    for (std::size_t b = 0; b < block; ++b) out[s * block + b] = av[s] * f[s * block + b];
  return f.with_values(std::move(out));
}

void require_compact_support(const DistributionField& f, double tol) {
  const double b = boundary_max_abs(f);
  if (!(b < tol))
    throw SupportError("data does not vanish on the grid boundary (max |f| = " + std::to_string(b) +
                       ")");
}

}  // namespace kinvf
