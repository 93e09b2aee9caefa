#pragma once

#include <span>
#include <utility>
#include <vector>

#include "kinvf/grid.hpp"

namespace kinvf {

// f(t, x, v) sampled on a phase grid.
class DistributionField {
 public:
  DistributionField() = default;
  DistributionField(PhaseGrid grid, double time);
  DistributionField(PhaseGrid grid, double time, std::vector<double> values);

  // fn(x, v) with spans of length dim.
  template <class Fn>
  static DistributionField sample(const PhaseGrid& grid, double time, Fn&& fn);

  const PhaseGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  double time() const { return time_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  DistributionField with_values(std::vector<double> values) const {
    return DistributionField(grid_, time_, std::move(values));
  }
  DistributionField at_time(double time) const { return DistributionField(grid_, time, values_); }

 private:
  PhaseGrid grid_;
  double time_ = 0.0;
  std::vector<double> values_;
};

// rho, phi or grad phi on the x-projection of a phase grid.
class SpatialField {
 public:
  SpatialField() = default;
  SpatialField(SpatialGrid grid, double time, int components = 1);
  SpatialField(SpatialGrid grid, double time, std::vector<std::vector<double>> components);
  SpatialField(SpatialGrid grid, double time, std::vector<double> scalar);

  template <class Fn>
  static SpatialField sample(const SpatialGrid& grid, double time, Fn&& fn);

  const SpatialGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  double time() const { return time_; }
  int component_count() const { return static_cast<int>(components_.size()); }
  const std::vector<double>& component(int c = 0) const { return components_.at(c); }
  const std::vector<std::vector<double>>& components() const { return components_; }
  std::size_t size() const { return grid_.size(); }

  SpatialField at_time(double time) const { return SpatialField(grid_, time, components_); }

 private:
  SpatialGrid grid_;
  double time_ = 0.0;
  std::vector<std::vector<double>> components_;
};

template <class Fn>
DistributionField DistributionField::sample(const PhaseGrid& grid, double time, Fn&& fn) {
  const int n = grid.dim();
  const auto& layout = grid.layout();
  std::vector<double> vals(grid.size());
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < grid.spatial_size(); ++s) {
    double x[3], v[3];
    int idx[6];
    const std::size_t base = s * grid.velocity_block();
    layout.unflatten(base, std::span<int>(idx, 2 * n));
    for (int i = 0; i < n; ++i) x[i] = grid.x_axis(i).node(idx[i]);
    for (std::size_t b = 0; b < grid.velocity_block(); ++b) {
      std::size_t rem = b;
      for (int i = n - 1; i >= 0; --i) {
        const int e = grid.v_axis(i).points;
        v[i] = grid.v_axis(i).node(static_cast<int>(rem % e));
        rem /= e;
      }
      vals[base + b] = fn(std::span<const double>(x, n), std::span<const double>(v, n));
    }
  }
  return DistributionField(grid, time, std::move(vals));
}

template <class Fn>
SpatialField SpatialField::sample(const SpatialGrid& grid, double time, Fn&& fn) {
  const int n = grid.dim();
  std::vector<double> vals(grid.size());
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < grid.size(); ++s) {
    double x[3];
    for (int i = 0; i < n; ++i) x[i] = grid.layout().coord(i, s);
    vals[s] = fn(std::span<const double>(x, n));
  }
  return SpatialField(grid, time, std::move(vals));
}

// Pointwise helpers. Grids must match.
DistributionField operator+(const DistributionField& a, const DistributionField& b);
DistributionField operator-(const DistributionField& a, const DistributionField& b);
DistributionField operator*(double c, const DistributionField& a);
DistributionField multiply(const DistributionField& a, const DistributionField& b);
DistributionField abs(const DistributionField& a);
SpatialField operator+(const SpatialField& a, const SpatialField& b);
SpatialField operator-(const SpatialField& a, const SpatialField& b);
SpatialField operator*(double c, const SpatialField& a);

double max_abs(const DistributionField& f);
double max_abs(const SpatialField& f, int component = 0);
double max_abs_difference(const DistributionField& a, const DistributionField& b);
// Largest |f| on the outermost layer of the grid.
double boundary_max_abs(const DistributionField& f);
double boundary_max_abs(const SpatialField& f, int component = 0);

}  // namespace kinvf
