#include "kinvf/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace kinvf {

AxisSpec::AxisSpec(double lo, double hi, int n) : min(lo), max(hi), points(n) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !(hi > lo))
    throw std::invalid_argument("axis: max must exceed min");
  if (n < 4) throw std::invalid_argument("axis: at least 4 points required");
}

TensorGrid::TensorGrid(std::vector<AxisSpec> axes) : axes_(std::move(axes)) {
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (int k = rank() - 1; k >= 0; --k) {
    strides_[k] = size_;
    size_ *= static_cast<std::size_t>(axes_[k].points);
  }
}

std::size_t TensorGrid::flat(std::span<const int> index) const {
  std::size_t f = 0;
  for (int k = 0; k < rank(); ++k) f += strides_[k] * static_cast<std::size_t>(index[k]);
  return f;
}

void TensorGrid::unflatten(std::size_t flat, std::span<int> index) const {
  for (int k = 0; k < rank(); ++k) {
    index[k] = static_cast<int>(flat / strides_[k]);
    flat %= strides_[k];
  }
}

std::string PhaseAxis::name() const {
  return (kind == Kind::x ? "x" : "v") + std::to_string(index + 1);
}

SpatialGrid::SpatialGrid(std::vector<AxisSpec> axes) : layout_(std::move(axes)) {
  if (dim() < 1 || dim() > 3) throw std::invalid_argument("spatial grid: dimension must be 1, 2 or 3");
}

double SpatialGrid::cell_volume() const {
  double h = 1.0;
  for (int i = 0; i < dim(); ++i) h *= axis(i).spacing();
  return h;
}

PhaseGrid::PhaseGrid(std::vector<AxisSpec> x_axes, std::vector<AxisSpec> v_axes) {
  if (x_axes.size() != v_axes.size())
    throw std::invalid_argument("phase grid: x and v axis counts differ");
  dim_ = static_cast<int>(x_axes.size());
  if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("phase grid: dimension must be 1, 2 or 3");
  std::vector<AxisSpec> all = x_axes;
  all.insert(all.end(), v_axes.begin(), v_axes.end());
  layout_ = TensorGrid(std::move(all));
  spatial_size_ = 1;
  for (const auto& a : x_axes) spatial_size_ *= static_cast<std::size_t>(a.points);
}

PhaseGrid PhaseGrid::uniform(int dim, const AxisSpec& x, const AxisSpec& v) {
  return PhaseGrid(std::vector<AxisSpec>(dim, x), std::vector<AxisSpec>(dim, v));
}

SpatialGrid PhaseGrid::spatial() const {
  std::vector<AxisSpec> xs(layout_.axes().begin(), layout_.axes().begin() + dim_);
  return SpatialGrid(std::move(xs));
}

}  // namespace kinvf
