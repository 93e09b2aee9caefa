#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kinvf {

struct AxisSpec {
  double min = 0.0;
  double max = 1.0;
  int points = 4;

  AxisSpec() = default;
  AxisSpec(double min, double max, int points);

  double spacing() const { return (max - min) / (points - 1); }
  double node(int i) const { return min + i * spacing(); }
  double length() const { return max - min; }
  bool contains(double c) const { return c >= min && c <= max; }

  bool operator==(const AxisSpec&) const = default;
};

// Row-major layout over an ordered list of axes.
class TensorGrid {
 public:
  TensorGrid() = default;
  explicit TensorGrid(std::vector<AxisSpec> axes);

  int rank() const { return static_cast<int>(axes_.size()); }
  const AxisSpec& axis(int k) const { return axes_.at(k); }
  const std::vector<AxisSpec>& axes() const { return axes_; }
  int extent(int k) const { return axes_[k].points; }
  std::size_t stride(int k) const { return strides_[k]; }
  std::size_t size() const { return size_; }

  std::size_t flat(std::span<const int> index) const;
  void unflatten(std::size_t flat, std::span<int> index) const;
  int index_along(int k, std::size_t flat) const {
    return static_cast<int>((flat / strides_[k]) % axes_[k].points);
  }
  double coord(int k, std::size_t flat) const { return axes_[k].node(index_along(k, flat)); }

  bool operator==(const TensorGrid& o) const { return axes_ == o.axes_; }

 private:
  std::vector<AxisSpec> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

struct PhaseAxis {
  enum class Kind { x, v };
  Kind kind = Kind::x;
  int index = 0;

  static PhaseAxis x(int i) { return {Kind::x, i}; }
  static PhaseAxis v(int i) { return {Kind::v, i}; }
  int flat(int dim) const { return kind == Kind::x ? index : dim + index; }
  std::string name() const;
  bool operator==(const PhaseAxis&) const = default;
};

class SpatialGrid {
 public:
  SpatialGrid() = default;
  explicit SpatialGrid(std::vector<AxisSpec> axes);

  int dim() const { return layout_.rank(); }
  const AxisSpec& axis(int i) const { return layout_.axis(i); }
  const TensorGrid& layout() const { return layout_; }
  std::size_t size() const { return layout_.size(); }
  double cell_volume() const;

  bool operator==(const SpatialGrid&) const = default;

 private:
  TensorGrid layout_;
};

// x-axes first, then v-axes.
class PhaseGrid {
 public:
  PhaseGrid() = default;
  PhaseGrid(std::vector<AxisSpec> x_axes, std::vector<AxisSpec> v_axes);
  static PhaseGrid uniform(int dim, const AxisSpec& x, const AxisSpec& v);

  int dim() const { return dim_; }
  const AxisSpec& x_axis(int i) const { return layout_.axis(i); }
  const AxisSpec& v_axis(int i) const { return layout_.axis(dim_ + i); }
  const AxisSpec& axis(PhaseAxis a) const { return layout_.axis(a.flat(dim_)); }
  const TensorGrid& layout() const { return layout_; }
  std::size_t size() const { return layout_.size(); }
  // Number of velocity nodes attached to each x node (the contiguous inner block).
  std::size_t velocity_block() const { return layout_.size() / spatial_size_; }
  std::size_t spatial_size() const { return spatial_size_; }
  SpatialGrid spatial() const;

  bool operator==(const PhaseGrid& o) const { return dim_ == o.dim_ && layout_ == o.layout_; }

 private:
  int dim_ = 0;
  TensorGrid layout_;
  std::size_t spatial_size_ = 0;
};

}  // namespace kinvf
