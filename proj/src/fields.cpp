#include "kinvf/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kinvf {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
}

void require_same(const DistributionField& a, const DistributionField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field arithmetic: grids differ");
}

void require_same(const SpatialField& a, const SpatialField& b) {
  if (!(a.grid() == b.grid()) || a.component_count() != b.component_count())
    throw std::invalid_argument("field arithmetic: grids differ");
}

template <class Op>
DistributionField zip(const DistributionField& a, const DistributionField& b, Op op) {
  require_same(a, b);
  std::vector<double> out(a.size());
  const auto& x = a.values();
  const auto& y = b.values();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(x[i], y[i]);
  return a.with_values(std::move(out));
}

template <class Op>
SpatialField zip(const SpatialField& a, const SpatialField& b, Op op) {
  require_same(a, b);
  std::vector<std::vector<double>> out(a.component_count());
  for (int c = 0; c < a.component_count(); ++c) {
    out[c].resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[c][i] = op(a.component(c)[i], b.component(c)[i]);
  }
  return SpatialField(a.grid(), a.time(), std::move(out));
}

}  // namespace

DistributionField::DistributionField(PhaseGrid grid, double time)
    : grid_(std::move(grid)), time_(time), values_(grid_.size(), 0.0) {}

DistributionField::DistributionField(PhaseGrid grid, double time, std::vector<double> values)
    : grid_(std::move(grid)), time_(time), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("distribution field: value count does not match grid");
  require_finite(values_, "distribution field");
}

SpatialField::SpatialField(SpatialGrid grid, double time, int components)
    : grid_(std::move(grid)), time_(time) {
  if (components != 1 && components != grid_.dim())
    throw std::invalid_argument("spatial field: component count must be 1 or dim");
  components_.assign(components, std::vector<double>(grid_.size(), 0.0));
}

SpatialField::SpatialField(SpatialGrid grid, double time, std::vector<std::vector<double>> components)
    : grid_(std::move(grid)), time_(time), components_(std::move(components)) {
  const int c = component_count();
  if (c != 1 && c != grid_.dim())
    throw std::invalid_argument("spatial field: component count must be 1 or dim");
  for (const auto& comp : components_) {
    if (comp.size() != grid_.size())
      throw std::invalid_argument("spatial field: component length does not match grid");
    require_finite(comp, "spatial field");
  }
}

SpatialField::SpatialField(SpatialGrid grid, double time, std::vector<double> scalar)
    : SpatialField(std::move(grid), time, std::vector<std::vector<double>>{std::move(scalar)}) {}

DistributionField operator+(const DistributionField& a, const DistributionField& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
DistributionField operator-(const DistributionField& a, const DistributionField& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
DistributionField multiply(const DistributionField& a, const DistributionField& b) {
  return zip(a, b, [](double x, double y) { return x * y; });
}

DistributionField operator*(double c, const DistributionField& a) {
  std::vector<double> out(a.values());
  for (double& x : out) x *= c;
  return a.with_values(std::move(out));
}

DistributionField abs(const DistributionField& a) {
  std::vector<double> out(a.values());
  for (double& x : out) x = std::fabs(x);
  return a.with_values(std::move(out));
}

SpatialField operator+(const SpatialField& a, const SpatialField& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}
SpatialField operator-(const SpatialField& a, const SpatialField& b) {
  return zip(a, b, [](double x, double y) { return x - y; });
}
SpatialField operator*(double c, const SpatialField& a) {
  auto comps = a.components();
  for (auto& comp : comps)
    for (double& x : comp) x *= c;
  return SpatialField(a.grid(), a.time(), std::move(comps));
}

double max_abs(const DistributionField& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs(const SpatialField& f, int component) {
  double m = 0.0;
  for (double x : f.component(component)) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs_difference(const DistributionField& a, const DistributionField& b) {
  require_same(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

namespace {

double boundary_max(const TensorGrid& g, const std::vector<double>& v) {
  double m = 0.0;
  for (std::size_t f = 0; f < g.size(); ++f) {
    bool edge = false;
    for (int k = 0; k < g.rank() && !edge; ++k) {
      const int i = g.index_along(k, f);
      edge = (i == 0 || i == g.extent(k) - 1);
    }
    if (edge) m = std::max(m, std::fabs(v[f]));
  }
  return m;
}

}  // namespace

double boundary_max_abs(const DistributionField& f) {
  return boundary_max(f.grid().layout(), f.values());
}

double boundary_max_abs(const SpatialField& f, int component) {
  return boundary_max(f.grid().layout(), f.component(component));
}

}  // namespace kinvf
