#pragma once

#include <span>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/vector_fields.hpp"

namespace kinvf {

// Solution of T f = 0: f(t, x, v) = f0(x - v t, v), f0 sampled on a phase grid.
class FreeSolution {
 public:
  // f0 must be at t = 0 and vanish on the outermost grid layer.
  explicit FreeSolution(DistributionField initial);

  int dim() const { return initial_.dim(); }
  const DistributionField& initial() const { return initial_; }

  // Cubic interpolation of f0 at (x - v t, v); 0 outside the initial box.
  double evaluate(double t, std::span<const double> x, std::span<const double> v) const;

 private:
  DistributionField initial_;
};

// Z^a f at t = 0 where U -> d/dv, d/dt -> -v.grad_x and the space-time
// scaling -> x.grad_x. Transported by characteristics it equals Z^a f(t).
DistributionField commuted_initial(const FreeSolution& sol, const OperatorWord& word,
                                   int max_depth = 4);

// Z^a f(t) on an arbitrary phase grid.
DistributionField transported_field(const FreeSolution& sol, const OperatorWord& word, double t,
                                    const PhaseGrid& target);

struct SeriesPoint {
  double t = 0.0;
  double value = 0.0;
};

struct DecaySeries {
  std::vector<SeriesPoint> points;
  // Set when the average is not negligible on the edge of the sampling box.
  bool boundary_warning = false;
};

// Velocity average of a transported field, sampled on a box of x nodes.
struct SampledAverage {
  std::vector<AxisSpec> axes;
  std::vector<double> values;
};

// Sampling box at time t: |x^i| <= x_max + t v_max, odd node count (x = 0 is a node).
std::vector<AxisSpec> sampling_box(const PhaseGrid& g, double t);

// int g(x - v t, v) dv (or of |g|) on the given x nodes. Small t integrate over
// the velocity nodes; past t = h_x / h_v the substitution y = x - v t is used.
SampledAverage transported_average(const DistributionField& g, double t, bool abs_inside,
                                   std::span<const AxisSpec> sample_axes);

// sup_x rho(|Z^a f|)(t, x) at each time; times positive and increasing.
DecaySeries decay_series(const FreeSolution& sol, const OperatorWord& word,
                         std::span<const double> times);

// sup_x (1+t+|x|)^n rho(|Z^a f|)(t, x) on the sampling box.
DecaySeries weighted_decay_series(const FreeSolution& sol, const OperatorWord& word,
                                  std::span<const double> times);

// int sup_v |f0(x, v)| dx
double bardos_degond_rhs(const FreeSolution& sol);

// Sum over restricted microscopic words of length <= k of ||Z^a f0||_L1.
double ks_rhs(const FreeSolution& sol, int k);

struct KsRatio {
  double ratio = 0.0;
  double t = 0.0;
  double x_norm = 0.0;
};

// sup over times and the sampling box of (1+t+|x|)^n rho(|f|) / ks_rhs(n).
KsRatio ks_ratio(const FreeSolution& sol, std::span<const double> times);

enum class DerivativeRoute {
  // rho(d_x^a f) with d_x^a applied to f0 directly.
  direct,
  // rho(d_x^a f) = t^-|a| rho((d_v^a f0) o characteristics): the total
  // v-derivatives integrate to zero.
  through_velocity,
};

// rho(d_x^a f)(t, .) on the sampling box; t > 0 for through_velocity.
SampledAverage derivative_average(const FreeSolution& sol, std::span<const int> alpha, double t,
                                  DerivativeRoute route);

// sup_x |rho(d_x^a f)|. Uses the direct route up to t = h_x / h_v.
DecaySeries improved_derivative_decay_series(const FreeSolution& sol, std::span<const int> alpha,
                                             std::span<const double> times);

// sup_x |rho(d_t f)| with d_t f = -v.grad_x f; t^-1 rho(-div_v(v f0)) past h_x / h_v.
DecaySeries time_derivative_decay_series(const FreeSolution& sol, std::span<const double> times);

// ||Z^a f(t)||_L1 on the lattice x_min + k h_x: every velocity line is
// interpolated at its foot points and summed. Exact when v t / h_x is an integer.
double transported_l1_norm(const FreeSolution& sol, const OperatorWord& word, double t);

// rho(f)(t) on a spatial grid.
SpatialField density(const FreeSolution& sol, const SpatialGrid& grid, double t);

// f = prod_i f_i(x^i, v^i) with 1D1V factors; used for n = 3 where a full
// phase grid is out of reach. Words may only contain translations and
// uniform motions, which act factor by factor.
class ProductFreeSolution {
 public:
  explicit ProductFreeSolution(std::vector<FreeSolution> factors);

  int dim() const { return static_cast<int>(factors_.size()); }
  const FreeSolution& factor(int i) const { return factors_.at(i); }
  double evaluate(double t, std::span<const double> x, std::span<const double> v) const;

 private:
  std::vector<FreeSolution> factors_;
};

DecaySeries decay_series(const ProductFreeSolution& sol, const OperatorWord& word,
                         std::span<const double> times);
DecaySeries weighted_decay_series(const ProductFreeSolution& sol, const OperatorWord& word,
                                  std::span<const double> times);
double bardos_degond_rhs(const ProductFreeSolution& sol);
DecaySeries improved_derivative_decay_series(const ProductFreeSolution& sol,
                                             std::span<const int> alpha,
                                             std::span<const double> times);
DecaySeries time_derivative_decay_series(const ProductFreeSolution& sol,
                                         std::span<const double> times);
SpatialField density(const ProductFreeSolution& sol, const SpatialGrid& grid, double t);

}  // namespace kinvf
