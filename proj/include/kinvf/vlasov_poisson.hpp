#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/free_transport.hpp"
#include "kinvf/poisson.hpp"
#include "kinvf/vector_fields.hpp"

namespace kinvf {

// d_t f + v.grad_x f + mu grad_x phi . grad_v f = 0,  Delta phi = rho(f).
struct VPState {
  DistributionField f;
  PoissonResult phi;  // solved from rho(f) at the same time
  double time = 0.0;
  int mu = 1;
  bool field_on = true;  // false: free streaming, phi still reported
};

struct VPOptions {
  double negativity_tol = 1e-8;  // min f >= -tol * max f
  double support_tol = 1e-6;     // edge |f| <= tol * max f
};

VPState make_state(DistributionField f0, int mu = 1, bool field_on = true);

// g(x - v tau, v), exact shift along every x axis by cubic interpolation.
DistributionField advect_x(const DistributionField& g, double tau);
// g(x, v - mu_tau grad phi(x)).
DistributionField advect_v(const DistributionField& g, const SpatialField& grad_phi, double mu_tau);

// Midpoint data of one step, for fields carried along with f.
struct StepTrace {
  DistributionField half;  // f after the first half x-step
  PoissonResult mid;       // solved from rho(half)
  double t_mid = 0.0;
  double dt = 0.0;
};

// Strang splitting: half x-step, Poisson solve, full v-step, half x-step,
// Poisson solve for the new state. Throws SolverAbort on support, negativity
// or non-finite values.
VPState step(const VPState& s, double dt, const VPOptions& opt = {}, StepTrace* trace = nullptr);

using StateMonitor = std::function<void(const VPState&)>;

// Steps of size dt up to t_end (last step shortened if needed); the monitor
// sees t = 0 and every sample_every (rounded to whole steps).
VPState evolve(VPState s, double t_end, double dt, double sample_every,
               const StateMonitor& monitor, const VPOptions& opt = {});

struct NormReport {
  int N = 0;
  double delta = 0.0;
  double l1_part = 0.0;
  double weighted_lp_part = 0.0;
  double total = 0.0;
  bool below_threshold = false;  // delta < (n-2)/(n+2)
};

using WordApplier = std::function<DistributionField(const OperatorWord&, const DistributionField&)>;

// Sum over restricted microscopic words of length <= N of ||Z^a f||_L1 and
// ||(1+|v|^2)^(delta(delta+n)/(2(1+delta))) Z^a f||_L^(1+delta).
NormReport norm_E(const DistributionField& f, int N, double delta);
// Same sum with the words applied by `apply` (modified fields).
NormReport norm_E(const DistributionField& f, int N, double delta, const WordApplier& apply);

struct ConservationPoint {
  double t = 0.0;
  double l1 = 0.0;      // ||Z^a f(t)||_L1
  double source = 0.0;  // ||[T_phi, Z^a] f(t)||_L1
  double bound = 0.0;   // ||Z^a f(0)||_L1 + int_0^t source (trapezoid over samples)
  bool holds = true;
};

// Relative slack allowed in the sampled inequalities: |Z f| has kinks on the
// zero set of Z f, where the trapezoid rule is only second order.
inline constexpr double kInequalitySlack = 1e-3;

class ConservationMonitor {
 public:
  explicit ConservationMonitor(OperatorWord word);
  void add(const VPState& s);
  const std::vector<ConservationPoint>& series() const { return points_; }

 private:
  OperatorWord word_;
  std::vector<ConservationPoint> points_;
};

std::vector<ConservationPoint> conservation_monitor(std::span<const VPState> states,
                                                    const OperatorWord& word);

// Weighted bound for g = Z^a f. With T_phi g from the commutator expansion:
//   lhs(t)  = ||(1+v^2)^(q/2) |g|^p(t)||_L1
//   source  = int_0^t ||(1+v^2)^((q-1)/2) |g|^(p-1) T_phi g||_L1
//   field   = int_0^t ||(1+v^2)^((q-1)/2) |g|^p |grad phi|||_L1
// holds checks lhs <= lhs(0) + p * source_q + q * field, where source_q
// carries the weight (1+v^2)^(q/2) as produced by differentiating the
// weighted power. `constant` is the smallest C with lhs <= lhs(0) + C (source + field).
struct WeightedConservationPoint {
  double t = 0.0;
  double lhs = 0.0;
  double initial = 0.0;
  double source = 0.0;
  double field = 0.0;
  double explicit_bound = 0.0;
  double constant = 0.0;
  bool holds = true;
};

class WeightedConservationMonitor {
 public:
  WeightedConservationMonitor(OperatorWord word, double p, double q);
  void add(const VPState& s);
  const std::vector<WeightedConservationPoint>& series() const { return points_; }

 private:
  OperatorWord word_;
  double p_, q_;
  double last_t_ = 0.0, last_src_ = 0.0, last_src_q_ = 0.0, last_field_ = 0.0;
  double src_q_acc_ = 0.0;
  std::vector<WeightedConservationPoint> points_;
};

std::vector<WeightedConservationPoint> weighted_conservation_monitor(
    std::span<const VPState> states, const OperatorWord& word, double p, double q);

struct BootstrapReport {
  double max_ratio = 1.0;  // max_t E(t) / E(0); 1 for zero data
  double t_at_max = 0.0;
  bool held = true;        // E(t) <= 2 epsilon at every sample
  std::vector<SeriesPoint> ratios;
};

// norms: (t, E_{N,delta}(t)). epsilon <= 0 uses E(0).
BootstrapReport bootstrap_monitor(std::span<const SeriesPoint> norms, double epsilon = 0.0);

}  // namespace kinvf
