#include "kinvf/vlasov_poisson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kinvf/commutator.hpp"
#include "kinvf/errors.hpp"
#include "kinvf/grid_ops.hpp"
#include "kinvf/kernels.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

namespace {

void check_mu(int mu) {
  if (mu != 1 && mu != -1) throw std::invalid_argument("vlasov_poisson: mu must be +1 or -1");
}

// Shifts every line along `axis` by shift_of(base offset) grid units.
template <class ShiftOf>
DistributionField shift_along(const DistributionField& g, int axis, ShiftOf&& shift_of) {
  const TensorGrid& layout = g.grid().layout();
  const auto bases = kernels::line_bases(layout, axis);
  std::vector<double> shift(bases.size());
  for (std::size_t l = 0; l < bases.size(); ++l) shift[l] = shift_of(bases[l]);
  std::vector<double> out(g.size());
  kernels::shift_lines(g.values().data(), out.data(), layout, axis, shift);
  return g.with_values(std::move(out));
}

void check_state(const DistributionField& f, const VPOptions& opt, double t) {
  double mx = 0.0, mn = 0.0;
  for (double x : f.values()) {
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "non-finite value at t = " << t;
      throw SolverAbort(os.str());
    }
    mx = std::max(mx, std::fabs(x));
    mn = std::min(mn, x);
  }
  if (mn < -opt.negativity_tol * mx) {
    std::ostringstream os;
    os << "negativity " << mn << " below " << -opt.negativity_tol << " * max f at t = " << t;
    throw SolverAbort(os.str());
  }
  const double edge = boundary_max_abs(f);
  if (edge > opt.support_tol * mx) {
    std::ostringstream os;
    os << "support reached the grid boundary (edge " << edge << ", max " << mx << ") at t = " << t;
    throw SolverAbort(os.str());
  }
}

PoissonResult solve_density(const DistributionField& f) {
  // Boundary checks on f are the stepper's job; rho only has to be finite.
  const SpatialField rho = velocity_average(f);
  return PoissonSolver(rho.grid(), 1.0).solve(rho);
}

}  // namespace

VPState make_state(DistributionField f0, int mu, bool field_on) {
  check_mu(mu);
  VPState s;
  s.time = f0.time();
  s.mu = mu;
  s.field_on = field_on;
  s.phi = solve_density(f0);
  s.f = std::move(f0);
  return s;
}

DistributionField advect_x(const DistributionField& g, double tau) {
  const PhaseGrid& pg = g.grid();
  const int n = pg.dim();
  DistributionField out = g;
  for (int k = 0; k < n; ++k) {
    const double h = pg.x_axis(k).spacing();
    const AxisSpec& va = pg.v_axis(k);
    out = shift_along(out, k, [&](std::size_t base) {
      return va.node(pg.layout().index_along(n + k, base)) * tau / h;
    });
  }
  return out;
}

DistributionField advect_v(const DistributionField& g, const SpatialField& grad_phi, double mu_tau) {
  const PhaseGrid& pg = g.grid();
  const int n = pg.dim();
  if (!(grad_phi.grid() == pg.spatial()) || grad_phi.component_count() != n)
    throw std::invalid_argument("advect_v: field does not match the phase grid");
  DistributionField out = g;
  const std::size_t block = pg.velocity_block();
  for (int k = 0; k < n; ++k) {
    const double h = pg.v_axis(k).spacing();
    const auto& E = grad_phi.component(k);
    out = shift_along(out, n + k, [&](std::size_t base) { return E[base / block] * mu_tau / h; });
  }
  return out;
}

VPState step(const VPState& s, double dt, const VPOptions& opt, StepTrace* trace) {
  if (!(dt >= 0.0)) throw std::invalid_argument("step: dt must be non-negative");
  if (dt == 0.0) return s;
  const double t_mid = s.time + 0.5 * dt;
  DistributionField f = advect_x(s.f, 0.5 * dt).at_time(t_mid);
  PoissonResult mid = solve_density(f);
  if (trace) trace->half = f;
  if (s.field_on) f = advect_v(f, mid.grad_phi, s.mu * dt);
  f = advect_x(f, 0.5 * dt).at_time(s.time + dt);
  check_state(f, opt, s.time + dt);
  if (trace) {
    trace->mid = std::move(mid);
    trace->t_mid = t_mid;
    trace->dt = dt;
  }
  VPState next;
  next.time = s.time + dt;
  next.mu = s.mu;
  next.field_on = s.field_on;
  next.phi = solve_density(f);
  next.f = std::move(f);
  return next;
}

VPState evolve(VPState s, double t_end, double dt, double sample_every,
               const StateMonitor& monitor, const VPOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (!(t_end >= s.time)) throw std::invalid_argument("evolve: t_end before the start");
  const double t0 = s.time;
  const long steps = static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9));
  const long cadence = std::max(1L, std::lround(sample_every / dt));
  if (monitor) monitor(s);
  for (long k = 1; k <= steps; ++k) {
    const double target = std::min(t0 + k * dt, t_end);
    s = step(s, target - s.time, opt);
    s.time = target;  // no drift from repeated addition
    s.f = s.f.at_time(target);
    if (monitor && k % cadence == 0) monitor(s);
  }
  return s;
}

NormReport norm_E(const DistributionField& f, int N, double delta) {
  return norm_E(f, N, delta, [](const OperatorWord& w, const DistributionField& g) {
    return apply_word(w, g);
  });
}

NormReport norm_E(const DistributionField& f, int N, double delta, const WordApplier& apply) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("norm_E: delta must lie in (0, 1)");
  if (N < 0) throw std::invalid_argument("norm_E: N must be non-negative");
  const int n = f.dim();
  NormReport r;
  r.N = N;
  r.delta = delta;
  r.below_threshold = delta < double(n - 2) / double(n + 2);
  const double p = 1.0 + delta;
  const double q = delta * (delta + n) / (1.0 + delta);
  for (const auto& w : words_up_to(restricted_catalogue(n, Flavor::microscopic), N)) {
    const DistributionField zf = w.empty() ? f : apply(w, f);
    r.l1_part += l1_norm(zf);
    r.weighted_lp_part += lp_norm_xv(zf, p, q);
  }
  r.total = r.l1_part + r.weighted_lp_part;
  return r;
}

namespace {

DistributionField transport_source(const OperatorWord& word, const VPState& s) {
  if (word.empty() || !s.field_on) return DistributionField(s.f.grid(), s.time);
  return evaluate_terms(expand_T_phi_commutator(word, s.mu), s.phi.phi.at_time(s.time),
                        s.f.at_time(s.time));
}

// sum over nodes of weights(x, v) * fn(node, x index, v index)
template <class Fn>
double phase_integral(const PhaseGrid& g, Fn&& fn) {
  const auto wx = spatial_weights(g);
  const auto wv = velocity_weights(g);
  const std::size_t block = g.velocity_block();
  std::vector<double> partial_sums(g.spatial_size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < g.spatial_size(); ++s) {
    double acc = 0.0;
    for (std::size_t b = 0; b < block; ++b) acc += wv[b] * fn(s * block + b, s, b);
    partial_sums[s] = wx[s] * acc;
  }
  double total = 0.0;
  for (double x : partial_sums) total += x;
  return total;
}

}  // namespace

ConservationMonitor::ConservationMonitor(OperatorWord word)
    : word_(word.as(Flavor::microscopic)) {}

void ConservationMonitor::add(const VPState& s) {
  ConservationPoint p;
  p.t = s.time;
  p.l1 = l1_norm(word_.empty() ? s.f : apply_word(word_, s.f));
  p.source = l1_norm(transport_source(word_, s));
  if (points_.empty()) {
    p.bound = p.l1;
  } else {
    const auto& q = points_.back();
    p.bound = q.bound + 0.5 * (p.t - q.t) * (p.source + q.source);
  }
  p.holds = p.l1 <= p.bound * (1.0 + kInequalitySlack);
  points_.push_back(p);
}

std::vector<ConservationPoint> conservation_monitor(std::span<const VPState> states,
                                                    const OperatorWord& word) {
  ConservationMonitor m(word);
  for (const auto& s : states) m.add(s);
  return m.series();
}

WeightedConservationMonitor::WeightedConservationMonitor(OperatorWord word, double p, double q)
    : word_(word.as(Flavor::microscopic)), p_(p), q_(q) {
  if (!(p >= 1.0)) throw std::invalid_argument("weighted_conservation_monitor: p must be >= 1");
  if (!(q >= 0.0)) throw std::invalid_argument("weighted_conservation_monitor: q must be >= 0");
}

void WeightedConservationMonitor::add(const VPState& s) {
  const PhaseGrid& g = s.f.grid();
  const int n = g.dim();
  const DistributionField zf = word_.empty() ? s.f : apply_word(word_, s.f);
  const DistributionField tz = transport_source(word_, s);
  const auto wq = velocity_weight_power(g, q_);
  const auto wq1 = velocity_weight_power(g, q_ - 1.0);
  std::vector<double> grad_norm(g.spatial_size(), 0.0);
  if (s.field_on)
    for (std::size_t x = 0; x < grad_norm.size(); ++x) {
      double e2 = 0.0;
      for (int i = 0; i < n; ++i) e2 += std::pow(s.phi.grad_phi.component(i)[x], 2);
      grad_norm[x] = std::sqrt(e2);
    }
  const auto& gv = zf.values();
  const auto& tv = tz.values();
  const double p = p_;
  const double lhs = phase_integral(g, [&](std::size_t i, std::size_t, std::size_t b) {
    return wq[b] * std::pow(std::fabs(gv[i]), p);
  });
  const double src = phase_integral(g, [&](std::size_t i, std::size_t, std::size_t b) {
    return wq1[b] * std::pow(std::fabs(gv[i]), p - 1.0) * std::fabs(tv[i]);
  });
  const double src_q = phase_integral(g, [&](std::size_t i, std::size_t, std::size_t b) {
    return wq[b] * std::pow(std::fabs(gv[i]), p - 1.0) * std::fabs(tv[i]);
  });
  const double fld = phase_integral(g, [&](std::size_t i, std::size_t x, std::size_t b) {
    return wq1[b] * std::pow(std::fabs(gv[i]), p) * grad_norm[x];
  });

  WeightedConservationPoint pt;
  pt.t = s.time;
  pt.lhs = lhs;
  if (points_.empty()) {
    pt.initial = lhs;
  } else {
    const auto& prev = points_.back();
    const double dt = s.time - last_t_;
    pt.initial = prev.initial;
    pt.source = prev.source + 0.5 * dt * (src + last_src_);
    pt.field = prev.field + 0.5 * dt * (fld + last_field_);
    src_q_acc_ += 0.5 * dt * (src_q + last_src_q_);
  }
  last_t_ = s.time;
  last_src_ = src;
  last_src_q_ = src_q;
  last_field_ = fld;
  pt.explicit_bound = pt.initial + p_ * src_q_acc_ + q_ * pt.field;
  pt.holds = pt.lhs <= pt.explicit_bound * (1.0 + kInequalitySlack);
  const double growth = pt.lhs - pt.initial;
  const double rhs = pt.source + pt.field;
  pt.constant = growth <= 0.0 ? 0.0 : (rhs > 0.0 ? growth / rhs : INFINITY);
  if (!points_.empty()) pt.constant = std::max(pt.constant, points_.back().constant);
  points_.push_back(pt);
}

std::vector<WeightedConservationPoint> weighted_conservation_monitor(
    std::span<const VPState> states, const OperatorWord& word, double p, double q) {
  WeightedConservationMonitor m(word, p, q);
  for (const auto& s : states) m.add(s);
  return m.series();
}

BootstrapReport bootstrap_monitor(std::span<const SeriesPoint> norms, double epsilon) {
  BootstrapReport r;
  if (norms.empty()) return r;
  const double e0 = norms.front().value;
  const double eps = epsilon > 0.0 ? epsilon : e0;
  r.max_ratio = 0.0;
  for (const auto& p : norms) {
    const double ratio = e0 > 0.0 ? p.value / e0 : 1.0;
    r.ratios.push_back({p.t, ratio});
    if (ratio > r.max_ratio) {
      r.max_ratio = ratio;
      r.t_at_max = p.t;
    }
    if (p.value > 2.0 * eps) r.held = false;
  }
  return r;
}

}  // namespace kinvf
