#include "kinvf/modified_vf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinvf/grid_ops.hpp"
#include "kinvf/poisson.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

namespace {

void check_mu(int mu) {
  if (mu != 1 && mu != -1) throw std::invalid_argument("modified_vf: mu must be +1 or -1");
}

bool same_time(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(a)); }

// g * v^j
DistributionField times_v(const DistributionField& g, int j) {
  const PhaseGrid& pg = g.grid();
  const TensorGrid& L = pg.layout();
  const int axis = pg.dim() + j;
  std::vector<double> out(g.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * L.coord(axis, i);
  return g.with_values(std::move(out));
}

// g + scale * a(x) at every velocity
DistributionField add_spatial(const DistributionField& g, const SpatialField& a, double scale) {
  const std::size_t block = g.grid().velocity_block();
  const auto& av = a.component(0);
  std::vector<double> out = g.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * av[i / block];
  return g.with_values(std::move(out));
}

DistributionField dx(const DistributionField& g, int k) { return partial(g, PhaseAxis::x(k)); }
DistributionField dv(const DistributionField& g, int k) { return partial(g, PhaseAxis::v(k)); }

// d_t h + v.grad_x h + mu grad phi . grad_v h
DistributionField apply_T_phi(const DistributionField& h, const DistributionField& dt_h,
                              const std::vector<SpatialField>& grad_phi, int mu) {
  DistributionField out = dt_h;
  for (int j = 0; j < h.dim(); ++j) {
    out = out + times_v(dx(h, j), j);
    out = out + double(mu) * broadcast_multiply(grad_phi[j], dv(h, j));
  }
  return out;
}

bool needs_rate(const std::vector<FieldId>& fields) {
  for (const auto& z : fields)
    if (z.kind == FieldKind::space_time_scaling) return true;
  return false;
}

PotentialSample sample_from(const PoissonResult& r, double t) {
  PotentialSample p;
  p.phi = r.phi.at_time(t);
  p.grad_phi = r.grad_phi.at_time(t);
  return p;
}

// One step of f and the coefficients. The rate of phi at the midpoint uses the
// current of f after the first half x-step, corrected by the force over that
// half step: j(t_mid) = j(half) + mu dt/2 rho grad phi + O(dt^2).
void coupled_step(VPState& s, CoefficientSet& c, double h, const VPOptions& opt) {
  StepTrace tr;
  VPState next = step(s, h, opt, &tr);
  PotentialSample mid = sample_from(tr.mid, tr.t_mid);
  if (needs_rate(c.fields) && s.field_on) {
    const SpatialField j0 = current_density(tr.half);
    std::vector<std::vector<double>> j = j0.components();
    const auto& rho = tr.mid.source.component(0);
    for (int i = 0; i < s.f.dim(); ++i) {
      const auto& g = tr.mid.grad_phi.component(i);
      for (std::size_t x = 0; x < rho.size(); ++x) j[i][x] += s.mu * 0.5 * h * rho[x] * g[x];
    }
    mid.dt_phi = potential_rate(SpatialField(j0.grid(), tr.t_mid, std::move(j)));
  }
  c = step_coefficients(c, mid, h, s.mu, s.field_on);
  s = std::move(next);
}

void set_time(CoefficientSet& c, double t) {
  c.time = t;
  for (auto& comps : c.values)
    for (auto& v : comps) v = v.at_time(t);
}

}  // namespace

std::vector<FieldId> modified_fields(int dim, bool include_space_time) {
  std::vector<FieldId> out;
  for (const auto& z : catalogue(dim, Flavor::microscopic)) {
    if (z.is_translation()) continue;
    if (z.kind == FieldKind::space_time_scaling && !include_space_time) continue;
    out.push_back(z);
  }
  return out;
}

CoefficientSet CoefficientSet::zero(const PhaseGrid& grid, double time, std::vector<FieldId> fields) {
  CoefficientSet c;
  c.fields = fields.empty() ? modified_fields(grid.dim()) : std::move(fields);
  for (auto& z : c.fields) {
    if (z.dim != grid.dim()) throw std::invalid_argument("coefficients: field dimension mismatch");
    if (z.is_translation()) throw std::invalid_argument("coefficients: translations are not modified");
    z = z.as(Flavor::microscopic);
  }
  c.time = time;
  c.values.assign(c.fields.size(),
                  std::vector<DistributionField>(grid.dim(), DistributionField(grid, time)));
  return c;
}

int CoefficientSet::dim() const { return fields.empty() ? 0 : fields.front().dim; }

const std::vector<DistributionField>* CoefficientSet::find(const FieldId& z) const {
  if (z.is_translation()) return nullptr;
  const FieldId m = z.as(Flavor::microscopic);
  for (std::size_t a = 0; a < fields.size(); ++a)
    if (fields[a] == m) return &values[a];
  throw std::invalid_argument("coefficients: no coefficients for " + z.name());
}

std::vector<std::vector<SpatialField>> coefficient_sources(const std::vector<FieldId>& fields,
                                                           const SpatialField& phi, int mu,
                                                           const SpatialField* dt_phi) {
  check_mu(mu);
  const int n = phi.dim();
  const double t = phi.time();
  std::vector<std::vector<SpatialField>> out;
  for (const auto& z : fields) {
    const FieldId zm = z.as(Flavor::macroscopic);
    SpatialField psi;
    if (z.kind == FieldKind::space_time_scaling) {
      if (!dt_phi || dt_phi->component_count() == 0)
        throw std::invalid_argument("coefficient_sources: the space-time scaling needs d_t phi");
      psi = apply_field(zm, phi, dt_phi);
    } else if (z.kind == FieldKind::time_translation || z.kind == FieldKind::space_translation) {
      throw std::invalid_argument("coefficient_sources: translations carry no coefficients");
    } else {
      psi = apply_field(zm, phi);
    }
    if (z.kind == FieldKind::spatial_scaling) psi = psi - 2.0 * phi;
    std::vector<SpatialField> per_k;
    for (int k = 0; k < n; ++k) per_k.push_back((mu * t) * partial(psi, k));
    out.push_back(std::move(per_k));
  }
  return out;
}

SpatialField current_density(const DistributionField& f) {
  std::vector<std::vector<double>> comps;
  for (int i = 0; i < f.dim(); ++i) comps.push_back(velocity_moment(f, i).component(0));
  return SpatialField(f.grid().spatial(), f.time(), std::move(comps));
}

SpatialField potential_rate(const SpatialField& current) {
  const int n = current.dim();
  if (current.component_count() != n)
    throw std::invalid_argument("potential_rate: current needs one component per axis");
  std::vector<double> src(current.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const SpatialField d = partial(current, i, i);
    const auto& dv = d.component(0);
    for (std::size_t x = 0; x < src.size(); ++x) src[x] -= dv[x];
  }
  const SpatialField s(current.grid(), current.time(), std::move(src));
  return PoissonSolver(current.grid(), 1.0).solve(s).phi;
}

// x-shift by dt/2, v-shift by mu dt grad phi, + dt source, x-shift by dt/2.
// The v-part is exact for frozen grad phi because the source does not depend on v.
DistributionField step_transported(const DistributionField& c, const SpatialField& grad_phi_mid,
                                    const SpatialField* source, double dt, int mu, bool field_on) {
  check_mu(mu);
  DistributionField g = advect_x(c, 0.5 * dt);
  if (field_on) g = advect_v(g, grad_phi_mid, mu * dt);
  if (source) g = add_spatial(g, *source, dt);
  return advect_x(g, 0.5 * dt).at_time(c.time() + dt);
}

CoefficientSet step_coefficients(const CoefficientSet& c, const PotentialSample& mid, double dt,
                                 int mu, bool field_on) {
  check_mu(mu);
  if (!(dt >= 0.0)) throw std::invalid_argument("step_coefficients: dt must be non-negative");
  CoefficientSet out = c;
  if (dt == 0.0) return out;
  const double t_mid = c.time + 0.5 * dt;
  std::vector<std::vector<SpatialField>> src;
  if (field_on) {
    const SpatialField rate = mid.dt_phi.component_count() ? mid.dt_phi.at_time(t_mid) : SpatialField();
    src = coefficient_sources(c.fields, mid.phi.at_time(t_mid), mu,
                              rate.component_count() ? &rate : nullptr);
  }
  for (std::size_t a = 0; a < c.fields.size(); ++a)
    for (std::size_t k = 0; k < c.values[a].size(); ++k)
      out.values[a][k] = step_transported(c.values[a][k], mid.grad_phi,
                                          field_on ? &src[a][k] : nullptr, dt, mu, field_on);
  set_time(out, c.time + dt);
  return out;
}

CoefficientSet evolve_coefficients(CoefficientSet c, const PotentialFn& potential, double t_end,
                                   double dt, int mu, double sample_every,
                                   const CoefficientMonitor& monitor) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_coefficients: dt must be positive");
  if (!(t_end >= c.time)) throw std::invalid_argument("evolve_coefficients: t_end before the start");
  const double t0 = c.time;
  const long steps = static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9));
  const long cadence = std::max(1L, std::lround(sample_every / dt));
  if (monitor) monitor(c);
  for (long k = 1; k <= steps; ++k) {
    const double target = std::min(t0 + k * dt, t_end);
    const double h = target - c.time;
    c = step_coefficients(c, potential(c.time + 0.5 * h), h, mu);
    set_time(c, target);
    if (monitor && k % cadence == 0) monitor(c);
  }
  return c;
}

VPState evolve_with_coefficients(VPState s, CoefficientSet& c, double t_end, double dt,
                                 double sample_every, const CoupledMonitor& monitor,
                                 const VPOptions& opt) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_with_coefficients: dt must be positive");
  if (!(t_end >= s.time)) throw std::invalid_argument("evolve_with_coefficients: t_end before the start");
  if (!same_time(c.time, s.time))
    throw std::invalid_argument("evolve_with_coefficients: coefficient time differs from the state");
  const double t0 = s.time;
  const long steps = static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9));
  const long cadence = std::max(1L, std::lround(sample_every / dt));
  if (monitor) monitor(s, c);
  for (long k = 1; k <= steps; ++k) {
    const double target = std::min(t0 + k * dt, t_end);
    coupled_step(s, c, target - s.time, opt);
    s.time = target;
    s.f = s.f.at_time(target);
    set_time(c, target);
    if (monitor && k % cadence == 0) monitor(s, c);
  }
  return s;
}

DistributionField apply_modified(const OperatorWord& word, const CoefficientSet& c,
                                 const DistributionField& f) {
  if (!same_time(c.time, f.time()))
    throw std::invalid_argument("apply_modified: coefficient time differs from the field");
  DistributionField g = f;
  for (auto it = word.letters.rbegin(); it != word.letters.rend(); ++it) {
    const FieldId z = it->as(Flavor::microscopic);
    if (z.has_time_derivative())
      throw std::invalid_argument("apply_modified: " + z.name() + " needs time derivatives");
    if (z.dim != f.dim()) throw std::invalid_argument("apply_modified: dimension mismatch");
    DistributionField zg = apply_field(z, g);
    if (const auto* coeff = c.find(z))
      for (int k = 0; k < f.dim(); ++k) zg = zg - multiply((*coeff)[k], dx(g, k));
    g = std::move(zg);
  }
  return g;
}

NormReport modified_norm_E(const DistributionField& f, const CoefficientSet& c, int N, double delta) {
  return norm_E(f, N, delta, [&](const OperatorWord& w, const DistributionField& g) {
    return apply_modified(w, c, g);
  });
}

DistributionField transport_time_derivative(const DistributionField& g, const SpatialField& phi,
                                            int mu) {
  check_mu(mu);
  DistributionField out(g.grid(), g.time());
  for (int j = 0; j < g.dim(); ++j) {
    out = out - times_v(dx(g, j), j);
    out = out - double(mu) * broadcast_multiply(partial(phi, j), dv(g, j));
  }
  return out;
}

CommutationResidual improved_commutation_residual(const CommutationData& d, int i, int mu) {
  check_mu(mu);
  const DistributionField& g = d.g;
  const int n = g.dim();
  if (i < 0 || i >= n) throw std::invalid_argument("improved_commutation_residual: bad direction");
  if (static_cast<int>(d.coeff.size()) != n || static_cast<int>(d.dt_coeff.size()) != n)
    throw std::invalid_argument("improved_commutation_residual: one coefficient per x axis expected");
  const double t = g.time();

  std::vector<SpatialField> grad(n);
  std::vector<std::vector<SpatialField>> hess(n);
  for (int j = 0; j < n; ++j) grad[j] = partial(d.phi, j);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) hess[j].push_back(partial(grad[j], k));
  std::vector<DistributionField> gx, gv, dtgx;
  for (int j = 0; j < n; ++j) {
    gx.push_back(dx(g, j));
    gv.push_back(dv(g, j));
    dtgx.push_back(dx(d.dt_g, j));
  }

  // T_phi g and the plain uniform motion of it
  const DistributionField w = apply_T_phi(g, d.dt_g, grad, mu);
  const DistributionField zw = t * dx(w, i) + dv(w, i);

  // Z_i g and its time derivative
  const DistributionField zg = t * gx[i] + gv[i];
  const DistributionField dt_zg = gx[i] + t * dtgx[i] + dv(d.dt_g, i);

  DistributionField yg = zg, dt_yg = dt_zg, yw = zw;
  for (int k = 0; k < n; ++k) {
    yg = yg - multiply(d.coeff[k], gx[k]);
    dt_yg = dt_yg - multiply(d.dt_coeff[k], gx[k]) - multiply(d.coeff[k], dtgx[k]);
    yw = yw - multiply(d.coeff[k], dx(w, k));
  }
  const DistributionField lhs = apply_T_phi(yg, dt_yg, grad, mu) - yw;
  const DistributionField lhs0 = apply_T_phi(zg, dt_zg, grad, mu) - zw;

  DistributionField rhs(g.grid(), t), bad(g.grid(), t);
  for (int j = 0; j < n; ++j) {
    const SpatialField dzphi = t * hess[i][j];  // d_j (t d_i phi)
    rhs = rhs - double(mu) * broadcast_multiply(dzphi, t * gx[j] + gv[j]);
    bad = bad + (mu * t) * broadcast_multiply(dzphi, gx[j]);
  }
  const DistributionField rhs0 = rhs;
  for (int j = 0; j < n; ++j) {
    DistributionField hv(g.grid(), t);
    for (int k = 0; k < n; ++k) hv = hv + broadcast_multiply(hess[j][k], gv[k]);
    rhs = rhs + double(mu) * multiply(d.coeff[j], hv);
  }

  CommutationResidual r;
  r.t = t;
  r.lhs = l1_norm(lhs);
  r.rhs = l1_norm(rhs);
  r.residual = l1_norm(lhs - rhs);
  const DistributionField unc = lhs0 - rhs0;
  r.uncorrected_residual = l1_norm(unc);
  r.bad_term = l1_norm(bad);
  const double miss = l1_norm(unc - bad);
  r.bad_term_mismatch = r.bad_term > 0.0 ? miss / r.bad_term : (miss > 0.0 ? INFINITY : 0.0);
  return r;
}

std::vector<CommutationResidual> improved_commutation_series(VPState s, int i, double t_end,
                                                             double dt, double sample_every,
                                                             const VPOptions& opt) {
  const int n = s.f.dim();
  if (i < 0 || i >= n) throw std::invalid_argument("improved_commutation_series: bad direction");
  if (!(dt > 0.0)) throw std::invalid_argument("improved_commutation_series: dt must be positive");
  const double steps_real = (t_end - s.time) / dt;
  const long steps = std::lround(steps_real);
  if (steps < 1 || std::fabs(steps_real - steps) > 1e-9)
    throw std::invalid_argument("improved_commutation_series: t_end - t0 must be a multiple of dt");
  const long cadence = std::max(1L, std::lround(sample_every / dt));
  const double t0 = s.time;
  const FieldId ui = FieldId::uniform_motion(n, i);

  CoefficientSet c = CoefficientSet::zero(s.f.grid(), s.time, {ui});
  CoefficientSet prev;
  std::vector<CommutationResidual> out;
  for (long k = 0; k <= steps; ++k) {
    VPState next = s;
    CoefficientSet c_next = c;
    coupled_step(next, c_next, dt, opt);
    const double t_next = t0 + (k + 1) * dt;
    next.time = t_next;
    next.f = next.f.at_time(t_next);
    set_time(c_next, t_next);
    if (k >= 1 && k % cadence == 0) {
      CommutationData d;
      d.g = s.f;
      // without the field T_phi is T
      d.phi = s.field_on ? s.phi.phi.at_time(s.time) : SpatialField(s.phi.phi.grid(), s.time);
      d.dt_g = transport_time_derivative(s.f, d.phi, s.mu);
      d.coeff = c.values[0];
      for (int q = 0; q < n; ++q)
        d.dt_coeff.push_back((0.5 / dt) * (c_next.values[0][q] - prev.values[0][q]));
      out.push_back(improved_commutation_residual(d, i, s.mu));
    }
    prev = std::move(c);
    c = std::move(c_next);
    s = std::move(next);
  }
  return out;
}

double modified_ks_value(const DistributionField& f, const CoefficientSet& c,
                         const OperatorWord& word) {
  const DistributionField y = word.empty() ? f : apply_modified(word, c, f);
  const SpatialField rho = velocity_average(abs(y));
  const int n = f.dim();
  const double t = f.time();
  const TensorGrid& L = rho.grid().layout();
  const auto& r = rho.component(0);
  double m = 0.0;
  for (std::size_t x = 0; x < r.size(); ++x) {
    double r2 = 0.0;
    for (int k = 0; k < n; ++k) r2 += L.coord(k, x) * L.coord(k, x);
    m = std::max(m, std::pow(1.0 + t + std::sqrt(r2), n) * r[x]);
  }
  return m;
}

DecaySeries modified_ks_decay(const ProductFreeSolution& sol, const OperatorWord& word,
                              std::span<const double> times) {
  return weighted_decay_series(sol, word, times);
}

double coefficient_sup(const CoefficientSet& c, const FieldId& z, int k) {
  const auto* v = c.find(z);
  if (!v) return 0.0;
  return max_abs(v->at(k));
}

double coefficient_gradient_sup(const CoefficientSet& c, const FieldId& z, int k, int i) {
  const auto* v = c.find(z);
  if (!v) return 0.0;
  return max_abs(dx(v->at(k), i));
}

}  // namespace kinvf
