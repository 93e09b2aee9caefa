#include "kinvf/free_transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinvf/errors.hpp"
#include "kinvf/grid_ops.hpp"
#include "kinvf/kernels.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

namespace {

constexpr double kEdgeTol = 1e-9;

// Stencil along one axis at fractional index p, or invalid outside the box.
struct AxisStencil {
  bool valid = false;
  kernels::Stencil4 st;
};

AxisStencil stencil_at(double p, int n) {
  AxisStencil s;
  if (!(p >= -kEdgeTol && p <= n - 1 + kEdgeTol)) return s;
  s.valid = true;
  s.st = kernels::cubic_stencil(std::clamp(p, 0.0, double(n - 1)), n);
  return s;
}

// Per-axis stencil tables: table[s * inner + b] for sample s and line node b.
using StencilTable = std::vector<AxisStencil>;

// sum over the 4^m corner offsets of prod w * data[base + offset]
double tensor_sum(const double* data, std::size_t base, int m, const AxisStencil* const* st,
                  const std::size_t* strides) {
  int total = 1;
  for (int k = 0; k < m; ++k) total *= 4;
  double acc = 0.0;
  for (int c = 0; c < total; ++c) {
    int rem = c;
    double w = 1.0;
    std::size_t off = base;
    for (int k = m - 1; k >= 0; --k) {
      const int j = rem % 4;
      rem /= 4;
      w *= st[k]->st.w[j];
      off += strides[k] * static_cast<std::size_t>(st[k]->st.start + j);
    }
    acc += w * data[off];
  }
  return acc;
}

double switch_time(const PhaseGrid& g) {
  double ts = 0.0;
  for (int i = 0; i < g.dim(); ++i) ts = std::max(ts, g.x_axis(i).spacing() / g.v_axis(i).spacing());
  return ts;
}

double edge_max(const SampledAverage& sa) {
  const TensorGrid layout(sa.axes);
  double m = 0.0;
  for (std::size_t f = 0; f < sa.values.size(); ++f) {
    bool edge = false;
    for (int k = 0; k < layout.rank() && !edge; ++k) {
      const int i = layout.index_along(k, f);
      edge = i == 0 || i == layout.extent(k) - 1;
    }
    if (edge) m = std::max(m, std::fabs(sa.values[f]));
  }
  return m;
}

double max_abs_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

bool edge_warning(const SampledAverage& sa) {
  const double m = max_abs_of(sa.values);
  return m > 0.0 && edge_max(sa) > 1e-10 * m;
}

void check_times(std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0)) throw std::invalid_argument("series: times must be positive");
    if (k && !(times[k] > times[k - 1]))
      throw std::invalid_argument("series: times must be increasing");
  }
}

// The field at t = 0 that a letter reduces to on solutions of T f = 0.
AffineField initial_form(const FieldId& z) {
  if (z.flavor != Flavor::microscopic)
    throw std::invalid_argument("commuted_initial: microscopic word expected");
  AffineField a = AffineField::of(z);
  const int n = z.dim;
  const int D = a.D();
  for (int m = 0; m < D; ++m) a.b(m, 0) = 0.0;
  for (int k = 1; k < D; ++k)
    if (a.b(0, k) != 0.0) throw std::logic_error("commuted_initial: non-constant d/dt coefficient");
  const double c = a.a[0];
  a.a[0] = 0.0;
  for (int i = 0; i < n; ++i) a.b(1 + i, 1 + n + i) -= c;
  return a;
}

DistributionField partial_power(DistributionField f, PhaseAxis axis, int k) {
  for (int m = 0; m < k; ++m) f = partial(f, axis);
  return f;
}

DistributionField times_velocity(const DistributionField& f, int i) {
  const auto& g = f.grid();
  const int n = g.dim();
  std::size_t inner = 1;
  for (int k = n - 1; k > i; --k) inner *= g.v_axis(k).points;
  const std::size_t block = g.velocity_block();
  std::vector<double> out(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) {
    const int idx = static_cast<int>(((s % block) / inner) % g.v_axis(i).points);
    out[s] = g.v_axis(i).node(idx) * f[s];
  }
  return f.with_values(std::move(out));
}

int total_order(std::span<const int> alpha) {
  int k = 0;
  for (int a : alpha) {
    if (a < 0) throw std::invalid_argument("derivative: negative multi-index entry");
    k += a;
  }
  return k;
}

SampledAverage time_derivative_average(const FreeSolution& sol, double t,
                                       std::span<const AxisSpec> axes) {
  const auto& f0 = sol.initial();
  const int n = sol.dim();
  if (t <= switch_time(f0.grid())) {
    const auto g = commuted_initial(sol, OperatorWord({FieldId::time_translation(n)}));
    return transported_average(g, t, false, axes);
  }
  DistributionField g(f0.grid(), 0.0);
  for (int i = 0; i < n; ++i) g = g - partial(times_velocity(f0, i), PhaseAxis::v(i));
  auto sa = transported_average(g, t, false, axes);
  for (double& x : sa.values) x /= t;
  return sa;
}

SampledAverage improved_average(const FreeSolution& sol, std::span<const int> alpha, double t,
                                std::span<const AxisSpec> axes) {
  const auto route = t <= switch_time(sol.initial().grid()) ? DerivativeRoute::direct
                                                             : DerivativeRoute::through_velocity;
  const auto& f0 = sol.initial();
  const int n = sol.dim();
  DistributionField g = f0;
  for (int i = 0; i < n; ++i)
    g = partial_power(g, route == DerivativeRoute::direct ? PhaseAxis::x(i) : PhaseAxis::v(i),
                      alpha[i]);
  auto sa = transported_average(g, t, false, axes);
  if (route == DerivativeRoute::through_velocity) {
    const double s = std::pow(t, -total_order(alpha));
    for (double& x : sa.values) x *= s;
  }
  return sa;
}

}  // namespace

FreeSolution::FreeSolution(DistributionField initial) : initial_(std::move(initial)) {
  if (initial_.time() != 0.0) throw std::invalid_argument("free solution: initial data must be at t = 0");
  require_compact_support(initial_);
}

double FreeSolution::evaluate(double t, std::span<const double> x, std::span<const double> v) const {
  const int n = dim();
  if (static_cast<int>(x.size()) != n || static_cast<int>(v.size()) != n)
    throw std::invalid_argument("evaluate: point has wrong dimension");
  double p[6];
  for (int i = 0; i < n; ++i) {
    p[i] = x[i] - v[i] * t;
    p[n + i] = v[i];
  }
  return interpolate(initial_, std::span<const double>(p, 2 * n));
}

DistributionField commuted_initial(const FreeSolution& sol, const OperatorWord& word, int max_depth) {
  if (static_cast<int>(word.size()) > max_depth)
    throw std::invalid_argument("commuted_initial: word longer than the allowed depth");
  DistributionField f = sol.initial();
  if (word.empty()) return f;
  for (const auto& a : f.grid().layout().axes())
    if (a.points < 5) throw std::invalid_argument("commuted_initial: grid too coarse for stencils");
  for (auto it = word.letters.rbegin(); it != word.letters.rend(); ++it) {
    if (it->dim != sol.dim()) throw std::invalid_argument("commuted_initial: dimension mismatch");
    f = apply_affine(initial_form(*it), f);
  }
  return f;
}

DistributionField transported_field(const FreeSolution& sol, const OperatorWord& word, double t,
                                    const PhaseGrid& target) {
  const auto g = commuted_initial(sol, word);
  const int n = sol.dim();
  if (target.dim() != n) throw std::invalid_argument("transported_field: dimension mismatch");
  const auto& L = target.layout();
  std::vector<double> out(target.size());
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < out.size(); ++k) {
    double p[6];
    for (int i = 0; i < n; ++i) {
      const double v = L.coord(n + i, k);
      p[i] = L.coord(i, k) - v * t;
      p[n + i] = v;
    }
    out[k] = interpolate(g, std::span<const double>(p, 2 * n));
  }
  return DistributionField(target, t, std::move(out));
}

std::vector<AxisSpec> sampling_box(const PhaseGrid& g, double t) {
  std::vector<AxisSpec> axes;
  for (int i = 0; i < g.dim(); ++i) {
    const auto& xa = g.x_axis(i);
    const auto& va = g.v_axis(i);
    const double r = std::max(std::fabs(xa.min), std::fabs(xa.max)) +
                     t * std::max(std::fabs(va.min), std::fabs(va.max));
    axes.emplace_back(-r, r, xa.points | 1);
  }
  return axes;
}

SampledAverage transported_average(const DistributionField& g, double t, bool abs_inside,
                                   std::span<const AxisSpec> sample_axes) {
  const auto& G = g.grid();
  const int n = G.dim();
  if (static_cast<int>(sample_axes.size()) != n)
    throw std::invalid_argument("transported_average: sample axes have wrong dimension");
  if (t < 0.0) throw std::invalid_argument("transported_average: t must be non-negative");
  const TensorGrid S{std::vector<AxisSpec>(sample_axes.begin(), sample_axes.end())};
  const bool y_form = t > switch_time(G);
  const auto& L = G.layout();
  const std::size_t block = G.velocity_block();

  // tables[i][s * line + b]: stencil in the interpolated axes for sample s and
  // summation node b along axis i.
  std::vector<StencilTable> tables(n);
  std::vector<int> line(n);
  std::size_t xs[3], vs[3];
  for (int i = 0; i < n; ++i) {
    xs[i] = L.stride(i);
    vs[i] = L.stride(n + i);
    const auto& sa = S.axis(i);
    const auto& xa = G.x_axis(i);
    const auto& va = G.v_axis(i);
    line[i] = y_form ? xa.points : va.points;
    tables[i].resize(static_cast<std::size_t>(sa.points) * line[i]);
    for (int s = 0; s < sa.points; ++s)
      for (int b = 0; b < line[i]; ++b) {
        double p;
        if (y_form) {
          p = ((sa.node(s) - xa.node(b)) / t - va.min) / va.spacing();
          tables[i][s * line[i] + b] = stencil_at(p, va.points);
        } else {
          p = (sa.node(s) - va.node(b) * t - xa.min) / xa.spacing();
          tables[i][s * line[i] + b] = stencil_at(p, xa.points);
        }
      }
  }
  const auto w = y_form ? spatial_weights(G) : velocity_weights(G);
  const std::size_t nsum = y_form ? G.spatial_size() : block;
  const double scale = y_form ? std::pow(t, -n) : 1.0;

  SampledAverage out{std::vector<AxisSpec>(sample_axes.begin(), sample_axes.end()),
                     std::vector<double>(S.size(), 0.0)};
  const double* data = g.values().data();
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t s = 0; s < S.size(); ++s) {
    int sidx[3];
    S.unflatten(s, std::span<int>(sidx, n));
    int bidx[3] = {0, 0, 0};
    const AxisStencil* st[3];
    double acc = 0.0;
    for (std::size_t q = 0; q < nsum; ++q) {
      // q runs row-major over the summation nodes
      std::size_t rem = q;
      for (int i = n - 1; i >= 0; --i) {
        bidx[i] = static_cast<int>(rem % line[i]);
        rem /= line[i];
      }
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        st[i] = &tables[i][static_cast<std::size_t>(sidx[i]) * line[i] + bidx[i]];
        ok = st[i]->valid;
      }
      if (!ok) continue;
      const std::size_t base = y_form ? q * block : q;
      const double val = tensor_sum(data, base, n, st, y_form ? vs : xs);
      acc += w[q] * (abs_inside ? std::fabs(val) : val);
    }
    out.values[s] = scale * acc;
  }
  return out;
}

DecaySeries decay_series(const FreeSolution& sol, const OperatorWord& word,
                         std::span<const double> times) {
  check_times(times);
  const auto g = commuted_initial(sol, word);
  DecaySeries ds;
  for (double t : times) {
    const auto axes = sampling_box(g.grid(), t);
    const auto sa = transported_average(g, t, true, axes);
    ds.points.push_back({t, max_abs_of(sa.values)});
    ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
  }
  return ds;
}

DecaySeries weighted_decay_series(const FreeSolution& sol, const OperatorWord& word,
                                  std::span<const double> times) {
  check_times(times);
  const int n = sol.dim();
  const auto g = commuted_initial(sol, word);
  DecaySeries ds;
  for (double t : times) {
    const auto sa = transported_average(g, t, true, sampling_box(g.grid(), t));
    const TensorGrid S(sa.axes);
    double m = 0.0;
    for (std::size_t s = 0; s < S.size(); ++s) {
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) r2 += S.coord(i, s) * S.coord(i, s);
      m = std::max(m, std::pow(1.0 + t + std::sqrt(r2), n) * sa.values[s]);
    }
    ds.points.push_back({t, m});
    ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
  }
  return ds;
}

double bardos_degond_rhs(const FreeSolution& sol) {
  const auto& f = sol.initial();
  const auto& g = f.grid();
  const auto w = spatial_weights(g);
  const std::size_t block = g.velocity_block();
  double acc = 0.0;
  for (std::size_t s = 0; s < g.spatial_size(); ++s) {
    double m = 0.0;
    for (std::size_t b = 0; b < block; ++b) m = std::max(m, std::fabs(f[s * block + b]));
    acc += w[s] * m;
  }
  return acc;
}

double ks_rhs(const FreeSolution& sol, int k) {
  if (k < 0) throw std::invalid_argument("ks_rhs: negative order");
  double acc = 0.0;
  for (const auto& w : words_up_to(restricted_catalogue(sol.dim(), Flavor::microscopic), k))
    acc += l1_norm(commuted_initial(sol, w, std::max(k, 4)));
  return acc;
}

KsRatio ks_ratio(const FreeSolution& sol, std::span<const double> times) {
  const int n = sol.dim();
  const double rhs = ks_rhs(sol, n);
  KsRatio best;
  if (rhs == 0.0) return best;
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("ks_ratio: negative time");
    const auto axes = sampling_box(sol.initial().grid(), t);
    const auto sa = transported_average(sol.initial(), t, true, axes);
    const TensorGrid S(sa.axes);
    for (std::size_t s = 0; s < S.size(); ++s) {
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) r2 += S.coord(i, s) * S.coord(i, s);
      const double r = std::pow(1.0 + t + std::sqrt(r2), n) * sa.values[s] / rhs;
      if (r > best.ratio) best = {r, t, std::sqrt(r2)};
    }
  }
  return best;
}

SampledAverage derivative_average(const FreeSolution& sol, std::span<const int> alpha, double t,
                                  DerivativeRoute route) {
  const int n = sol.dim();
  if (static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("derivative_average: multi-index has wrong length");
  const int order = total_order(alpha);
  if (route == DerivativeRoute::through_velocity && !(t > 0.0))
    throw std::invalid_argument("derivative_average: the velocity route needs t > 0");
  DistributionField g = sol.initial();
  for (int i = 0; i < n; ++i)
    g = partial_power(g, route == DerivativeRoute::direct ? PhaseAxis::x(i) : PhaseAxis::v(i),
                      alpha[i]);
  auto sa = transported_average(g, t, false, sampling_box(g.grid(), t));
  if (route == DerivativeRoute::through_velocity)
    for (double& x : sa.values) x *= std::pow(t, -order);
  return sa;
}

DecaySeries improved_derivative_decay_series(const FreeSolution& sol, std::span<const int> alpha,
                                             std::span<const double> times) {
  check_times(times);
  if (static_cast<int>(alpha.size()) != sol.dim())
    throw std::invalid_argument("improved decay: multi-index has wrong length");
  DecaySeries ds;
  for (double t : times) {
    const auto sa = improved_average(sol, alpha, t, sampling_box(sol.initial().grid(), t));
    ds.points.push_back({t, max_abs_of(sa.values)});
    ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
  }
  return ds;
}

DecaySeries time_derivative_decay_series(const FreeSolution& sol, std::span<const double> times) {
  check_times(times);
  DecaySeries ds;
  for (double t : times) {
    const auto sa = time_derivative_average(sol, t, sampling_box(sol.initial().grid(), t));
    ds.points.push_back({t, max_abs_of(sa.values)});
    ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
  }
  return ds;
}

double transported_l1_norm(const FreeSolution& sol, const OperatorWord& word, double t) {
  const auto g = commuted_initial(sol, word);
  const auto& G = g.grid();
  const int n = G.dim();
  const auto& L = G.layout();
  const std::size_t block = G.velocity_block();
  const auto wv = velocity_weights(G);
  std::size_t xs[3];
  double cell = 1.0;
  for (int i = 0; i < n; ++i) {
    xs[i] = L.stride(i);
    cell *= G.x_axis(i).spacing();
  }
  std::vector<double> partials(block, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t b = 0; b < block; ++b) {
    // Lattice nodes x_min + k h sit at fractional index j - a(v) of the foot points.
    double a[3];
    int ext[3];
    std::size_t rem = b;
    int vidx[3];
    for (int i = n - 1; i >= 0; --i) {
      vidx[i] = static_cast<int>(rem % G.v_axis(i).points);
      rem /= G.v_axis(i).points;
    }
    std::vector<std::vector<AxisStencil>> st(n);
    for (int i = 0; i < n; ++i) {
      const double s = G.v_axis(i).node(vidx[i]) * t / G.x_axis(i).spacing();
      a[i] = s - std::floor(s);
      if (a[i] < 1e-9 || a[i] > 1.0 - 1e-9) a[i] = 0.0;
      ext[i] = G.x_axis(i).points + 1;
      for (int j = 0; j < ext[i]; ++j) st[i].push_back(stencil_at(j - a[i], G.x_axis(i).points));
    }
    std::size_t count = 1;
    for (int i = 0; i < n; ++i) count *= ext[i];
    double acc = 0.0;
    const AxisStencil* sp[3];
    for (std::size_t q = 0; q < count; ++q) {
      std::size_t r = q;
      bool ok = true;
      for (int i = n - 1; i >= 0; --i) {
        sp[i] = &st[i][r % ext[i]];
        r /= ext[i];
        ok = ok && sp[i]->valid;
      }
      if (!ok) continue;
      acc += std::fabs(tensor_sum(g.values().data(), b, n, sp, xs));
    }
    partials[b] = wv[b] * cell * acc;
  }
  double total = 0.0;
  for (double p : partials) total += p;
  return total;
}

SpatialField density(const FreeSolution& sol, const SpatialGrid& grid, double t) {
  const auto sa = transported_average(sol.initial(), t, false, grid.layout().axes());
  return SpatialField(grid, t, sa.values);
}

// Product solutions.

namespace {

// Letters of a word grouped by the factor they act on.
std::vector<OperatorWord> split_word(const OperatorWord& word, int n) {
  std::vector<std::vector<FieldId>> parts(n);
  for (const auto& z : word.letters) {
    if (z.dim != n || z.flavor != Flavor::microscopic)
      throw std::invalid_argument("product solution: microscopic word of matching dimension expected");
    if (z.kind == FieldKind::space_translation)
      parts[z.i].push_back(FieldId::space_translation(1, 0));
    else if (z.kind == FieldKind::uniform_motion)
      parts[z.i].push_back(FieldId::uniform_motion(1, 0));
    else
      throw std::invalid_argument("product solution: only translations and uniform motions factor");
  }
  std::vector<OperatorWord> out;
  for (auto& p : parts) out.emplace_back(std::move(p));
  return out;
}

std::vector<AxisSpec> one_axis(const AxisSpec& a) { return {a}; }

}  // namespace

ProductFreeSolution::ProductFreeSolution(std::vector<FreeSolution> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty() || factors_.size() > 3)
    throw std::invalid_argument("product solution: 1 to 3 factors");
  for (const auto& f : factors_)
    if (f.dim() != 1) throw std::invalid_argument("product solution: factors must be 1D1V");
}

double ProductFreeSolution::evaluate(double t, std::span<const double> x,
                                     std::span<const double> v) const {
  if (static_cast<int>(x.size()) != dim() || static_cast<int>(v.size()) != dim())
    throw std::invalid_argument("evaluate: point has wrong dimension");
  double r = 1.0;
  for (int i = 0; i < dim(); ++i) r *= factors_[i].evaluate(t, x.subspan(i, 1), v.subspan(i, 1));
  return r;
}

DecaySeries decay_series(const ProductFreeSolution& sol, const OperatorWord& word,
                         std::span<const double> times) {
  check_times(times);
  const int n = sol.dim();
  const auto parts = split_word(word, n);
  std::vector<DistributionField> g;
  for (int i = 0; i < n; ++i) g.push_back(commuted_initial(sol.factor(i), parts[i]));
  DecaySeries ds;
  for (double t : times) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto sa = transported_average(g[i], t, true, sampling_box(g[i].grid(), t));
      v *= max_abs_of(sa.values);
      ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
    }
    ds.points.push_back({t, v});
  }
  return ds;
}

DecaySeries weighted_decay_series(const ProductFreeSolution& sol, const OperatorWord& word,
                                  std::span<const double> times) {
  check_times(times);
  const int n = sol.dim();
  const auto parts = split_word(word, n);
  std::vector<DistributionField> g;
  for (int i = 0; i < n; ++i) g.push_back(commuted_initial(sol.factor(i), parts[i]));
  DecaySeries ds;
  for (double t : times) {
    // rho(|Z^a f|) is the product of the factor averages
    std::vector<std::vector<double>> r(n);
    std::vector<AxisSpec> axes;
    for (int i = 0; i < n; ++i) {
      const auto sa = transported_average(g[i], t, true, sampling_box(g[i].grid(), t));
      ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
      axes.push_back(sa.axes[0]);
      r[i] = sa.values;
    }
    const TensorGrid S(axes);
    double m = 0.0;
    for (std::size_t s = 0; s < S.size(); ++s) {
      double r2 = 0.0, v = 1.0;
      for (int i = 0; i < n; ++i) {
        r2 += S.coord(i, s) * S.coord(i, s);
        v *= r[i][S.index_along(i, s)];
      }
      m = std::max(m, std::pow(1.0 + t + std::sqrt(r2), n) * v);
    }
    ds.points.push_back({t, m});
  }
  return ds;
}

double bardos_degond_rhs(const ProductFreeSolution& sol) {
  double r = 1.0;
  for (int i = 0; i < sol.dim(); ++i) r *= bardos_degond_rhs(sol.factor(i));
  return r;
}

DecaySeries improved_derivative_decay_series(const ProductFreeSolution& sol,
                                             std::span<const int> alpha,
                                             std::span<const double> times) {
  check_times(times);
  const int n = sol.dim();
  if (static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("improved decay: multi-index has wrong length");
  DecaySeries ds;
  for (double t : times) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto axes = sampling_box(sol.factor(i).initial().grid(), t);
      const auto sa = improved_average(sol.factor(i), alpha.subspan(i, 1), t, axes);
      v *= max_abs_of(sa.values);
      ds.boundary_warning = ds.boundary_warning || edge_warning(sa);
    }
    ds.points.push_back({t, v});
  }
  return ds;
}

DecaySeries time_derivative_decay_series(const ProductFreeSolution& sol,
                                         std::span<const double> times) {
  check_times(times);
  const int n = sol.dim();
  DecaySeries ds;
  for (double t : times) {
    // d_t prod f_i = sum_i (d_t f_i) prod_{j != i} f_j, sampled on the tensor box
    std::vector<std::vector<double>> r(n), d(n);
    std::vector<AxisSpec> axes;
    for (int i = 0; i < n; ++i) {
      const auto& fi = sol.factor(i);
      const auto ax = sampling_box(fi.initial().grid(), t);
      axes.push_back(ax[0]);
      const auto sr = transported_average(fi.initial(), t, false, ax);
      const auto sd = time_derivative_average(fi, t, ax);
      ds.boundary_warning = ds.boundary_warning || edge_warning(sr) || edge_warning(sd);
      r[i] = sr.values;
      d[i] = sd.values;
    }
    const TensorGrid S(axes);
    double m = 0.0;
    for (std::size_t s = 0; s < S.size(); ++s) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        double term = d[i][S.index_along(i, s)];
        for (int j = 0; j < n; ++j)
          if (j != i) term *= r[j][S.index_along(j, s)];
        acc += term;
      }
      m = std::max(m, std::fabs(acc));
    }
    ds.points.push_back({t, m});
  }
  return ds;
}

SpatialField density(const ProductFreeSolution& sol, const SpatialGrid& grid, double t) {
  const int n = sol.dim();
  if (grid.dim() != n) throw std::invalid_argument("density: dimension mismatch");
  std::vector<std::vector<double>> r(n);
  for (int i = 0; i < n; ++i)
    r[i] = transported_average(sol.factor(i).initial(), t, false, one_axis(grid.axis(i))).values;
  const auto& L = grid.layout();
  std::vector<double> out(grid.size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= r[i][L.index_along(i, s)];
    out[s] = v;
  }
  return SpatialField(grid, t, std::move(out));
}

}  // namespace kinvf
