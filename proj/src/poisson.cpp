#include "kinvf/poisson.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "kinvf/errors.hpp"
#include "kinvf/grid_ops.hpp"
#include "kinvf/vf_apply.hpp"

namespace kinvf {

namespace {

// FFTW's planner is not thread-safe; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int fft_friendly(int n) {
  for (int m = std::max(n, 2);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct RealBuf {
  double* p = nullptr;
  explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {
    if (!p) throw std::bad_alloc();
  }
  ~RealBuf() { fftw_free(p); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
};

struct ComplexBuf {
  fftw_complex* p = nullptr;
  explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {
    if (!p) throw std::bad_alloc();
  }
  ~ComplexBuf() { fftw_free(p); }
  ComplexBuf(const ComplexBuf&) = delete;
  ComplexBuf& operator=(const ComplexBuf&) = delete;
};

void check_dim(int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("poisson: dimension must be 1, 2 or 3");
}

void reject_time_letters(const OperatorWord& word) {
  if (word.has_time_derivative())
    throw std::invalid_argument("poisson: words with d/dt need time derivatives of the source");
}

}  // namespace

double truncated_kernel_transform(int n, double k, double L) {
  check_dim(n);
  const double k2 = k * k;
  switch (n) {
    case 1: {
      if (k == 0.0) return -0.5 * L * L;
      const double s = std::sin(0.5 * k * L);
      return 2.0 * s * s / k2 - L * std::sin(k * L) / k;
    }
    case 2: {
      if (k == 0.0) return 0.25 * L * L - 0.5 * L * L * std::log(L);
      return (1.0 - std::cyl_bessel_j(0.0, k * L)) / k2 -
             L * std::log(L) * std::cyl_bessel_j(1.0, k * L) / k;
    }
    default: {
      if (k == 0.0) return 0.5 * L * L;
      const double s = std::sin(0.5 * k * L);
      return 2.0 * s * s / k2;
    }
  }
}

struct PoissonSolver::Plan {
  int n = 0;
  std::vector<int> box;     // box points per axis
  std::vector<int> padded;  // FFT extents
  std::vector<double> h;
  std::size_t real_size = 0;
  std::size_t spec_size = 0;
  std::vector<double> kernel;                // spec_size
  std::vector<std::vector<double>> wavenum;  // per axis, per spectral index; 0 at Nyquist
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Plan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  int spec_extent(int i) const { return i == n - 1 ? padded[i] / 2 + 1 : padded[i]; }
};

namespace {

std::shared_ptr<const PoissonSolver::Plan> make_plan(const SpatialGrid& grid) {
  auto plan = std::make_shared<PoissonSolver::Plan>();
  const int n = grid.dim();
  plan->n = n;
  double diag2 = 0.0;
  for (int i = 0; i < n; ++i) diag2 += grid.axis(i).length() * grid.axis(i).length();
  const double L = std::sqrt(diag2);
  plan->real_size = 1;
  plan->spec_size = 1;
  for (int i = 0; i < n; ++i) {
    const AxisSpec& a = grid.axis(i);
    const double h = a.spacing();
    const int need = a.points + static_cast<int>(std::ceil(L / h)) + 1;
    plan->box.push_back(a.points);
    plan->padded.push_back(fft_friendly(need));
    plan->h.push_back(h);
  }
  for (int i = 0; i < n; ++i) {
    plan->real_size *= plan->padded[i];
    plan->spec_size *= plan->spec_extent(i);
  }

  plan->wavenum.resize(n);
  std::vector<std::vector<double>> kfull(n);
  for (int i = 0; i < n; ++i) {
    const int N = plan->padded[i];
    const double P = N * plan->h[i];
    for (int m = 0; m < plan->spec_extent(i); ++m) {
      const int s = m <= N / 2 ? m : m - N;
      const double k = 2.0 * std::numbers::pi * s / P;
      kfull[i].push_back(k);
      const bool nyquist = N % 2 == 0 && m == N / 2;
      plan->wavenum[i].push_back(nyquist ? 0.0 : k);
    }
  }

  plan->kernel.resize(plan->spec_size);
  const TensorGrid spec([&] {
    std::vector<AxisSpec> ax;
    for (int i = 0; i < n; ++i) ax.emplace_back(0.0, 1.0, plan->spec_extent(i));
    return ax;
  }());
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < plan->spec_size; ++s) {
    double k2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = kfull[i][spec.index_along(i, s)];
      k2 += k * k;
    }
    plan->kernel[s] = truncated_kernel_transform(n, std::sqrt(k2), L);
  }

  RealBuf r(plan->real_size);
  ComplexBuf c(plan->spec_size);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan->forward = fftw_plan_dft_r2c(n, plan->padded.data(), r.p, c.p, FFTW_ESTIMATE);
  plan->backward = fftw_plan_dft_c2r(n, plan->padded.data(), c.p, r.p, FFTW_ESTIMATE);
  if (!plan->forward || !plan->backward) throw std::runtime_error("poisson: FFT planning failed");
  return plan;
}

// Small cache keyed by grid so the free function does not replan every call.
std::shared_ptr<const PoissonSolver::Plan> cached_plan(const SpatialGrid& grid) {
  static std::mutex m;
  static std::vector<std::pair<SpatialGrid, std::shared_ptr<const PoissonSolver::Plan>>> cache;
  std::lock_guard<std::mutex> lock(m);
  for (auto& [g, p] : cache)
    if (g == grid) return p;
  auto p = make_plan(grid);
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.emplace_back(grid, p);
  return p;
}

}  // namespace

PoissonSolver::PoissonSolver(SpatialGrid grid, double boundary_tol)
    : grid_(std::move(grid)), boundary_tol_(boundary_tol) {
  check_dim(grid_.dim());
  for (int i = 0; i < grid_.dim(); ++i)
    if (grid_.axis(i).points < 2) throw std::invalid_argument("poisson: axis needs two points");
  plan_ = cached_plan(grid_);
}

std::vector<int> PoissonSolver::padded_extents() const { return plan_->padded; }

PoissonResult PoissonSolver::solve(const SpatialField& source) const {
  if (!(source.grid() == grid_)) throw std::invalid_argument("poisson: source grid mismatch");
  const int n = plan_->n;
  const double peak = max_abs(source);
  if (!std::isfinite(peak)) throw std::invalid_argument("poisson: non-finite source");
  if (boundary_max_abs(source) > boundary_tol_ * peak)
    throw SupportError("poisson: source does not vanish on the box boundary");

  PoissonResult res;
  res.source = source;
  std::vector<std::vector<double>> grad(n, std::vector<double>(grid_.size(), 0.0));
  std::vector<double> phi(grid_.size(), 0.0);
  if (peak == 0.0) {
    res.phi = SpatialField(grid_, source.time(), std::move(phi));
    res.grad_phi = SpatialField(grid_, source.time(), std::move(grad));
    return res;
  }

  const TensorGrid& box = grid_.layout();
  const TensorGrid pad([&] {
    std::vector<AxisSpec> ax;
    for (int i = 0; i < n; ++i) ax.emplace_back(0.0, 1.0, plan_->padded[i]);
    return ax;
  }());
  const TensorGrid spec([&] {
    std::vector<AxisSpec> ax;
    for (int i = 0; i < n; ++i) ax.emplace_back(0.0, 1.0, plan_->spec_extent(i));
    return ax;
  }());

  // Box sits in the low corner of the padded array.
  std::vector<std::size_t> box_to_pad(box.size());
  for (std::size_t b = 0; b < box.size(); ++b) {
    std::size_t off = 0;
    for (int i = 0; i < n; ++i) off += pad.stride(i) * box.index_along(i, b);
    box_to_pad[b] = off;
  }

  RealBuf r(plan_->real_size);
  ComplexBuf rho_hat(plan_->spec_size);
  ComplexBuf work(plan_->spec_size);
  std::fill(r.p, r.p + plan_->real_size, 0.0);
  const auto& src = source.component(0);
  for (std::size_t b = 0; b < box.size(); ++b) r.p[box_to_pad[b]] = src[b];
  fftw_execute_dft_r2c(plan_->forward, r.p, rho_hat.p);

  const double norm = 1.0 / static_cast<double>(plan_->real_size);
  auto backward_into = [&](std::vector<double>& out) {
    fftw_execute_dft_c2r(plan_->backward, work.p, r.p);
    for (std::size_t b = 0; b < box.size(); ++b) out[b] = r.p[box_to_pad[b]] * norm;
  };

  for (std::size_t s = 0; s < plan_->spec_size; ++s) {
    work.p[s][0] = plan_->kernel[s] * rho_hat.p[s][0];
    work.p[s][1] = plan_->kernel[s] * rho_hat.p[s][1];
  }
  backward_into(phi);

  for (int i = 0; i < n; ++i) {
    // d/dx^i -> i k_i
    for (std::size_t s = 0; s < plan_->spec_size; ++s) {
      const double kg = plan_->wavenum[i][spec.index_along(i, s)] * plan_->kernel[s];
      work.p[s][0] = -kg * rho_hat.p[s][1];
      work.p[s][1] = kg * rho_hat.p[s][0];
    }
    backward_into(grad[i]);
  }

  res.phi = SpatialField(grid_, source.time(), std::move(phi));
  res.grad_phi = SpatialField(grid_, source.time(), std::move(grad));
  return res;
}

PoissonResult solve(const SpatialField& source) { return PoissonSolver(source.grid()).solve(source); }

SpatialField negative_laplacian(const SpatialField& psi) {
  std::vector<double> out(psi.size(), 0.0);
  for (int i = 0; i < psi.dim(); ++i) {
    const SpatialField d2 = partial(partial(psi, i), i);
    const auto& c = d2.component(0);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] -= c[s];
  }
  return SpatialField(psi.grid(), psi.time(), std::move(out));
}

double poisson_residual(const PoissonResult& r) {
  // Eighth-order central second difference.
  static constexpr double c[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  const SpatialGrid& g = r.phi.grid();
  const TensorGrid& t = g.layout();
  const int n = g.dim();
  const auto& phi = r.phi.component(0);
  const auto& src = r.source.component(0);
  const double peak = max_abs(r.source);
  double worst = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    bool inside = true;
    for (int i = 0; i < n && inside; ++i) {
      const int j = t.index_along(i, s);
      inside = j >= 4 && j < t.extent(i) - 4;
    }
    if (!inside) continue;
    double lap = 0.0;
    for (int i = 0; i < n; ++i) {
      const double h = g.axis(i).spacing();
      const std::size_t st = t.stride(i);
      double d2 = c[0] * phi[s];
      for (int m = 1; m <= 4; ++m) d2 += c[m] * (phi[s + m * st] + phi[s - m * st]);
      lap -= d2 / (h * h);
    }
    worst = std::max(worst, std::fabs(lap - src[s]));
  }
  return peak > 0.0 ? worst / peak : worst;
}

SpatialField commuted_source(const SpatialField& rho, const OperatorWord& word) {
  reject_time_letters(word);
  const OperatorWord w = word.as(Flavor::macroscopic);
  SpatialField g = rho;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    const double d = laplacian_constant(*it);
    SpatialField zg = apply_field(*it, g);
    g = d != 0.0 ? zg + d * g : std::move(zg);
  }
  return g;
}

SpatialField commuted_source(const DistributionField& f, const OperatorWord& word) {
  reject_time_letters(word);
  const OperatorWord w = word.as(Flavor::microscopic);
  DistributionField g = f;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    const double cd = pushdown_constant(*it) + laplacian_constant(*it);
    DistributionField zg = apply_field(*it, g);
    g = cd != 0.0 ? zg + cd * g : std::move(zg);
  }
  return velocity_average(g);
}

double commuted_source_residual(const SpatialField& rho, const OperatorWord& word) {
  const OperatorWord w = word.as(Flavor::macroscopic);
  const SpatialField rhs = commuted_source(rho, w);
  const PoissonResult r = solve(rho);
  const SpatialField lhs = negative_laplacian(apply_word(w, r.phi));
  const TensorGrid& t = rho.grid().layout();
  // Two one-sided layers per derivative taken.
  const int margin = 2 * (static_cast<int>(w.size()) + 2);
  double worst = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    bool inside = true;
    for (int i = 0; i < t.rank() && inside; ++i) {
      const int j = t.index_along(i, s);
      inside = j >= margin && j < t.extent(i) - margin;
    }
    if (inside) worst = std::max(worst, std::fabs(lhs.component(0)[s] - rhs.component(0)[s]));
  }
  const double peak = max_abs(rhs);
  return peak > 0.0 ? worst / peak : worst;
}

namespace {

struct PushdownTerm {
  OperatorWord word;
  double coeff = 1.0;
};

// prod (Z_i + c_i) expanded into subwords; order of letters is kept.
std::vector<PushdownTerm> expand_pushdown(const OperatorWord& w) {
  std::vector<PushdownTerm> terms{{OperatorWord{}, 1.0}};
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    const double c = pushdown_constant(*it);
    std::vector<PushdownTerm> next;
    for (const auto& t : terms) {
      next.push_back({t.word.prepend(*it), t.coeff});
      if (c != 0.0) next.push_back({t.word, t.coeff * c});
    }
    terms = std::move(next);
  }
  return terms;
}

}  // namespace

EllipticLp elliptic_lp_diagnostic(const DistributionField& f, const OperatorWord& word, double p) {
  reject_time_letters(word);
  const int n = f.dim();
  const double delta = p - 1.0;
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("elliptic_lp_diagnostic: p must lie in (1, 2]");
  EllipticLp out;
  if (n >= 3) {
    const double top = double(n - 2) / double(n + 2);
    if (!(delta < top))
      throw std::invalid_argument("elliptic_lp_diagnostic: delta outside (0, (n-2)/(n+2))");
  } else {
    out.outside_hypothesis = true;
  }

  const OperatorWord micro = word.as(Flavor::microscopic);
  const OperatorWord macro = word.as(Flavor::macroscopic);
  out.direct = lp_norm_x(apply_word(macro, velocity_average(f)), p);

  // Discrete Hoelder: the velocity quadrature has positive weights.
  const double q_dual = p / (p - 1.0);
  const auto vw = velocity_weights(f.grid());
  const auto chi_inv = velocity_weight_power(f.grid(), -(delta + n));
  double chi_mass = 0.0;
  for (std::size_t b = 0; b < vw.size(); ++b) chi_mass += vw[b] * chi_inv[b];
  const double holder_factor = std::pow(chi_mass, 1.0 / q_dual);
  // chi^(p/q) = (1+|v|^2)^(delta (delta+n) / 2) = (1+|v|^2)^(w p / 2)
  const double w_exp = delta * (delta + n) / p;

  std::vector<double> sum(f.grid().spatial_size(), 0.0);
  for (const auto& term : expand_pushdown(micro)) {
    const DistributionField zf = apply_word(term.word, f);
    const SpatialField avg = velocity_average(zf);
    for (std::size_t s = 0; s < sum.size(); ++s) sum[s] += term.coeff * avg.component(0)[s];
    const double ac = std::fabs(term.coeff);
    out.triangle_bound += ac * lp_norm_x(velocity_average(abs(zf)), p);
    out.holder_bound += ac * holder_factor * lp_norm_xv(zf, p, w_exp);
  }
  out.via_pushdown = lp_norm_x(SpatialField(f.grid().spatial(), f.time(), std::move(sum)), p);
  return out;
}

double gradient_l2_norm(const PoissonResult& r) {
  const double mass = integrate(r.source);
  double abs_mass = 0.0;
  {
    const auto w = trapezoid_weights(std::span<const AxisSpec>(r.source.grid().layout().axes()));
    const auto& s = r.source.component(0);
    for (std::size_t i = 0; i < s.size(); ++i) abs_mass += w[i] * std::fabs(s[i]);
  }
  // Below three dimensions grad phi is square integrable only for neutral sources.
  if (r.source.dim() < 3 && std::fabs(mass) > 1e-9 * abs_mass)
    throw std::domain_error("gradient_l2_norm: charged source in dimension < 3");
  // int |grad phi|^2 = int phi Delta phi; exact over R^n since the source lives in the box.
  const auto w = trapezoid_weights(std::span<const AxisSpec>(r.phi.grid().layout().axes()));
  const auto& phi = r.phi.component(0);
  const auto& src = r.source.component(0);
  double e = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) e += w[i] * phi[i] * src[i];
  return std::sqrt(std::max(e, 0.0));
}

namespace {

double normalized_field_sup(const PoissonResult& r) {
  const SpatialGrid& g = r.phi.grid();
  const int n = g.dim();
  const double t = r.phi.time();
  if (n < 2 && !(t > 0.0)) throw std::invalid_argument("pointwise_field_decay: t must be positive");
  const double tw = std::pow(t, 0.5 * (n - 2));
  double best = 0.0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    double r2 = 0.0, gr2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.layout().coord(i, s);
      const double d = r.grad_phi.component(i)[s];
      r2 += x * x;
      gr2 += d * d;
    }
    const double weight = std::pow(1.0 + t + std::sqrt(r2), 0.5 * n) * tw;
    best = std::max(best, std::sqrt(gr2) * weight);
  }
  return best;
}

}  // namespace

std::vector<SeriesPoint> l2_gradient_decay(std::span<const DistributionField> f_series,
                                           const OperatorWord& word) {
  std::vector<SeriesPoint> out;
  for (const auto& f : f_series)
    out.push_back({f.time(), gradient_l2_norm(solve(commuted_source(f, word)))});
  return out;
}

std::vector<SeriesPoint> l2_gradient_decay(std::span<const SpatialField> rho_series,
                                           const OperatorWord& word) {
  std::vector<SeriesPoint> out;
  for (const auto& rho : rho_series)
    out.push_back({rho.time(), gradient_l2_norm(solve(commuted_source(rho, word)))});
  return out;
}

std::vector<SeriesPoint> pointwise_field_decay(std::span<const DistributionField> f_series,
                                               const OperatorWord& word) {
  std::vector<SeriesPoint> out;
  for (const auto& f : f_series)
    out.push_back({f.time(), normalized_field_sup(solve(commuted_source(f, word)))});
  return out;
}

std::vector<SeriesPoint> pointwise_field_decay(std::span<const SpatialField> rho_series,
                                               const OperatorWord& word) {
  std::vector<SeriesPoint> out;
  for (const auto& rho : rho_series)
    out.push_back({rho.time(), normalized_field_sup(solve(commuted_source(rho, word)))});
  return out;
}

}  // namespace kinvf
