#include "kinvf/kernels.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace kinvf {

namespace {
std::atomic<ExecPolicy> g_policy{ExecPolicy::parallel};
}

ExecPolicy default_policy() { return g_policy.load(); }
void set_default_policy(ExecPolicy policy) { g_policy.store(policy); }

int configure_threads_from_env() {
  if (const char* s = std::getenv("KINVF_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
  return omp_get_max_threads();
}

namespace kernels {

void cubic_weights(double a, double w[4]) {
  w[0] = -a * (a - 1.0) * (a - 2.0) / 6.0;
  w[1] = (a + 1.0) * (a - 1.0) * (a - 2.0) / 2.0;
  w[2] = -(a + 1.0) * a * (a - 2.0) / 2.0;
  w[3] = (a + 1.0) * a * (a - 1.0) / 6.0;
}

Stencil4 cubic_stencil(double p, int n) {
  Stencil4 s;
  int j = static_cast<int>(std::floor(p));
  int start = j - 1;
  if (start < 0) start = 0;
  if (start > n - 4) start = n - 4;
  s.start = start;
  cubic_weights(p - start - 1, s.w);
  return s;
}

std::vector<std::size_t> line_bases(const TensorGrid& g, int axis) {
  const std::size_t stride = g.stride(axis);
  const std::size_t block = stride * g.extent(axis);
  const std::size_t outer = g.size() / block;
  std::vector<std::size_t> bases(outer * stride);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < stride; ++in) bases[o * stride + in] = o * block + in;
  return bases;
}

namespace {

constexpr double kEdge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
constexpr double kEdge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};

// Fourth-order first derivative at row i of a strided line.
inline double diff_row(const double* line, std::ptrdiff_t s, int i, int n, double inv12h) {
  if (i >= 2 && i <= n - 3) {
    return (line[(i - 2) * s] - 8.0 * line[(i - 1) * s] + 8.0 * line[(i + 1) * s] -
            line[(i + 2) * s]) *
           inv12h;
  }
  const double* c = (i == 0 || i == n - 1) ? kEdge0 : kEdge1;
  double acc = 0.0;
  if (i < 2) {
    for (int k = 0; k < 5; ++k) acc += c[k] * line[k * s];
    return acc * inv12h;
  }
  for (int k = 0; k < 5; ++k) acc += c[k] * line[(n - 1 - k) * s];
  return -acc * inv12h;
}

void check_diff(const TensorGrid& g, int axis) {
  if (axis < 0 || axis >= g.rank()) throw std::invalid_argument("diff: axis out of range");
  if (g.extent(axis) < 5) throw std::invalid_argument("diff: axis needs at least 5 points");
}

struct LineShift {
  int offset;  // p = i + offset + frac
  double frac;
  double w[4];
};

inline LineShift make_line_shift(double shift) {
  LineShift ls;
  const double ps = -shift;
  const double fl = std::floor(ps);
  ls.offset = static_cast<int>(fl);
  ls.frac = ps - fl;
  cubic_weights(ls.frac, ls.w);
  return ls;
}

constexpr double kEdgeTol = 1e-9;

inline double shift_row(const double* line, std::ptrdiff_t s, int i, int n, const LineShift& ls) {
  double p = (i + ls.offset) + ls.frac;
  if (p < -kEdgeTol || p > (n - 1) + kEdgeTol) return 0.0;
  const int j = i + ls.offset;
  if (j >= 1 && j + 2 <= n - 1) {
    const double* b = line + (j - 1) * s;
    return ls.w[0] * b[0] + ls.w[1] * b[s] + ls.w[2] * b[2 * s] + ls.w[3] * b[3 * s];
  }
  if (p < 0.0) p = 0.0;
  if (p > n - 1) p = n - 1;
  const Stencil4 st = cubic_stencil(p, n);
  const double* b = line + st.start * s;
  return st.w[0] * b[0] + st.w[1] * b[s] + st.w[2] * b[2 * s] + st.w[3] * b[3 * s];
}

inline double power_term(double x, double p) {
  const double a = std::fabs(x);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return a == 0.0 ? 0.0 : std::pow(a, p);
}

}  // namespace

namespace serial {

void diff_axis(const double* in, double* out, const TensorGrid& g, int axis) {
  check_diff(g, axis);
  const int n = g.extent(axis);
  const auto s = static_cast<std::ptrdiff_t>(g.stride(axis));
  const double inv12h = 1.0 / (12.0 * g.axis(axis).spacing());
  for (std::size_t f = 0; f < g.size(); ++f) {
    const int i = g.index_along(axis, f);
    const double* line = in + (f - static_cast<std::size_t>(i) * s);
    out[f] = diff_row(line, s, i, n, inv12h);
  }
}

void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift) {
  const int n = g.extent(axis);
  const auto s = static_cast<std::ptrdiff_t>(g.stride(axis));
  const auto bases = line_bases(g, axis);
  if (shift.size() != bases.size()) throw std::invalid_argument("shift_lines: one shift per line");
  std::vector<double> buf(n);
  for (std::size_t l = 0; l < bases.size(); ++l) {
    for (int i = 0; i < n; ++i) buf[i] = in[bases[l] + i * s];
    const LineShift ls = make_line_shift(shift[l]);
    for (int i = 0; i < n; ++i) out[bases[l] + i * s] = shift_row(buf.data(), 1, i, n, ls);
  }
}

void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out) {
  const std::size_t inner = w.size();
  for (std::size_t o = 0; o < outer; ++o) {
    double acc = 0.0;
    for (std::size_t j = 0; j < inner; ++j) acc += w[j] * in[o * inner + j];
    out[o] = acc;
  }
}

double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p) {
  double total = 0.0;
  for (std::size_t o = 0; o < wo.size(); ++o) {
    double acc = 0.0;
    for (std::size_t j = 0; j < wi.size(); ++j) acc += wi[j] * power_term(in[o * wi.size() + j], p);
    total += wo[o] * acc;
  }
  return total;
}

}  // namespace serial

namespace parallel {

void diff_axis(const double* in, double* out, const TensorGrid& g, int axis) {
  check_diff(g, axis);
  const int n = g.extent(axis);
  const std::size_t s = g.stride(axis);
  const std::size_t block = s * n;
  const auto outer = static_cast<std::ptrdiff_t>(g.size() / block);
  const double inv12h = 1.0 / (12.0 * g.axis(axis).spacing());
  const auto ss = static_cast<std::ptrdiff_t>(s);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t o = 0; o < outer; ++o) {
    for (int i = 0; i < n; ++i) {
      const double* line = in + o * block;
      double* dst = out + o * block + i * s;
      for (std::size_t k = 0; k < s; ++k) dst[k] = diff_row(line + k, ss, i, n, inv12h);
    }
  }
}

void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift) {
  const int n = g.extent(axis);
  const std::size_t s = g.stride(axis);
  const std::size_t block = s * n;
  const auto outer = static_cast<std::ptrdiff_t>(g.size() / block);
  if (shift.size() != static_cast<std::size_t>(outer) * s)
    throw std::invalid_argument("shift_lines: one shift per line");
  std::vector<LineShift> ls(shift.size());
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < shift.size(); ++l) ls[l] = make_line_shift(shift[l]);
  const auto ss = static_cast<std::ptrdiff_t>(s);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t o = 0; o < outer; ++o) {
    for (int i = 0; i < n; ++i) {
      const double* line = in + o * block;
      double* dst = out + o * block + i * s;
      const LineShift* lso = ls.data() + o * s;
      for (std::size_t k = 0; k < s; ++k) dst[k] = shift_row(line + k, ss, i, n, lso[k]);
    }
  }
}

void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out) {
  const std::size_t inner = w.size();
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < outer; ++o) {
    double acc = 0.0;
    for (std::size_t j = 0; j < inner; ++j) acc += w[j] * in[o * inner + j];
    out[o] = acc;
  }
}

double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p) {
  std::vector<double> partial(wo.size());
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < wo.size(); ++o) {
    double acc = 0.0;
    for (std::size_t j = 0; j < wi.size(); ++j) acc += wi[j] * power_term(in[o * wi.size() + j], p);
    partial[o] = acc;
  }
  double total = 0.0;
  for (std::size_t o = 0; o < wo.size(); ++o) total += wo[o] * partial[o];
  return total;
}

}  // namespace parallel

void diff_axis(const double* in, double* out, const TensorGrid& g, int axis, ExecPolicy policy) {
  policy == ExecPolicy::serial ? serial::diff_axis(in, out, g, axis)
                               : parallel::diff_axis(in, out, g, axis);
}

void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift, ExecPolicy policy) {
  policy == ExecPolicy::serial ? serial::shift_lines(in, out, g, axis, shift)
                               : parallel::shift_lines(in, out, g, axis, shift);
}

void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out,
                    ExecPolicy policy) {
  policy == ExecPolicy::serial ? serial::contract_inner(in, outer, w, out)
                               : parallel::contract_inner(in, outer, w, out);
}

double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p, ExecPolicy policy) {
  return policy == ExecPolicy::serial ? serial::weighted_power_sum(in, wo, wi, p)
                                      : parallel::weighted_power_sum(in, wo, wi, p);
}

}  // namespace kernels
}  // namespace kinvf
