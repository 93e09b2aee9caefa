#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kinvf/grid.hpp"

namespace kinvf {

enum class ExecPolicy { serial, parallel };

ExecPolicy default_policy();
void set_default_policy(ExecPolicy policy);
// Reads KINVF_THREADS and forwards it to OpenMP. Returns the thread count in effect.
int configure_threads_from_env();

namespace kernels {

// Four-point Lagrange stencil evaluating at fractional grid coordinate p.
struct Stencil4 {
  int start = 0;
  double w[4] = {0, 0, 0, 0};
};

void cubic_weights(double a, double w[4]);
// Stencil kept inside [0, n-1]; p must lie in [0, n-1].
Stencil4 cubic_stencil(double p, int n);

// Flat offset of element 0 of every line along `axis`, in line-id order
// (line id = outer * stride(axis) + inner).
std::vector<std::size_t> line_bases(const TensorGrid& g, int axis);

// The reference versions are plain loops kept for testing; the parallel
// versions are what the solvers call.
namespace serial {
void diff_axis(const double* in, double* out, const TensorGrid& g, int axis);
// out(i) = in(i - shift[line]) along `axis`, shift in grid units, zero outside the grid.
void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift);
// out[o] = sum_j w[j] * in[o * inner + j]
void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out);
// sum_o wo[o] * sum_j wi[j] * |in[o * inner + j]|^p
double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p);
}  // namespace serial

namespace parallel {
void diff_axis(const double* in, double* out, const TensorGrid& g, int axis);
void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift);
void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out);
double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p);
}  // namespace parallel

void diff_axis(const double* in, double* out, const TensorGrid& g, int axis,
               ExecPolicy policy = default_policy());
void shift_lines(const double* in, double* out, const TensorGrid& g, int axis,
                 std::span<const double> shift, ExecPolicy policy = default_policy());
void contract_inner(const double* in, std::size_t outer, std::span<const double> w, double* out,
                    ExecPolicy policy = default_policy());
double weighted_power_sum(const double* in, std::span<const double> wo, std::span<const double> wi,
                          double p, ExecPolicy policy = default_policy());

}  // namespace kernels
}  // namespace kinvf
