// Serial reference vs OpenMP kernels on a 2D2V-sized grid.
// Thread count comes from KINVF_THREADS (or OMP_NUM_THREADS).
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "kinvf/kernels.hpp"

using namespace kinvf;

namespace {

const TensorGrid& grid() {
  static const TensorGrid g({AxisSpec(-8, 8, 48), AxisSpec(-8, 8, 48), AxisSpec(-3, 3, 40), AxisSpec(-3, 3, 40)});
  return g;
}

std::vector<double> data(std::size_t n) {
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(-1e-6 * static_cast<double>(i)) * std::sin(0.37 * i);
  return f;
}

template <class Policy>
void bm_diff_axis(benchmark::State& st) {
  const TensorGrid& g = grid();
  const auto in = data(g.size());
  std::vector<double> out(g.size());
  const int axis = static_cast<int>(st.range(0));
  for (auto _ : st) {
    Policy::diff_axis(in.data(), out.data(), g, axis);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetBytesProcessed(static_cast<int64_t>(st.iterations() * g.size() * 2 * sizeof(double)));
}

template <class Policy>
void bm_shift_lines(benchmark::State& st) {
  const TensorGrid& g = grid();
  const int axis = static_cast<int>(st.range(0));
  const auto in = data(g.size());
  std::vector<double> out(g.size());
  std::vector<double> shift(g.size() / g.extent(axis));
  for (std::size_t l = 0; l < shift.size(); ++l) shift[l] = 3.0 * std::sin(0.01 * l);
  for (auto _ : st) {
    Policy::shift_lines(in.data(), out.data(), g, axis, shift);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetBytesProcessed(static_cast<int64_t>(st.iterations() * g.size() * 2 * sizeof(double)));
}

template <class Policy>
void bm_contract_inner(benchmark::State& st) {
  const TensorGrid& g = grid();
  const std::size_t inner = 40 * 40, outer = g.size() / inner;
  const auto in = data(g.size());
  const std::vector<double> w(inner, 0.15 * 0.15);
  std::vector<double> out(outer);
  for (auto _ : st) {
    Policy::contract_inner(in.data(), outer, w, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  st.SetBytesProcessed(static_cast<int64_t>(st.iterations() * g.size() * sizeof(double)));
}

template <class Policy>
void bm_weighted_power_sum(benchmark::State& st) {
  const TensorGrid& g = grid();
  const std::size_t inner = 40 * 40, outer = g.size() / inner;
  const auto in = data(g.size());
  const std::vector<double> wi(inner, 0.0225), wo(outer, 0.1111);
  const double p = st.range(0) == 0 ? 1.0 : 1.7;
  for (auto _ : st) benchmark::DoNotOptimize(Policy::weighted_power_sum(in.data(), wo, wi, p));
  st.SetBytesProcessed(static_cast<int64_t>(st.iterations() * g.size() * sizeof(double)));
}

struct Serial {
  static constexpr auto diff_axis = kernels::serial::diff_axis;
  static constexpr auto shift_lines = kernels::serial::shift_lines;
  static constexpr auto contract_inner = kernels::serial::contract_inner;
  static constexpr auto weighted_power_sum = kernels::serial::weighted_power_sum;
};
struct Parallel {
  static constexpr auto diff_axis = kernels::parallel::diff_axis;
  static constexpr auto shift_lines = kernels::parallel::shift_lines;
  static constexpr auto contract_inner = kernels::parallel::contract_inner;
  static constexpr auto weighted_power_sum = kernels::parallel::weighted_power_sum;
};

}  // namespace

BENCHMARK_TEMPLATE(bm_diff_axis, Serial)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(bm_diff_axis, Parallel)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_TEMPLATE(bm_shift_lines, Serial)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(bm_shift_lines, Parallel)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_TEMPLATE(bm_contract_inner, Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(bm_contract_inner, Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_TEMPLATE(bm_weighted_power_sum, Serial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(bm_weighted_power_sum, Parallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
