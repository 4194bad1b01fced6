// Serial reference kernels against the OpenMP ones, plus one full fit.
#include <benchmark/benchmark.h>

#include <random>

#include "tinder/data_io.hpp"
#include "tinder/kernels.hpp"
#include "tinder/optimizer.hpp"

using namespace tinder;

namespace {

struct Problem {
  DataMatrix data;
  MixtureParams params;
  Matrix dz;
};

Problem make_problem(std::size_t n, std::size_t k, std::size_t d) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Matrix x(n, d);
  for (auto& v : x.flat()) v = 3.0 * z(rng);
  Problem p{make_data(std::move(x)), {}, Matrix(n, k)};
  p.params.weight_logits.assign(k, 0.0);
  p.params.means = Matrix(k, d);
  for (auto& v : p.params.means.flat()) v = 3.0 * z(rng);
  p.params.log_variances = Matrix(k, d);
  for (auto& v : p.dz.flat()) v = z(rng);
  return p;
}

template <bool Parallel>
void BM_LogJoint(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 10, 10);
  const ComponentTable table(p.params);
  Matrix z(p.data.n(), 10);
  std::vector<double> lse(p.data.n());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::log_joint(p.data.values, p.params, table, z);
      kernels::normalize_rows(z, lse);
    } else {
      reference::log_joint(p.data.values, p.params, table, z);
      reference::normalize_rows(z, lse);
    }
    benchmark::DoNotOptimize(z.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Backprop(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 10, 10);
  const ComponentTable table(p.params);
  for (auto _ : state) {
    auto g = Parallel ? kernels::backprop(p.data.values, p.params, table, p.dz)
                      : reference::backprop(p.data.values, p.params, table, p.dz);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_OuterSum(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 10, 10);
  for (auto _ : state) {
    auto m = Parallel ? kernels::outer_sum(p.dz, p.dz) : reference::outer_sum(p.dz, p.dz);
    benchmark::DoNotOptimize(m.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FitFourBlobs(benchmark::State& state) {
  const auto data = generate_blobs(four_blob_scenario(1));
  FitConfig cfg;
  cfg.k = 4;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, {}, cfg).objective);
}

}  // namespace

BENCHMARK(BM_LogJoint<false>)->Name("log_joint/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_LogJoint<true>)->Name("log_joint/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Backprop<false>)->Name("backprop/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Backprop<true>)->Name("backprop/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_OuterSum<false>)->Name("outer_sum/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_OuterSum<true>)->Name("outer_sum/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_FitFourBlobs)->Name("fit/four_blobs_k4")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
