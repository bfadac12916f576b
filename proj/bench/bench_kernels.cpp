// Serial vs OpenMP stats kernels on profile-sized and larger inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "pesc/stats_kernels.hpp"

namespace {

using namespace pesc;
using namespace pesc::stats::kernels;

std::vector<double> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> m(rows * cols);
  for (auto& v : m) v = u(rng);
  return m;
}

std::vector<Dialogue> random_dialogues(std::size_t n) {
  std::mt19937_64 rng(9);
  std::vector<Dialogue> ds(n);
  for (auto& d : ds) {
    d.condition = Condition::with_persona_traits;
    for (int t = 0; t < 8; ++t) {
      d.utterances.push_back({Role::seeker, "s", std::nullopt});
      d.utterances.push_back({Role::supporter, "t", static_cast<Strategy>(rng() % kStrategyCount)});
    }
  }
  return ds;
}

template <auto Kernel>
void BM_CrossPearson(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(rows, 6, 1);
  const auto y = random_matrix(rows, 6, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(ColumnView{x, rows, 6}, ColumnView{y, rows, 6}));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows));
}

template <auto Kernel>
void BM_Covariance(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(rows, 6, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(ColumnView{x, rows, 6}));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows));
}

template <auto Kernel>
void BM_Tally(benchmark::State& state) {
  const auto ds = random_dialogues(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(ds));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * state.range(0)));
}

BENCHMARK(BM_CrossPearson<cross_pearson_serial>)->Name("cross_pearson/serial")->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_CrossPearson<cross_pearson_omp>)->Name("cross_pearson/omp")->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_Covariance<covariance_serial>)->Name("covariance/serial")->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_Covariance<covariance_omp>)->Name("covariance/omp")->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_Tally<tally_serial>)->Name("tally/serial")->RangeMultiplier(10)->Range(100, 100000);
BENCHMARK(BM_Tally<tally_omp>)->Name("tally/omp")->RangeMultiplier(10)->Range(100, 100000);

}  // namespace

BENCHMARK_MAIN();
