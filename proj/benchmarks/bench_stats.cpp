#include <benchmark/benchmark.h>

#include "alkit/rng.hpp"
#include "alkit/stats.hpp"

namespace {

alkit::ScoreTable random_table(std::size_t n_tasks, std::size_t k, std::uint64_t seed) {
  alkit::Rng rng(seed);
  alkit::ScoreTable table;
  table.values = alkit::Matrix(n_tasks, k);
  for (double& v : table.values.data()) v = rng.next_double();
  for (std::size_t r = 0; r < n_tasks; ++r) table.row_names.push_back("t" + std::to_string(r));
  for (std::size_t c = 0; c < k; ++c) table.col_names.push_back("s" + std::to_string(c));
  return table;
}

void BM_friedman(benchmark::State& state) {
  const auto table = random_table(static_cast<std::size_t>(state.range(0)), 6, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::friedman_test(table));
  }
}

void BM_spearman(benchmark::State& state) {
  alkit::Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.next_double();
    y[i] = rng.next_double();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::spearman(x, y));
  }
}

}  // namespace

BENCHMARK(BM_friedman)->Arg(10)->Arg(100);
BENCHMARK(BM_spearman)->Arg(900);
