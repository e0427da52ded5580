#include <benchmark/benchmark.h>

#include "alkit/rng.hpp"
#include "alkit/strategies.hpp"

namespace {

alkit::Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  alkit::Rng rng(seed);
  alkit::Matrix points(n, dim);
  for (double& v : points.data()) v = rng.next_double() * 20.0 - 10.0;
  return points;
}

void BM_kmeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const alkit::Matrix points = random_points(n, 4, 7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::kmeans(points, k, {}, seed++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_weighted_kmeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const alkit::Matrix points = random_points(n, 4, 9);
  alkit::Rng rng(11);
  std::vector<double> weights(n);
  for (double& w : weights) w = rng.next_double() + 0.01;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::kmeans(points, 25, weights, seed++));
  }
}

}  // namespace

BENCHMARK(BM_kmeans)->Args({250, 25})->Args({1000, 25})->Args({1000, 50});
BENCHMARK(BM_weighted_kmeans)->Arg(250)->Arg(1000);
