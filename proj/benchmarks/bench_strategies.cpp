#include <benchmark/benchmark.h>

#include "alkit/strategies.hpp"
#include "alkit/synthetic.hpp"

namespace {

struct Pool {
  alkit::Dataset dataset;
  alkit::PoolState pool;
  alkit::Model model;
};

Pool make_pool(std::size_t n) {
  Pool p;
  p.dataset = alkit::make_blobs({.n_samples = n, .n_blobs = 10, .dim = 4, .spread = 1.3, .seed = 12});
  std::vector<std::int64_t> train;
  for (std::size_t i = 0; i < n; ++i) train.push_back(static_cast<std::int64_t>(i));
  p.pool = alkit::init_pool(p.dataset, train, 50, 1);
  std::vector<int> labels;
  for (auto idx : p.pool.labeled()) labels.push_back(p.dataset.labels[static_cast<std::size_t>(idx)]);
  p.model = alkit::fit(
      {.kind = alkit::ClassifierSpec::Kind::SoftmaxSgd, .epochs = 30},
      p.dataset.features.gather_rows(std::span<const std::int64_t>(p.pool.labeled())), labels,
      p.dataset.n_classes, 1);
  return p;
}

void BM_select_batch(benchmark::State& state, alkit::StrategySpec::Kind kind) {
  const Pool p = make_pool(2000);
  const alkit::StrategySpec strategy{.kind = kind};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        alkit::select_batch(strategy, &p.model, p.dataset, p.pool, 25, seed++));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_select_batch, random, alkit::StrategySpec::Kind::Random);
BENCHMARK_CAPTURE(BM_select_batch, margin, alkit::StrategySpec::Kind::Margin);
BENCHMARK_CAPTURE(BM_select_batch, entropy, alkit::StrategySpec::Kind::Entropy);
BENCHMARK_CAPTURE(BM_select_batch, kmeans, alkit::StrategySpec::Kind::KMeans);
BENCHMARK_CAPTURE(BM_select_batch, wkmeans, alkit::StrategySpec::Kind::WKMeans);
