#include <benchmark/benchmark.h>

#include "alkit/models.hpp"
#include "alkit/rng.hpp"

namespace {

struct Problem {
  alkit::Matrix features;
  std::vector<int> labels;
};

Problem random_problem(std::size_t n, std::size_t dim, int n_classes, std::uint64_t seed) {
  alkit::Rng rng(seed);
  Problem p;
  p.features = alkit::Matrix(n, dim);
  for (double& v : p.features.data()) v = rng.next_double() * 4.0 - 2.0;
  p.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.labels[i] = static_cast<int>(i % static_cast<std::size_t>(n_classes));
  }
  return p;
}

void BM_softmax_fit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Problem p = random_problem(n, 4, 10, 3);
  alkit::ClassifierSpec spec{.kind = alkit::ClassifierSpec::Kind::SoftmaxSgd};
  spec.epochs = 30;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::fit(spec, p.features, p.labels, 10, seed++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * spec.epochs);
}

void BM_knn_predict_proba(benchmark::State& state) {
  const auto n_ref = static_cast<std::size_t>(state.range(0));
  const Problem ref = random_problem(n_ref, 4, 10, 5);
  const Problem queries = random_problem(1000, 4, 10, 6);
  const alkit::Model model =
      alkit::fit({.kind = alkit::ClassifierSpec::Kind::Knn, .k = 5}, ref.features, ref.labels, 10, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(queries.features));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}

void BM_nn1_predict(benchmark::State& state) {
  const Problem ref = random_problem(static_cast<std::size_t>(state.range(0)), 4, 10, 5);
  const Problem queries = random_problem(25, 4, 10, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(alkit::nn1_predict(ref.features, ref.labels, queries.features));
  }
}

}  // namespace

BENCHMARK(BM_softmax_fit)->Arg(100)->Arg(500);
BENCHMARK(BM_knn_predict_proba)->Arg(100)->Arg(500);
BENCHMARK(BM_nn1_predict)->Arg(500);
