#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alkit/models.hpp"
#include "alkit/rng.hpp"
#include "alkit/splits.hpp"
#include "alkit/strategies.hpp"

namespace alkit {

enum class TestMode { Fixed, Incremental };

// One experiment cell: a (dataset, classifier, strategy) triple plus the loop
// parameters, evaluated on one fold of the split plan.
struct ExperimentConfig {
  std::string dataset_id;
  ClassifierSpec classifier;
  StrategySpec strategy;
  std::size_t start_size = 10;
  std::size_t batch_size = 10;
  int steps = 10;
  TestMode test_mode = TestMode::Fixed;
  double holdout_fraction = 0.2;  // Incremental: share of each batch diverted to the test set
  SplitSpec split;
  std::uint64_t seed = 0;
  std::vector<std::string> metrics;  // empty = every applicable metric

  void validate() const;
};

// Everything produced at iteration t. Records are a pure function of
// (config, data, seed): wall_ms is diagnostic only, excluded from equality
// and from the canonical serialization (it also lands in the store's
// timing.log sidecar).
struct IterationRecord {
  int iteration = 0;
  std::vector<std::int64_t> batch;  // selection order; empty at t = 0
  std::size_t n_labeled = 0;
  std::uint64_t test_pred_fingerprint = 0;
  std::map<std::string, double> metrics;
  bool truncated = false;
  double wall_ms = 0.0;

  bool operator==(const IterationRecord& other) const {
    return iteration == other.iteration && batch == other.batch &&
           n_labeled == other.n_labeled &&
           test_pred_fingerprint == other.test_pred_fingerprint && metrics == other.metrics &&
           truncated == other.truncated;
  }
};

// Engine state at the end of iteration t; the unit of snapshot/restore.
struct EngineState {
  int iteration = 0;
  PoolState pool;
  std::vector<std::int64_t> test_indices;
  std::vector<std::int64_t> batch;  // batch annotated at this iteration
  Model model;                      // h_t
  std::vector<int> test_predictions;

  bool operator==(const EngineState&) const = default;
};

// Independent seed streams per (fold, iteration, purpose). Adding a consumer
// of one stream never perturbs the others.
namespace seed_purpose {
inline constexpr std::uint64_t init_pool = 1;
inline constexpr std::uint64_t select = 2;
inline constexpr std::uint64_t fit = 3;
inline constexpr std::uint64_t reverse_fit = 4;
}  // namespace seed_purpose

inline std::uint64_t experiment_seed(std::uint64_t master, std::uint64_t fold,
                                     std::uint64_t iteration, std::uint64_t purpose) {
  return derive_seed({master, fold, iteration, purpose});
}

}  // namespace alkit
