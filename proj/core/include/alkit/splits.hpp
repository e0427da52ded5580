#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alkit/dataset.hpp"

namespace alkit {

struct SplitSpec {
  enum class Scheme { FiveByTwoCv, RepeatedHoldout };
  Scheme scheme = Scheme::FiveByTwoCv;
  int repetitions = 10;        // RepeatedHoldout only
  double test_fraction = 0.5;  // RepeatedHoldout only

  bool operator==(const SplitSpec&) const = default;
};

struct Fold {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

struct SplitPlan {
  SplitSpec spec;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

// Stratified replication splits, a pure function of (dataset size, labels,
// spec, seed). FiveByTwoCv yields 10 folds: per replication the two halves
// swap train/test roles. RepeatedHoldout yields `repetitions` folds at the
// configured test fraction.
SplitPlan make_splits(const Dataset& dataset, const SplitSpec& spec, std::uint64_t seed);

// Partition of the training indices into labeled / unlabeled sets. Both sides
// are kept sorted; the labeled side only ever grows.
class PoolState {
 public:
  PoolState() = default;
  PoolState(std::vector<std::int64_t> labeled, std::vector<std::int64_t> unlabeled,
            int iteration = 0);

  const std::vector<std::int64_t>& labeled() const { return labeled_; }
  const std::vector<std::int64_t>& unlabeled() const { return unlabeled_; }
  int iteration() const { return iteration_; }
  std::size_t size() const { return labeled_.size() + unlabeled_.size(); }

  // Moves the batch from unlabeled to labeled and advances the iteration.
  void annotate(std::span<const std::int64_t> batch);

  // Removes unlabeled indices from the pool universe entirely (incremental
  // test-set diversion). Does not advance the iteration.
  void discard_unlabeled(std::span<const std::int64_t> indices);

  bool operator==(const PoolState&) const = default;

 private:
  void check_partition() const;

  std::vector<std::int64_t> labeled_;
  std::vector<std::int64_t> unlabeled_;
  int iteration_ = 0;
};

// Seeded uniform draw of start_size labeled indices from the training split.
// Resamples (bounded retries) until at least two classes are touched when the
// split permits it.
PoolState init_pool(const Dataset& dataset, std::span<const std::int64_t> train_indices,
                    std::size_t start_size, std::uint64_t seed);

}  // namespace alkit
