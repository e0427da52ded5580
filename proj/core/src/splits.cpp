#include "alkit/splits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "alkit/rng.hpp"

namespace alkit {
namespace {

// indices of each class, in dataset order
std::vector<std::vector<std::int64_t>> group_by_class(const Dataset& dataset) {
  std::vector<std::vector<std::int64_t>> groups(static_cast<std::size_t>(dataset.n_classes));
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    groups[static_cast<std::size_t>(dataset.labels[i])].push_back(static_cast<std::int64_t>(i));
  }
  return groups;
}

void require_two_per_class(const std::vector<std::vector<std::int64_t>>& groups) {
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].size() < 2) {
      throw std::invalid_argument("stratified split needs at least 2 samples per class, class " +
                                  std::to_string(c) + " has " + std::to_string(groups[c].size()));
    }
  }
}

}  // namespace

SplitPlan make_splits(const Dataset& dataset, const SplitSpec& spec, std::uint64_t seed) {
  auto groups = group_by_class(dataset);
  require_two_per_class(groups);

  SplitPlan plan;
  plan.spec = spec;
  plan.seed = seed;

  if (spec.scheme == SplitSpec::Scheme::FiveByTwoCv) {
    for (int rep = 0; rep < 5; ++rep) {
      Rng rng(derive_seed({seed, 0x73706c6974ULL, static_cast<std::uint64_t>(rep)}));  // "split"
      Fold a, b;
      // per class: shuffle, half to each side; odd remainders alternate sides
      // round-robin so |train| and |test| differ by at most 1.
      int remainder_side = 0;
      for (auto shuffled : groups) {
        rng.shuffle(shuffled);
        std::size_t half = shuffled.size() / 2;
        std::size_t cut = half;
        if (shuffled.size() % 2 == 1) {
          if (remainder_side == 0) cut = half + 1;
          remainder_side ^= 1;
        }
        a.train.insert(a.train.end(), shuffled.begin(), shuffled.begin() + cut);
        a.test.insert(a.test.end(), shuffled.begin() + cut, shuffled.end());
      }
      std::sort(a.train.begin(), a.train.end());
      std::sort(a.test.begin(), a.test.end());
      b.train = a.test;
      b.test = a.train;
      plan.folds.push_back(std::move(a));
      plan.folds.push_back(std::move(b));
    }
    return plan;
  }

  if (spec.repetitions < 1) throw std::invalid_argument("repeated-holdout needs repetitions >= 1");
  if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0) {
    throw std::invalid_argument("repeated-holdout test_fraction must be in (0,1)");
  }
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    Rng rng(derive_seed({seed, 0x73706c6974ULL, static_cast<std::uint64_t>(rep)}));
    Fold fold;
    for (auto shuffled : groups) {
      rng.shuffle(shuffled);
      auto n_test = static_cast<std::size_t>(
          std::round(spec.test_fraction * static_cast<double>(shuffled.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, shuffled.size() - 1);
      fold.test.insert(fold.test.end(), shuffled.begin(), shuffled.begin() + n_test);
      fold.train.insert(fold.train.end(), shuffled.begin() + n_test, shuffled.end());
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

PoolState::PoolState(std::vector<std::int64_t> labeled, std::vector<std::int64_t> unlabeled,
                     int iteration)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)), iteration_(iteration) {
  std::sort(labeled_.begin(), labeled_.end());
  std::sort(unlabeled_.begin(), unlabeled_.end());
  check_partition();
}

void PoolState::check_partition() const {
  for (std::size_t i = 1; i < labeled_.size(); ++i) {
    if (labeled_[i - 1] >= labeled_[i]) throw std::logic_error("PoolState: labeled set not strictly sorted");
  }
  for (std::size_t i = 1; i < unlabeled_.size(); ++i) {
    if (unlabeled_[i - 1] >= unlabeled_[i]) throw std::logic_error("PoolState: unlabeled set not strictly sorted");
  }
  std::vector<std::int64_t> inter;
  std::set_intersection(labeled_.begin(), labeled_.end(), unlabeled_.begin(), unlabeled_.end(),
                        std::back_inserter(inter));
  if (!inter.empty()) throw std::logic_error("PoolState: labeled and unlabeled sets overlap");
}

void PoolState::annotate(std::span<const std::int64_t> batch) {
  for (std::int64_t idx : batch) {
    auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), idx);
    if (it == unlabeled_.end() || *it != idx) {
      throw std::invalid_argument("PoolState::annotate: index not in unlabeled pool");
    }
    unlabeled_.erase(it);
    labeled_.insert(std::lower_bound(labeled_.begin(), labeled_.end(), idx), idx);
  }
  ++iteration_;
  check_partition();
}

void PoolState::discard_unlabeled(std::span<const std::int64_t> indices) {
  for (std::int64_t idx : indices) {
    auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), idx);
    if (it == unlabeled_.end() || *it != idx) {
      throw std::invalid_argument("PoolState::discard_unlabeled: index not in unlabeled pool");
    }
    unlabeled_.erase(it);
  }
  check_partition();
}

PoolState init_pool(const Dataset& dataset, std::span<const std::int64_t> train_indices,
                    std::size_t start_size, std::uint64_t seed) {
  if (start_size > train_indices.size()) {
    throw std::invalid_argument("init_pool: start_size exceeds training split size");
  }

  // does the training split touch at least 2 classes at all?
  std::unordered_set<int> split_classes;
  for (std::int64_t idx : train_indices) split_classes.insert(dataset.labels[static_cast<std::size_t>(idx)]);
  const bool two_reachable = split_classes.size() >= 2 && start_size >= 2;

  constexpr int kMaxRetries = 100;
  std::vector<std::int64_t> labeled;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Rng rng(derive_seed({seed, 0x696e6974ULL, static_cast<std::uint64_t>(attempt)}));  // "init"
    labeled = rng.sample_without_replacement(train_indices, start_size);
    if (!two_reachable) break;
    std::unordered_set<int> touched;
    for (std::int64_t idx : labeled) touched.insert(dataset.labels[static_cast<std::size_t>(idx)]);
    if (touched.size() >= 2) break;
  }

  std::vector<std::int64_t> sorted_labeled = labeled;
  std::sort(sorted_labeled.begin(), sorted_labeled.end());
  std::vector<std::int64_t> sorted_train(train_indices.begin(), train_indices.end());
  std::sort(sorted_train.begin(), sorted_train.end());
  std::vector<std::int64_t> unlabeled;
  std::set_difference(sorted_train.begin(), sorted_train.end(), sorted_labeled.begin(),
                      sorted_labeled.end(), std::back_inserter(unlabeled));
  return PoolState(std::move(sorted_labeled), std::move(unlabeled), 0);
}

}  // namespace alkit
