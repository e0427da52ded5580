#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alkit/dataset.hpp"
#include "alkit/matrix.hpp"
#include "alkit/models.hpp"
#include "alkit/splits.hpp"

namespace alkit {

struct StrategySpec {
  enum class Kind { Random, Confidence, Margin, Entropy, KMeans, WKMeans };
  Kind kind = Kind::Random;
  int prefilter_factor = 10;  // WKMeans: uncertainty pre-selection of factor * batch_size

  void validate() const;
  bool operator==(const StrategySpec&) const = default;
};

std::string to_string(StrategySpec::Kind kind);
StrategySpec::Kind strategy_kind_from_string(const std::string& name);
bool strategy_needs_model(StrategySpec::Kind kind);

enum class UncertaintyKind { Confidence, Margin, Entropy };

// Higher score = more uncertain. With p sorted descending per row:
//   confidence: 1 - p1
//   margin:     1 - (p1 - p2)
//   entropy:    -sum p_i ln p_i  (0 ln 0 := 0)
std::vector<double> uncertainty_scores(UncertaintyKind kind, const Matrix& probabilities);

// Indices of the k largest scores, descending score, ties toward the smaller
// index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

struct ClusteringResult {
  Matrix centroids;
  std::vector<int> assignment;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

// Weighted k-means: k-means++ seeding then Lloyd iterations until the
// relative inertia improvement drops below tol or max_iterations is reached.
// Empty clusters are repaired by seizing the point with the largest weighted
// squared distance to its centroid. Empty weights mean uniform.
ClusteringResult kmeans(const Matrix& points, std::size_t k, std::span<const double> weights,
                        std::uint64_t seed, double tol = 1e-4, int max_iterations = 300);

// Next batch of unlabeled indices, in selection order. Returns
// min(batch_size, |unlabeled|) distinct indices. Model is required for the
// uncertainty-driven kinds and ignored otherwise.
std::vector<std::int64_t> select_batch(const StrategySpec& strategy, const Model* model,
                                       const Dataset& dataset, const PoolState& pool,
                                       std::size_t batch_size, std::uint64_t seed);

}  // namespace alkit
