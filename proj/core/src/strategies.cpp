#include "alkit/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "alkit/rng.hpp"

namespace alkit {
namespace {

// sorted copy of a probability row, descending
void top_two(std::span<const double> row, double& p1, double& p2) {
  p1 = -1.0;
  p2 = -1.0;
  for (double v : row) {
    if (v > p1) {
      p2 = p1;
      p1 = v;
    } else if (v > p2) {
      p2 = v;
    }
  }
}

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

double weighted_inertia(const Matrix& points, std::span<const double> weights,
                        const Matrix& centroids, const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    total += weights[i] *
             squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(assignment[i])));
  }
  return total;
}

// nearest centroid id; ties toward the smaller centroid id
int nearest_centroid(std::span<const double> point, const Matrix& centroids) {
  int best = 0;
  double best_d = squared_distance(point, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// k-means++ seeding with sampling probabilities proportional to
// weight * D^2(point, nearest chosen centroid).
Matrix kmeanspp_init(const Matrix& points, std::size_t k, std::span<const double> weights,
                     Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);

  auto sample_from = [&](std::span<const double> mass) -> std::size_t {
    double total = 0.0;
    for (double m : mass) total += m;
    if (total <= 0.0) {
      // all remaining mass zero (duplicate points); fall back to the first
      // unchosen index
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) return i;
      }
      throw std::logic_error("kmeans++: no candidate left");
    }
    const double r = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += mass[i];
      if (r < acc) return i;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (mass[i] > 0.0) return i;
    }
    return n - 1;
  };

  std::vector<double> mass(weights.begin(), weights.end());
  std::size_t first = sample_from(mass);
  chosen[first] = true;
  for (std::size_t j = 0; j < points.cols(); ++j) centroids.at(0, j) = points.at(first, j);

  std::vector<double> min_d2(n);
  for (std::size_t c = 1; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = std::numeric_limits<double>::infinity();
      for (std::size_t cc = 0; cc < c; ++cc) {
        d2 = std::min(d2, squared_distance(points.row(i), centroids.row(cc)));
      }
      min_d2[i] = chosen[i] ? 0.0 : weights[i] * d2;
    }
    std::size_t next = sample_from(min_d2);
    chosen[next] = true;
    for (std::size_t j = 0; j < points.cols(); ++j) centroids.at(c, j) = points.at(next, j);
  }
  return centroids;
}

}  // namespace

void StrategySpec::validate() const {
  if (kind == Kind::WKMeans && prefilter_factor < 1) {
    throw std::invalid_argument("StrategySpec: prefilter_factor must be >= 1");
  }
}

std::string to_string(StrategySpec::Kind kind) {
  switch (kind) {
    case StrategySpec::Kind::Random: return "random";
    case StrategySpec::Kind::Confidence: return "confidence";
    case StrategySpec::Kind::Margin: return "margin";
    case StrategySpec::Kind::Entropy: return "entropy";
    case StrategySpec::Kind::KMeans: return "kmeans";
    case StrategySpec::Kind::WKMeans: return "wkmeans";
  }
  throw std::logic_error("unknown strategy kind");
}

StrategySpec::Kind strategy_kind_from_string(const std::string& name) {
  if (name == "random") return StrategySpec::Kind::Random;
  if (name == "confidence") return StrategySpec::Kind::Confidence;
  if (name == "margin") return StrategySpec::Kind::Margin;
  if (name == "entropy") return StrategySpec::Kind::Entropy;
  if (name == "kmeans") return StrategySpec::Kind::KMeans;
  if (name == "wkmeans") return StrategySpec::Kind::WKMeans;
  throw std::invalid_argument("unknown strategy: '" + name + "'");
}

bool strategy_needs_model(StrategySpec::Kind kind) {
  return kind == StrategySpec::Kind::Confidence || kind == StrategySpec::Kind::Margin ||
         kind == StrategySpec::Kind::Entropy || kind == StrategySpec::Kind::WKMeans;
}

std::vector<double> uncertainty_scores(UncertaintyKind kind, const Matrix& probabilities) {
  if (kind == UncertaintyKind::Margin && probabilities.cols() < 2) {
    throw std::invalid_argument("uncertainty_scores: margin needs at least 2 classes");
  }
  std::vector<double> scores(probabilities.rows());
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    auto row = probabilities.row(i);
    switch (kind) {
      case UncertaintyKind::Confidence: {
        double p1, p2;
        top_two(row, p1, p2);
        scores[i] = 1.0 - p1;
        break;
      }
      case UncertaintyKind::Margin: {
        double p1, p2;
        top_two(row, p1, p2);
        scores[i] = 1.0 - (p1 - p2);
        break;
      }
      case UncertaintyKind::Entropy: {
        double h = 0.0;
        for (double p : row) {
          if (p > 0.0) h -= p * std::log(p);
        }
        scores[i] = h;
        break;
      }
    }
  }
  return scores;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw std::invalid_argument("top_k: k exceeds score count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  return order;
}

namespace {

// one k-means++ seeding followed by Lloyd iterations
ClusteringResult kmeans_single(const Matrix& points, std::size_t k,
                               std::span<const double> weights, std::uint64_t seed, double tol,
                               int max_iterations) {
  const std::size_t n = points.rows();
  Rng rng(seed);
  ClusteringResult result;
  result.centroids = kmeanspp_init(points, k, weights, rng);
  result.assignment.assign(n, 0);

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iterations; ++iter) {
    // assignment step
    for (std::size_t i = 0; i < n; ++i) {
      result.assignment[i] = nearest_centroid(points.row(i), result.centroids);
    }

    // empty-cluster repair: seize the point with the largest weighted squared
    // distance to its centroid, skipping points that are alone in a cluster
    std::vector<std::size_t> counts(k, 0);
    for (int a : result.assignment) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      double worst = -1.0;
      std::size_t worst_i = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(result.assignment[i])] <= 1) continue;
        const double d =
            weights[i] * squared_distance(
                             points.row(i),
                             result.centroids.row(static_cast<std::size_t>(result.assignment[i])));
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      if (worst_i == n) continue;  // degenerate: nothing to seize
      --counts[static_cast<std::size_t>(result.assignment[worst_i])];
      result.assignment[worst_i] = static_cast<int>(c);
      ++counts[c];
      for (std::size_t j = 0; j < points.cols(); ++j) {
        result.centroids.at(c, j) = points.at(worst_i, j);
      }
    }

    const double inertia = weighted_inertia(points, weights, result.centroids, result.assignment);
    result.inertia_history.push_back(inertia);

    // update step: weighted means; zero-mass clusters keep their centroid
    Matrix sums(k, points.cols());
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      mass[c] += weights[i];
      auto p = points.row(i);
      for (std::size_t j = 0; j < p.size(); ++j) sums.at(c, j) += weights[i] * p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (mass[c] <= 0.0) continue;
      for (std::size_t j = 0; j < points.cols(); ++j) {
        result.centroids.at(c, j) = sums.at(c, j) / mass[c];
      }
    }

    const double improvement =
        prev_inertia == std::numeric_limits<double>::infinity()
            ? 1.0
            : (prev_inertia - inertia) / std::max(prev_inertia, 1e-300);
    prev_inertia = inertia;
    if (improvement < tol) break;
  }

  // final assignment against the last centroid update
  for (std::size_t i = 0; i < n; ++i) {
    result.assignment[i] = nearest_centroid(points.row(i), result.centroids);
  }
  result.inertia = weighted_inertia(points, weights, result.centroids, result.assignment);
  result.inertia_history.push_back(result.inertia);
  return result;
}

}  // namespace

ClusteringResult kmeans(const Matrix& points, std::size_t k, std::span<const double> weights,
                        std::uint64_t seed, double tol, int max_iterations) {
  const std::size_t n = points.rows();
  if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds point count");

  std::vector<double> uniform;
  if (weights.empty()) {
    uniform = uniform_weights(n);
    weights = uniform;
  }
  if (weights.size() != n) throw std::invalid_argument("kmeans: weight count mismatch");
  double weight_total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("kmeans: negative weight");
    weight_total += w;
  }
  if (weight_total <= 0.0) throw std::invalid_argument("kmeans: all weights are zero");

  // restarts with independent seed streams; keep the lowest-inertia run
  constexpr int kRestarts = 10;
  ClusteringResult best;
  for (int restart = 0; restart < kRestarts; ++restart) {
    ClusteringResult candidate =
        kmeans_single(points, k, weights,
                      derive_seed({seed, 0x6b6d65616e73ULL, static_cast<std::uint64_t>(restart)}),
                      tol, max_iterations);
    if (restart == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

namespace {

// one pool index per centroid, nearest first come; a claimed point falls
// through to the next-nearest unclaimed one
std::vector<std::int64_t> points_nearest_centroids(const Matrix& points,
                                                   std::span<const std::int64_t> pool_indices,
                                                   const Matrix& centroids) {
  const std::size_t n = points.rows();
  std::vector<bool> claimed(n, false);
  std::vector<std::int64_t> out;
  out.reserve(centroids.rows());
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (claimed[i]) continue;
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best_i = i;
      }
    }
    if (best_i == n) break;  // more centroids than points, cannot happen with k <= n
    claimed[best_i] = true;
    out.push_back(pool_indices[best_i]);
  }
  return out;
}

}  // namespace

std::vector<std::int64_t> select_batch(const StrategySpec& strategy, const Model* model,
                                       const Dataset& dataset, const PoolState& pool,
                                       std::size_t batch_size, std::uint64_t seed) {
  strategy.validate();
  if (batch_size == 0) throw std::invalid_argument("select_batch: batch_size must be >= 1");
  const auto& unlabeled = pool.unlabeled();
  if (unlabeled.empty()) throw std::invalid_argument("select_batch: unlabeled pool is empty");
  if (strategy_needs_model(strategy.kind) && model == nullptr) {
    throw std::invalid_argument("select_batch: strategy '" + to_string(strategy.kind) +
                                "' requires a fitted model");
  }
  const std::size_t take = std::min(batch_size, unlabeled.size());

  if (strategy.kind == StrategySpec::Kind::Random) {
    Rng rng(derive_seed({seed, 0x72616e646f6dULL}));  // "random"
    return rng.sample_without_replacement(std::span<const std::int64_t>(unlabeled), take);
  }

  const Matrix pool_features = dataset.features.gather_rows(std::span<const std::int64_t>(unlabeled));

  if (strategy.kind == StrategySpec::Kind::KMeans) {
    auto clustering = kmeans(pool_features, take, {}, derive_seed({seed, 0x636c7573ULL}));
    return points_nearest_centroids(pool_features, unlabeled, clustering.centroids);
  }

  const Matrix probs = model->predict_proba(pool_features);

  if (strategy.kind == StrategySpec::Kind::WKMeans) {
    auto margins = uncertainty_scores(UncertaintyKind::Margin, probs);
    const std::size_t n_candidates =
        std::min(unlabeled.size(), static_cast<std::size_t>(strategy.prefilter_factor) * take);
    auto candidate_pos = top_k(margins, n_candidates);

    std::vector<std::int64_t> candidate_indices(n_candidates);
    std::vector<double> candidate_weights(n_candidates);
    for (std::size_t i = 0; i < n_candidates; ++i) {
      candidate_indices[i] = unlabeled[candidate_pos[i]];
      candidate_weights[i] = margins[candidate_pos[i]];
    }
    const Matrix candidate_features =
        dataset.features.gather_rows(std::span<const std::int64_t>(candidate_indices));

    // a perfectly confident model yields all-zero margin weights; fall back
    // to unweighted clustering
    double total = 0.0;
    for (double w : candidate_weights) total += w;
    std::span<const double> weights =
        total > 0.0 ? std::span<const double>(candidate_weights) : std::span<const double>();

    auto clustering = kmeans(candidate_features, take, weights, derive_seed({seed, 0x636c7573ULL}));
    return points_nearest_centroids(candidate_features, candidate_indices, clustering.centroids);
  }

  UncertaintyKind kind;
  switch (strategy.kind) {
    case StrategySpec::Kind::Confidence: kind = UncertaintyKind::Confidence; break;
    case StrategySpec::Kind::Margin: kind = UncertaintyKind::Margin; break;
    default: kind = UncertaintyKind::Entropy; break;
  }
  auto scores = uncertainty_scores(kind, probs);
  auto picked = top_k(scores, take);
  std::vector<std::int64_t> out(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) out[i] = unlabeled[picked[i]];
  return out;
}

}  // namespace alkit
