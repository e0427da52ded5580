#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "alkit/dataset.hpp"
#include "alkit/matrix.hpp"
#include "alkit/models.hpp"

namespace alkit {

// Fixed metric vocabulary, case-sensitive in logs and CSV headers.
namespace metric_names {
inline constexpr const char* accuracy = "accuracy";
inline constexpr const char* contradiction = "contradiction";
inline constexpr const char* exploration_gradient = "exploration_gradient";
inline constexpr const char* nn_distance_sum = "nn_distance_sum";
inline constexpr const char* reverse_batch_accuracy = "reverse_batch_accuracy";
inline constexpr const char* kappa_agreement = "kappa_agreement";
inline constexpr const char* aulc = "aulc";
}  // namespace metric_names

bool is_iteration_metric(const std::string& name);

// Per-iteration values of one metric on one evaluation set, contiguous from
// first_iteration.
struct MetricSeries {
  std::string name;
  int first_iteration = 0;
  std::vector<double> values;
};

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// C(t): fraction of positions where two prediction vectors over the same
// evaluation set differ. Needs no labels.
double contradiction(std::span<const int> prev_predictions, std::span<const int> cur_predictions);

// Sum over query rows of the Euclidean distance to the nearest referenced
// dataset row.
double nn_distance_sum(const Matrix& queries, std::span<const std::int64_t> reference,
                       const Dataset& dataset);

// EG(t): drop of the summed nearest-labeled-neighbor distance of the
// evaluation set when the labeled set grows from prev to cur. Nonnegative
// whenever prev is a subset of cur.
double exploration_gradient(const Matrix& test_features, std::span<const std::int64_t> labeled_prev,
                            std::span<const std::int64_t> labeled_cur, const Dataset& dataset);

// Accuracy, on the batch, of a classifier fit on the labeled test set. Low
// values flag batches that are hard to classify. Research setting only: needs
// test labels.
double reverse_batch_accuracy(const Matrix& test_features, const std::vector<int>& test_labels,
                              const ClassifierSpec& spec, int n_classes, const Matrix& batch_features,
                              const std::vector<int>& batch_labels, std::uint64_t seed);

// Fraction of batch points where the model agrees with a 1-nearest-neighbor
// classifier over the labeled set. Label-free proxy for reverse batch
// accuracy.
double kappa_agreement(const Model& model, const Matrix& labeled_features,
                       const std::vector<int>& labeled_labels, const Matrix& batch_features);

// Normalized trapezoidal area under a learning curve; a constant curve c
// yields c.
double aulc(std::span<const double> series);

}  // namespace alkit
