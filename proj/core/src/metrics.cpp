#include "alkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace alkit {

bool is_iteration_metric(const std::string& name) {
  return name == metric_names::accuracy || name == metric_names::contradiction ||
         name == metric_names::exploration_gradient || name == metric_names::nn_distance_sum ||
         name == metric_names::reverse_batch_accuracy || name == metric_names::kappa_agreement;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double contradiction(std::span<const int> prev_predictions, std::span<const int> cur_predictions) {
  if (prev_predictions.size() != cur_predictions.size()) {
    throw std::invalid_argument("contradiction: length mismatch");
  }
  if (prev_predictions.empty()) throw std::invalid_argument("contradiction: empty input");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < prev_predictions.size(); ++i) {
    if (prev_predictions[i] != cur_predictions[i]) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(prev_predictions.size());
}

double nn_distance_sum(const Matrix& queries, std::span<const std::int64_t> reference,
                       const Dataset& dataset) {
  if (reference.empty()) throw std::invalid_argument("nn_distance_sum: empty reference set");
  double total = 0.0;
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t r : reference) {
      best = std::min(best,
                      squared_distance(queries.row(i), dataset.features.row(static_cast<std::size_t>(r))));
    }
    total += std::sqrt(best);
  }
  return total;
}

double exploration_gradient(const Matrix& test_features, std::span<const std::int64_t> labeled_prev,
                            std::span<const std::int64_t> labeled_cur, const Dataset& dataset) {
  if (labeled_prev.empty()) throw std::invalid_argument("exploration_gradient: empty previous labeled set");
  if (!std::includes(labeled_cur.begin(), labeled_cur.end(), labeled_prev.begin(), labeled_prev.end())) {
    throw std::invalid_argument("exploration_gradient: previous labeled set is not a subset of the current one");
  }
  return nn_distance_sum(test_features, labeled_prev, dataset) -
         nn_distance_sum(test_features, labeled_cur, dataset);
}

double reverse_batch_accuracy(const Matrix& test_features, const std::vector<int>& test_labels,
                              const ClassifierSpec& spec, int n_classes, const Matrix& batch_features,
                              const std::vector<int>& batch_labels, std::uint64_t seed) {
  if (batch_features.rows() == 0) throw std::invalid_argument("reverse_batch_accuracy: empty batch");
  if (test_features.rows() == 0 || test_labels.empty()) {
    throw std::invalid_argument("reverse_batch_accuracy: test labels unavailable (research-only metric)");
  }
  const Model reverse_model = fit(spec, test_features, test_labels, n_classes, seed);
  return accuracy(reverse_model.predict(batch_features), batch_labels);
}

double kappa_agreement(const Model& model, const Matrix& labeled_features,
                       const std::vector<int>& labeled_labels, const Matrix& batch_features) {
  if (labeled_features.rows() == 0) throw std::invalid_argument("kappa_agreement: empty labeled set");
  if (batch_features.rows() == 0) throw std::invalid_argument("kappa_agreement: empty batch");
  const std::vector<int> model_pred = model.predict(batch_features);
  const std::vector<int> nn_pred = nn1_predict(labeled_features, labeled_labels, batch_features);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < model_pred.size(); ++i) {
    if (model_pred[i] == nn_pred[i]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(model_pred.size());
}

double aulc(std::span<const double> series) {
  if (series.size() < 2) throw std::invalid_argument("aulc: need at least 2 points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    area += 0.5 * (series[i] + series[i + 1]);
  }
  return area / static_cast<double>(series.size() - 1);
}

}  // namespace alkit
