#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alkit/matrix.hpp"

namespace alkit {

struct ClassifierSpec {
  enum class Kind { Knn, SoftmaxSgd };
  Kind kind = Kind::Knn;
  int k = 5;                    // Knn
  double learning_rate = 0.01;  // SoftmaxSgd
  int epochs = 50;
  double l2 = 1e-4;

  void validate() const;
  bool operator==(const ClassifierSpec&) const = default;
};

std::string to_string(ClassifierSpec::Kind kind);

// A fitted classifier exposing class-probability prediction. Immutable after
// fit. Knn holds its reference set; SoftmaxSgd holds a weight matrix and bias.
class Model {
 public:
  Model() = default;

  Matrix predict_proba(const Matrix& features) const;

  // argmax of predict_proba rows; ties break toward the smallest class id
  std::vector<int> predict(const Matrix& features) const;

  ClassifierSpec::Kind kind() const { return spec_.kind; }
  int n_classes() const { return n_classes_; }
  std::size_t dim() const { return dim_; }

  const Matrix& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  const Matrix& reference_features() const { return knn_features_; }
  const std::vector<int>& reference_labels() const { return knn_labels_; }

  // Byte-exact round trip: header + little-endian 64-bit floats. The format
  // is documented in docs/store-format.md.
  std::vector<std::byte> serialize() const;
  static Model deserialize(std::span<const std::byte> bytes);

  bool operator==(const Model&) const = default;

 private:
  friend Model fit(const ClassifierSpec&, const Matrix&, const std::vector<int>&, int,
                   std::uint64_t);

  ClassifierSpec spec_;
  int n_classes_ = 0;
  std::size_t dim_ = 0;
  Matrix knn_features_;
  std::vector<int> knn_labels_;
  Matrix weights_;  // n_classes x dim
  std::vector<double> bias_;
};

// Deterministic given (spec, data, seed). SoftmaxSgd starts from zero weights
// and reshuffles the sample order each epoch with the derived seed.
Model fit(const ClassifierSpec& spec, const Matrix& features, const std::vector<int>& labels,
          int n_classes, std::uint64_t seed);

// Label of the Euclidean-nearest reference row per query; distance ties break
// toward the smallest reference index.
std::vector<int> nn1_predict(const Matrix& reference_features,
                             const std::vector<int>& reference_labels, const Matrix& queries);

// Multinomial cross-entropy pieces used by the SGD loop, exposed so the
// analytic gradient can be checked against finite differences.
double softmax_loss(const Matrix& weights, const std::vector<double>& bias,
                    std::span<const double> x, int label, double l2);
void softmax_grad(const Matrix& weights, const std::vector<double>& bias,
                  std::span<const double> x, int label, double l2, Matrix& grad_weights,
                  std::vector<double>& grad_bias);

}  // namespace alkit
