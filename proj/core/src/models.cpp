#include "alkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "alkit/rng.hpp"

namespace alkit {
namespace {

void softmax_inplace(std::span<double> logits) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

void logits_of(const Matrix& weights, const std::vector<double>& bias, std::span<const double> x,
               std::span<double> out) {
  for (std::size_t c = 0; c < weights.rows(); ++c) {
    double z = bias[c];
    auto w = weights.row(c);
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
    out[c] = z;
  }
}

struct Serializer {
  std::vector<std::byte> bytes;

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    u64(u);
  }
};

struct Deserializer {
  std::span<const std::byte> bytes;
  std::size_t pos = 0;

  std::uint64_t u64() {
    if (pos + 8 > bytes.size()) throw std::runtime_error("model blob truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
};

constexpr std::uint64_t kModelMagic = 0x414c4b4d4f444c31ULL;  // "ALKMODL1"

}  // namespace

void ClassifierSpec::validate() const {
  if (kind == Kind::Knn) {
    if (k < 1) throw std::invalid_argument("ClassifierSpec: knn k must be >= 1");
  } else {
    if (learning_rate <= 0.0) throw std::invalid_argument("ClassifierSpec: learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("ClassifierSpec: epochs must be >= 1");
    if (l2 < 0.0) throw std::invalid_argument("ClassifierSpec: l2 must be >= 0");
  }
}

std::string to_string(ClassifierSpec::Kind kind) {
  return kind == ClassifierSpec::Kind::Knn ? "knn" : "softmax_sgd";
}

double softmax_loss(const Matrix& weights, const std::vector<double>& bias,
                    std::span<const double> x, int label, double l2) {
  std::vector<double> p(weights.rows());
  logits_of(weights, bias, x, p);
  softmax_inplace(p);
  double reg = 0.0;
  for (double w : weights.data()) reg += w * w;
  const double eps = std::numeric_limits<double>::min();
  return -std::log(std::max(p[static_cast<std::size_t>(label)], eps)) + 0.5 * l2 * reg;
}

void softmax_grad(const Matrix& weights, const std::vector<double>& bias,
                  std::span<const double> x, int label, double l2, Matrix& grad_weights,
                  std::vector<double>& grad_bias) {
  const std::size_t n_classes = weights.rows();
  std::vector<double> p(n_classes);
  logits_of(weights, bias, x, p);
  softmax_inplace(p);
  grad_weights = Matrix(n_classes, weights.cols());
  grad_bias.assign(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double g = p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
    grad_bias[c] = g;
    auto gw = grad_weights.row(c);
    auto w = weights.row(c);
    for (std::size_t j = 0; j < x.size(); ++j) gw[j] = g * x[j] + l2 * w[j];
  }
}

Model fit(const ClassifierSpec& spec, const Matrix& features, const std::vector<int>& labels,
          int n_classes, std::uint64_t seed) {
  spec.validate();
  if (features.rows() == 0) throw std::invalid_argument("fit: empty training set");
  if (features.rows() != labels.size()) throw std::invalid_argument("fit: feature/label count mismatch");
  if (n_classes < 1) throw std::invalid_argument("fit: n_classes must be >= 1");
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::invalid_argument("fit: label outside [0, n_classes)");
  }

  Model model;
  model.spec_ = spec;
  model.n_classes_ = n_classes;
  model.dim_ = features.cols();

  if (spec.kind == ClassifierSpec::Kind::Knn) {
    model.knn_features_ = features;
    model.knn_labels_ = labels;
    return model;
  }

  model.weights_ = Matrix(static_cast<std::size_t>(n_classes), features.cols());
  model.bias_.assign(static_cast<std::size_t>(n_classes), 0.0);

  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed({seed, 0x73676466697400ULL}));  // "sgdfit"
  Matrix grad_w;
  std::vector<double> grad_b;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      softmax_grad(model.weights_, model.bias_, features.row(i), labels[i], spec.l2, grad_w,
                   grad_b);
      for (std::size_t idx = 0; idx < grad_w.data().size(); ++idx) {
        model.weights_.data()[idx] -= spec.learning_rate * grad_w.data()[idx];
      }
      for (std::size_t c = 0; c < grad_b.size(); ++c) {
        model.bias_[c] -= spec.learning_rate * grad_b[c];
      }
    }
  }
  return model;
}

Matrix Model::predict_proba(const Matrix& features) const {
  if (n_classes_ == 0) throw std::logic_error("Model: not fitted");
  if (features.cols() != dim_) throw std::invalid_argument("predict_proba: dimension mismatch");
  Matrix probs(features.rows(), static_cast<std::size_t>(n_classes_));

  if (spec_.kind == ClassifierSpec::Kind::SoftmaxSgd) {
    for (std::size_t i = 0; i < features.rows(); ++i) {
      auto row = probs.row(i);
      logits_of(weights_, bias_, features.row(i), row);
      softmax_inplace(row);
    }
    return probs;
  }

  // knn: neighbor-vote fractions over the k nearest reference rows
  const std::size_t n_ref = knn_features_.rows();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(spec_.k), n_ref);
  std::vector<std::pair<double, std::size_t>> dist(n_ref);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t r = 0; r < n_ref; ++r) {
      dist[r] = {squared_distance(features.row(i), knn_features_.row(r)), r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    auto row = probs.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      row[static_cast<std::size_t>(knn_labels_[dist[j].second])] += 1.0;
    }
    for (double& v : row) v /= static_cast<double>(k);
  }
  return probs;
}

std::vector<int> Model::predict(const Matrix& features) const {
  const Matrix probs = predict_proba(features);
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> nn1_predict(const Matrix& reference_features,
                             const std::vector<int>& reference_labels, const Matrix& queries) {
  if (reference_features.rows() == 0) throw std::invalid_argument("nn1_predict: empty reference set");
  if (reference_features.rows() != reference_labels.size()) {
    throw std::invalid_argument("nn1_predict: reference feature/label count mismatch");
  }
  std::vector<int> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(queries.row(i), reference_features.row(0));
    for (std::size_t r = 1; r < reference_features.rows(); ++r) {
      const double d = squared_distance(queries.row(i), reference_features.row(r));
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    out[i] = reference_labels[best];
  }
  return out;
}

std::vector<std::byte> Model::serialize() const {
  Serializer s;
  s.u64(kModelMagic);
  s.u64(spec_.kind == ClassifierSpec::Kind::Knn ? 0 : 1);
  s.u64(static_cast<std::uint64_t>(spec_.k));
  s.f64(spec_.learning_rate);
  s.u64(static_cast<std::uint64_t>(spec_.epochs));
  s.f64(spec_.l2);
  s.u64(static_cast<std::uint64_t>(n_classes_));
  s.u64(dim_);
  if (spec_.kind == ClassifierSpec::Kind::Knn) {
    s.u64(knn_features_.rows());
    for (double v : knn_features_.data()) s.f64(v);
    for (int y : knn_labels_) s.u64(static_cast<std::uint64_t>(y));
  } else {
    for (double v : weights_.data()) s.f64(v);
    for (double v : bias_) s.f64(v);
  }
  return std::move(s.bytes);
}

Model Model::deserialize(std::span<const std::byte> bytes) {
  Deserializer d{bytes};
  if (d.u64() != kModelMagic) throw std::runtime_error("model blob: bad magic");
  const std::uint64_t kind = d.u64();
  if (kind > 1) throw std::runtime_error("model blob: unknown classifier kind");
  Model m;
  m.spec_.kind = kind == 0 ? ClassifierSpec::Kind::Knn : ClassifierSpec::Kind::SoftmaxSgd;
  m.spec_.k = static_cast<int>(d.u64());
  m.spec_.learning_rate = d.f64();
  m.spec_.epochs = static_cast<int>(d.u64());
  m.spec_.l2 = d.f64();
  m.n_classes_ = static_cast<int>(d.u64());
  m.dim_ = d.u64();
  if (kind == 0) {
    const std::size_t rows = d.u64();
    m.knn_features_ = Matrix(rows, m.dim_);
    for (double& v : m.knn_features_.data()) v = d.f64();
    m.knn_labels_.resize(rows);
    for (int& y : m.knn_labels_) y = static_cast<int>(d.u64());
  } else {
    m.weights_ = Matrix(static_cast<std::size_t>(m.n_classes_), m.dim_);
    for (double& v : m.weights_.data()) v = d.f64();
    m.bias_.resize(static_cast<std::size_t>(m.n_classes_));
    for (double& v : m.bias_) v = d.f64();
  }
  if (d.pos != bytes.size()) throw std::runtime_error("model blob: trailing bytes");
  return m;
}

}  // namespace alkit
