#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alkit/models.hpp"
#include "alkit/rng.hpp"
#include "test_util.hpp"

using namespace alkit;

TEST_CASE("knn(1) on a single sample predicts its class everywhere") {
  const Matrix x = Matrix::from_rows({{0.5, -1.0}});
  const Model model = fit({.kind = ClassifierSpec::Kind::Knn, .k = 1}, x, {1}, 3, 0);
  const Matrix queries = Matrix::from_rows({{10.0, 10.0}, {-3.0, 0.0}, {0.5, -1.0}});
  CHECK(model.predict(queries) == std::vector<int>{1, 1, 1});
}

TEST_CASE("knn(3): unanimous neighbors give a one-hot row") {
  const Matrix x = Matrix::from_rows({{0, 0}, {0.1, 0}, {0, 0.1}, {9, 9}});
  const Model model = fit({.kind = ClassifierSpec::Kind::Knn, .k = 3}, x, {2, 2, 2, 0}, 3, 0);
  const Matrix probs = model.predict_proba(Matrix::from_rows({{0.02, 0.02}}));
  CHECK(probs.at(0, 0) == 0.0);
  CHECK(probs.at(0, 1) == 0.0);
  CHECK(probs.at(0, 2) == 1.0);
}

TEST_CASE("predict breaks probability ties toward the smaller class id") {
  // knn(2) with one vote each: row [0.5, 0.5] -> class 0
  const Matrix x = Matrix::from_rows({{-1, 0}, {1, 0}});
  const Model model = fit({.kind = ClassifierSpec::Kind::Knn, .k = 2}, x, {1, 0}, 2, 0);
  const Matrix probs = model.predict_proba(Matrix::from_rows({{0, 0}}));
  CHECK(probs.at(0, 0) == 0.5);
  CHECK(probs.at(0, 1) == 0.5);
  CHECK(model.predict(Matrix::from_rows({{0, 0}})) == std::vector<int>{0});
}

TEST_CASE("softmax with zero weights is uniform") {
  ClassifierSpec spec{.kind = ClassifierSpec::Kind::SoftmaxSgd};
  spec.epochs = 1;
  spec.learning_rate = 1e-12;  // effectively keeps the zero init
  const Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
  const Model model = fit(spec, x, {0, 1}, 4, 0);
  const Matrix probs = model.predict_proba(Matrix::from_rows({{5, 5}}));
  for (std::size_t c = 0; c < 4; ++c) CHECK(probs.at(0, c) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("predict_proba rows live on the probability simplex") {
  // property over random models and inputs, both classifier kinds
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Matrix x = alkit::test::random_matrix(30, 4, seed);
    std::vector<int> y(30);
    Rng rng(seed * 13);
    for (auto& v : y) v = static_cast<int>(rng.next_below(3));
    y[0] = 0; y[1] = 1; y[2] = 2;

    for (const auto kind : {ClassifierSpec::Kind::Knn, ClassifierSpec::Kind::SoftmaxSgd}) {
      ClassifierSpec spec;
      spec.kind = kind;
      spec.k = 5;
      spec.epochs = 5;
      const Model model = fit(spec, x, y, 3, seed);
      const Matrix queries = alkit::test::random_matrix(20, 4, seed + 100);
      const Matrix probs = model.predict_proba(queries);
      const auto pred = model.predict(queries);
      for (std::size_t i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        std::size_t argmax = 0;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
          CHECK(probs.at(i, c) >= 0.0);
          sum += probs.at(i, c);
          if (probs.at(i, c) > probs.at(i, argmax)) argmax = c;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        // predict == argmax of predict_proba with the smallest-id tie rule
        CHECK(pred[i] == static_cast<int>(argmax));
      }
    }
  }
}

TEST_CASE("softmax separates 2-class blobs that a brute-force 1D sweep separates") {
  // blobs at +/- delta along a random axis with margin >= 2 sigma
  Rng rng(2024);
  const std::size_t n_per = 40;
  const double sigma = 0.5;
  const double delta = 2.0;  // centers 4 sigma apart along the axis
  Matrix x(2 * n_per, 3);
  std::vector<int> y(2 * n_per);
  std::vector<double> axis{0.6, -0.8, 0.0};
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    const int cls = i < n_per ? 0 : 1;
    const double shift = cls == 0 ? -delta : delta;
    for (std::size_t j = 0; j < 3; ++j) {
      x.at(i, j) = axis[j] * shift + sigma * rng.next_gaussian();
    }
    y[i] = cls;
  }

  // oracle: exhaustive threshold sweep on the projection axis
  std::vector<double> projection(2 * n_per);
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    projection[i] = x.at(i, 0) * axis[0] + x.at(i, 1) * axis[1] + x.at(i, 2) * axis[2];
  }
  auto sorted = projection;
  std::sort(sorted.begin(), sorted.end());
  std::size_t best_hits = 0;
  for (std::size_t cut = 0; cut + 1 < sorted.size(); ++cut) {
    const double threshold = 0.5 * (sorted[cut] + sorted[cut + 1]);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 2 * n_per; ++i) {
      if ((projection[i] > threshold ? 1 : 0) == y[i]) ++hits;
    }
    best_hits = std::max(best_hits, hits);
  }
  REQUIRE(best_hits == 2 * n_per);  // the sweep proves linear separability

  ClassifierSpec spec{.kind = ClassifierSpec::Kind::SoftmaxSgd};
  const Model model = fit(spec, x, y, 2, 7);
  const auto pred = model.predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == y[i]) ++hits;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(pred.size()) >= 0.95);
}

TEST_CASE("softmax analytic gradient matches central finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t dim = 3;
    const int n_classes = 4;
    Matrix w(n_classes, dim);
    std::vector<double> b(n_classes);
    for (double& v : w.data()) v = rng.next_double() - 0.5;
    for (double& v : b) v = rng.next_double() - 0.5;
    std::vector<double> x(dim);
    for (double& v : x) v = rng.next_double() * 2.0 - 1.0;
    const int label = static_cast<int>(rng.next_below(n_classes));
    const double l2 = 0.01;

    Matrix grad_w;
    std::vector<double> grad_b;
    softmax_grad(w, b, x, label, l2, grad_w, grad_b);

    const double h = 1e-6;
    for (std::size_t idx = 0; idx < w.data().size(); ++idx) {
      Matrix wp = w, wm = w;
      wp.data()[idx] += h;
      wm.data()[idx] -= h;
      const double numeric = (softmax_loss(wp, b, x, label, l2) -
                              softmax_loss(wm, b, x, label, l2)) / (2.0 * h);
      const double analytic = grad_w.data()[idx];
      CHECK(std::abs(numeric - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }
    for (std::size_t c = 0; c < b.size(); ++c) {
      auto bp = b, bm = b;
      bp[c] += h;
      bm[c] -= h;
      const double numeric = (softmax_loss(w, bp, x, label, l2) -
                              softmax_loss(w, bm, x, label, l2)) / (2.0 * h);
      CHECK(std::abs(numeric - grad_b[c]) <= 1e-5 * std::max(1.0, std::abs(grad_b[c])));
    }
  }
}

TEST_CASE("fit is bit-deterministic given the seed") {
  const Matrix x = alkit::test::random_matrix(50, 3, 1);
  std::vector<int> y(50);
  for (std::size_t i = 0; i < 50; ++i) y[i] = static_cast<int>(i % 3);
  ClassifierSpec spec{.kind = ClassifierSpec::Kind::SoftmaxSgd};
  spec.epochs = 10;
  const Model a = fit(spec, x, y, 3, 42);
  const Model b = fit(spec, x, y, 3, 42);
  CHECK(a.weights().data() == b.weights().data());
  CHECK(a.bias() == b.bias());
  const Model c = fit(spec, x, y, 3, 43);
  CHECK(a.weights().data() != c.weights().data());
}

TEST_CASE("fit error contracts") {
  CHECK_THROWS_AS(fit({.kind = ClassifierSpec::Kind::Knn, .k = 1}, Matrix(), {}, 2, 0),
                  std::invalid_argument);
  const Matrix x = Matrix::from_rows({{1, 2}});
  CHECK_THROWS_AS(fit({.kind = ClassifierSpec::Kind::Knn, .k = 0}, x, {0}, 2, 0),
                  std::invalid_argument);
  const Model model = fit({.kind = ClassifierSpec::Kind::Knn, .k = 1}, x, {0}, 2, 0);
  CHECK_THROWS_AS(model.predict_proba(Matrix::from_rows({{1, 2, 3}})), std::invalid_argument);
}

TEST_CASE("nn1_predict: zero distance, single reference, index tie rule") {
  const Matrix ref = Matrix::from_rows({{0, 0}, {2, 0}});
  const std::vector<int> labels{3, 7};

  // query equals a reference row -> that row's label
  CHECK(nn1_predict(ref, labels, Matrix::from_rows({{2, 0}})) == std::vector<int>{7});
  // equidistant -> lower reference index wins
  CHECK(nn1_predict(ref, labels, Matrix::from_rows({{1, 0}})) == std::vector<int>{3});
  // single reference answers everything
  const Matrix lone = Matrix::from_rows({{5, 5}});
  CHECK(nn1_predict(lone, {9}, Matrix::from_rows({{-100, 40}, {0, 0}})) ==
        std::vector<int>{9, 9});
  CHECK_THROWS_AS(nn1_predict(Matrix(), {}, ref), std::invalid_argument);
}

TEST_CASE("knn prediction is invariant under reference permutation away from ties") {
  Rng rng(5);
  const Matrix ref = alkit::test::random_matrix(20, 3, 77);
  std::vector<int> labels(20);
  for (auto& v : labels) v = static_cast<int>(rng.next_below(3));
  const Matrix queries = alkit::test::random_matrix(10, 3, 88);

  const Model base = fit({.kind = ClassifierSpec::Kind::Knn, .k = 4}, ref, labels, 3, 0);
  const auto expected = base.predict(queries);

  std::vector<std::size_t> perm(20);
  for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
  Rng shuffler(123);
  shuffler.shuffle(perm);
  Matrix ref_perm(20, 3);
  std::vector<int> labels_perm(20);
  for (std::size_t i = 0; i < 20; ++i) {
    labels_perm[i] = labels[perm[i]];
    for (std::size_t j = 0; j < 3; ++j) ref_perm.at(i, j) = ref.at(perm[i], j);
  }
  const Model permuted = fit({.kind = ClassifierSpec::Kind::Knn, .k = 4}, ref_perm, labels_perm, 3, 0);
  CHECK(permuted.predict(queries) == expected);  // random reals: no distance ties
}

TEST_CASE("model serialization round-trips bit-exactly") {
  const Matrix x = alkit::test::random_matrix(15, 3, 6);
  std::vector<int> y(15);
  for (std::size_t i = 0; i < 15; ++i) y[i] = static_cast<int>(i % 2);

  ClassifierSpec sgd{.kind = ClassifierSpec::Kind::SoftmaxSgd};
  sgd.epochs = 3;
  for (const Model& model : {fit({.kind = ClassifierSpec::Kind::Knn, .k = 3}, x, y, 2, 0),
                             fit(sgd, x, y, 2, 5)}) {
    const auto bytes = model.serialize();
    const Model restored = Model::deserialize(bytes);
    CHECK(restored == model);
  }
  CHECK_THROWS_AS(Model::deserialize(std::vector<std::byte>(4)), std::runtime_error);
}
