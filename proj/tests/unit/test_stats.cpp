#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alkit/rng.hpp"
#include "alkit/stats.hpp"
#include "alkit/store.hpp"
#include "test_util.hpp"

using namespace alkit;
using alkit::test::TempDir;

namespace {

ScoreTable table_from(const std::vector<std::vector<double>>& rows,
                      std::vector<std::string> cols) {
  ScoreTable table;
  table.col_names = std::move(cols);
  for (std::size_t i = 0; i < rows.size(); ++i) table.row_names.push_back("t" + std::to_string(i));
  table.values = Matrix::from_rows(rows);
  return table;
}

// independent oracle: hand formula over mean ranks, no tie correction
double friedman_hand_statistic(const std::vector<std::vector<double>>& rows, std::size_t k) {
  const double n = static_cast<double>(rows.size());
  std::vector<double> mean_ranks(k, 0.0);
  for (const auto& row : rows) {
    const auto ranks = average_ranks_descending(row);
    for (std::size_t j = 0; j < k; ++j) mean_ranks[j] += ranks[j] / n;
  }
  double ssq = 0.0;
  for (double r : mean_ranks) ssq += (r - 0.5 * (k + 1.0)) * (r - 0.5 * (k + 1.0));
  return 12.0 * n / (static_cast<double>(k) * (k + 1.0)) * ssq;
}

// permutation-test oracle: shuffle each row independently, compare statistics
double friedman_permutation_p(const std::vector<std::vector<double>>& rows, std::size_t k,
                              int draws, std::uint64_t seed) {
  const double observed = friedman_hand_statistic(rows, k);
  Rng rng(seed);
  int at_least = 0;
  auto shuffled = rows;
  for (int d = 0; d < draws; ++d) {
    for (auto& row : shuffled) rng.shuffle(row);
    if (friedman_hand_statistic(shuffled, k) >= observed - 1e-12) ++at_least;
  }
  return static_cast<double>(at_least) / static_cast<double>(draws);
}

}  // namespace

TEST_CASE("friedman: unanimous ranking of 3 strategies over 10 tasks") {
  std::vector<std::vector<double>> rows(10, {3.0, 2.0, 1.0});  // same order in every row
  const auto result = friedman_test(table_from(rows, {"a", "b", "c"}));
  CHECK(result.statistic == doctest::Approx(20.0));  // hand formula: 12*10/12 * (1+0+1)
  CHECK(result.statistic == doctest::Approx(friedman_hand_statistic(rows, 3)));
  CHECK(result.p_value < 0.001);
  CHECK(result.mean_ranks == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("friedman: identical columns mean full ties") {
  std::vector<std::vector<double>> rows(6, {0.4, 0.4, 0.4, 0.4});
  const auto result = friedman_test(table_from(rows, {"a", "b", "c", "d"}));
  CHECK(result.statistic == 0.0);
  CHECK(result.p_value == 1.0);
  for (double r : result.mean_ranks) CHECK(r == doctest::Approx(2.5));  // (k+1)/2
}

TEST_CASE("friedman: invariant under row permutation and monotone row transforms") {
  Rng rng(12);
  std::vector<std::vector<double>> rows(8, std::vector<double>(4));
  for (auto& row : rows) {
    for (auto& v : row) v = rng.next_double();
  }
  const auto base = friedman_test(table_from(rows, {"a", "b", "c", "d"}));

  auto permuted = rows;
  rng.shuffle(permuted);
  const auto after_permute = friedman_test(table_from(permuted, {"a", "b", "c", "d"}));
  CHECK(after_permute.statistic == doctest::Approx(base.statistic));
  CHECK(after_permute.mean_ranks == base.mean_ranks);

  // strictly monotone per-row transform keeps every rank
  auto transformed = rows;
  for (auto& row : transformed) {
    for (auto& v : row) v = std::exp(3.0 * v) + 1.0;
  }
  const auto after_transform = friedman_test(table_from(transformed, {"a", "b", "c", "d"}));
  CHECK(after_transform.statistic == doctest::Approx(base.statistic));
  CHECK(after_transform.mean_ranks == base.mean_ranks);

  // column permutation permutes the mean ranks identically
  auto swapped = rows;
  for (auto& row : swapped) {
    std::swap(row[0], row[3]);
    std::swap(row[1], row[2]);
  }
  const auto after_columns = friedman_test(table_from(swapped, {"d", "c", "b", "a"}));
  CHECK(after_columns.statistic == doctest::Approx(base.statistic));
  CHECK(after_columns.mean_ranks ==
        std::vector<double>{base.mean_ranks[3], base.mean_ranks[2], base.mean_ranks[1],
                            base.mean_ranks[0]});
}

TEST_CASE("friedman: chi-square p agrees with the permutation oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<std::vector<double>> rows(12, std::vector<double>(4));
    for (auto& row : rows) {
      for (std::size_t j = 0; j < 4; ++j) {
        row[j] = rng.next_double() + 0.15 * static_cast<double>(j);  // mild signal
      }
    }
    const auto result = friedman_test(table_from(rows, {"a", "b", "c", "d"}));
    const double perm = friedman_permutation_p(rows, 4, 4000, 1000 + trial);
    CHECK(std::abs(result.p_value - perm) <= 0.02);
  }
}

TEST_CASE("friedman: average ranks on ties") {
  // row {5, 5, 1}: ranks 1.5, 1.5, 3
  const auto ranks = average_ranks_descending(std::vector<double>{5.0, 5.0, 1.0});
  CHECK(ranks == std::vector<double>{1.5, 1.5, 3.0});
  const auto ascending = average_ranks_ascending(std::vector<double>{5.0, 5.0, 1.0});
  CHECK(ascending == std::vector<double>{2.5, 2.5, 1.0});
}

TEST_CASE("nemenyi_cd: embedded table values and scaling") {
  // hand evaluation against the embedded q values
  CHECK(nemenyi_cd(2, 6, 0.05) ==
        doctest::Approx(1.959964 * std::sqrt(2.0 * 3.0 / (6.0 * 6.0))).epsilon(1e-9));
  CHECK(nemenyi_cd(6, 6, 0.05) ==
        doctest::Approx(2.849705 * std::sqrt(6.0 * 7.0 / (6.0 * 6.0))).epsilon(1e-9));
  CHECK(nemenyi_cd(6, 6, 0.05) == doctest::Approx(3.078).epsilon(1e-3));
  CHECK(nemenyi_cd(2, 6, 0.10) ==
        doctest::Approx(1.644854 * std::sqrt(2.0 * 3.0 / (6.0 * 6.0))).epsilon(1e-9));
  CHECK(nemenyi_cd(20, 10, 0.05) ==
        doctest::Approx(3.543799 * std::sqrt(20.0 * 21.0 / 60.0)).epsilon(1e-9));

  // quadrupling N halves CD
  CHECK(nemenyi_cd(4, 40, 0.05) == doctest::Approx(nemenyi_cd(4, 10, 0.05) / 2.0));

  // CD decreasing in N, increasing in k
  CHECK(nemenyi_cd(5, 20, 0.05) < nemenyi_cd(5, 10, 0.05));
  CHECK(nemenyi_cd(6, 10, 0.05) > nemenyi_cd(5, 10, 0.05));
  CHECK(nemenyi_cd(5, 10, 0.10) < nemenyi_cd(5, 10, 0.05));

  CHECK_THROWS_AS(nemenyi_cd(1, 10, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(nemenyi_cd(21, 10, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(nemenyi_cd(5, 10, 0.01), std::invalid_argument);
}

TEST_CASE("rank_strategies: dominant strategy, significance, rank arithmetic") {
  // one strategy ranks first in every one of many rows
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> row(4);
    row[0] = 10.0 + rng.next_double();          // dominant
    for (std::size_t j = 1; j < 4; ++j) row[j] = rng.next_double() * (4.0 - static_cast<double>(j));
    rows.push_back(row);
  }
  const auto report = rank_strategies(table_from(rows, {"best", "b", "c", "worst"}), 0.05);
  CHECK(report.null_rejected);
  CHECK(report.mean_ranks[0] == doctest::Approx(1.0));
  CHECK(report.critical_distance > 0.0);

  // mean ranks always sum to k(k+1)/2
  double rank_sum = 0.0;
  for (double r : report.mean_ranks) rank_sum += r;
  CHECK(rank_sum == doctest::Approx(10.0));

  // the dominant strategy is significantly better than the worst
  std::size_t worst = 0;
  for (std::size_t j = 1; j < 4; ++j) {
    if (report.mean_ranks[j] > report.mean_ranks[worst]) worst = j;
  }
  CHECK(std::abs(report.mean_ranks[0] - report.mean_ranks[worst]) >= report.critical_distance);
  CHECK(report.significant[0][worst]);
}

TEST_CASE("rank_strategies: identical columns keep the null") {
  std::vector<std::vector<double>> rows(8, {0.5, 0.5, 0.5});
  const auto report = rank_strategies(table_from(rows, {"a", "b", "c"}), 0.05);
  CHECK_FALSE(report.null_rejected);
  CHECK(report.critical_distance == 0.0);
  for (const auto& row : report.significant) {
    for (bool sig : row) CHECK_FALSE(sig);
  }
}

TEST_CASE("iman_davenport: refines but tracks the chi-square decision") {
  std::vector<std::vector<double>> rows(10, {3.0, 2.0, 1.0});
  const auto result = friedman_test(table_from(rows, {"a", "b", "c"}));
  const double p_f = iman_davenport_p(result.statistic, 10, 3);
  CHECK(p_f < 0.001);
  CHECK(iman_davenport_p(0.0, 10, 3) == doctest::Approx(1.0));
}

TEST_CASE("pearson: affine identities and the covariance formula oracle") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y_same = x;
  CHECK(pearson(x, y_same) == doctest::Approx(1.0));
  std::vector<double> y_neg;
  for (double v : x) y_neg.push_back(-2.0 * v + 3.0);
  CHECK(pearson(x, y_neg) == doctest::Approx(-1.0));

  Rng rng(77);
  std::vector<double> a(20), b(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = rng.next_double();
    b[i] = rng.next_double();
  }
  // direct covariance-formula recomputation
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    ma += a[i] / 20;
    mb += b[i] / 20;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(pearson(a, b) == doctest::Approx(cov / std::sqrt(va * vb)).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                       doctest::Contains("constant"), std::invalid_argument);
}

TEST_CASE("spearman: monotone maps, ties, rank-definition property") {
  std::vector<double> x{0.1, 0.5, 1.2, 2.0, 3.3};
  std::vector<double> y_exp;
  for (double v : x) y_exp.push_back(std::exp(v));
  CHECK(spearman(x, y_exp) == doctest::Approx(1.0));
  CHECK(pearson(x, y_exp) < 1.0);

  // ties: brute-force average-rank oracle
  std::vector<double> tx{1, 2, 2, 3};
  std::vector<double> ty{5, 5, 7, 9};
  const auto rx = average_ranks_ascending(tx);
  const auto ry = average_ranks_ascending(ty);
  CHECK(rx == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(ry == std::vector<double>{1.5, 1.5, 3.0, 4.0});
  CHECK(spearman(tx, ty) == doctest::Approx(pearson(rx, ry)).epsilon(1e-15));

  // property on random data: spearman(x, y) = pearson(rank(x), rank(y))
  Rng rng(9);
  std::vector<double> a(15), b(15);
  for (std::size_t i = 0; i < 15; ++i) {
    a[i] = rng.next_double();
    b[i] = rng.next_double();
  }
  CHECK(spearman(a, b) ==
        doctest::Approx(pearson(average_ranks_ascending(a), average_ranks_ascending(b)))
            .epsilon(1e-15));
}

TEST_CASE("chi2_sf sanity") {
  CHECK(chi2_sf(0.0, 2.0) == doctest::Approx(1.0));
  CHECK(chi2_sf(20.0, 2.0) == doctest::Approx(std::exp(-10.0)).epsilon(1e-9));
  // median of chi2(1) is about 0.4549
  CHECK(chi2_sf(0.4549364, 1.0) == doctest::Approx(0.5).epsilon(1e-4));
}

namespace {

// disk store with hand-written metric rows, bypassing the engine
ExperimentStore fixture_store(const TempDir& dir, int n_folds,
                              const std::vector<std::string>& strategies,
                              const std::vector<std::string>& datasets) {
  StoreManifest manifest;
  manifest.config_json = "{}";
  manifest.config_hash = 1;
  for (const auto& ds : datasets) {
    manifest.dataset_fingerprints[ds] = 42;
    for (const auto& strat : strategies) {
      for (int fold = 0; fold < n_folds; ++fold) {
        manifest.cells.push_back(
            {ds + "__" + strat + "__f" + std::to_string(fold), ds, strat, fold});
      }
    }
  }
  return ExperimentStore::create(dir.path() / "store", std::move(manifest));
}

}  // namespace

TEST_CASE("correlate_metrics: identities and grouping over a fixture store") {
  TempDir dir("corr");
  ExperimentStore store = fixture_store(dir, 2, {"random", "margin"}, {"d1", "d2"});
  Rng rng(21);
  for (const auto& cell : store.manifest().cells) {
    double base = rng.next_double();
    for (int t = 0; t < 6; ++t) {
      const double a = base + 0.1 * t + rng.next_double() * 0.01;
      store.append_metric(cell.id, t, metric_names::accuracy, a);
      store.append_metric(cell.id, t, metric_names::contradiction, -a);
      store.append_metric(cell.id, t, metric_names::kappa_agreement, std::exp(a));
    }
    CellStatus status = store.cell_status(cell.id);
    status.done = true;
    store.write_cell_status(cell.id, status);
  }

  const auto self = correlate_metrics(store, metric_names::accuracy, metric_names::accuracy,
                                      CorrelationGrouping::ByDataset, CorrelationMethod::Pearson);
  REQUIRE(self.size() == 2);
  for (const auto& gc : self) {
    CHECK(gc.defined);
    CHECK(gc.value == doctest::Approx(1.0));
    CHECK(gc.n_pairs == 24);  // 2 strategies x 2 folds x 6 iterations
  }

  const auto negated =
      correlate_metrics(store, metric_names::accuracy, metric_names::contradiction,
                        CorrelationGrouping::ByStrategy, CorrelationMethod::Pearson);
  REQUIRE(negated.size() == 2);
  for (const auto& gc : negated) CHECK(gc.value == doctest::Approx(-1.0));

  // monotone relation: spearman 1 even though the map is nonlinear
  const auto monotone =
      correlate_metrics(store, metric_names::accuracy, metric_names::kappa_agreement,
                        CorrelationGrouping::ByDataset, CorrelationMethod::Spearman);
  for (const auto& gc : monotone) CHECK(gc.value == doctest::Approx(1.0));

  CHECK_THROWS_AS(correlate_metrics(store, metric_names::accuracy, "exploration_gradient",
                                    CorrelationGrouping::ByDataset, CorrelationMethod::Pearson),
                  StoreError);
}

TEST_CASE("correlate_metrics: constant groups are undefined, not fatal") {
  TempDir dir("corrc");
  ExperimentStore store = fixture_store(dir, 1, {"random", "margin"}, {"d1"});
  for (const auto& cell : store.manifest().cells) {
    for (int t = 0; t < 4; ++t) {
      store.append_metric(cell.id, t, metric_names::accuracy, 0.5);  // constant
      store.append_metric(cell.id, t, metric_names::contradiction, 0.1 * t);
    }
    CellStatus status = store.cell_status(cell.id);
    status.done = true;
    store.write_cell_status(cell.id, status);
  }
  const auto result =
      correlate_metrics(store, metric_names::accuracy, metric_names::contradiction,
                        CorrelationGrouping::ByDataset, CorrelationMethod::Pearson);
  REQUIRE(result.size() == 1);
  CHECK_FALSE(result[0].defined);
}

TEST_CASE("build_score_table: aggregation modes and missing-cell errors") {
  TempDir dir("score");
  ExperimentStore store = fixture_store(dir, 2, {"random", "margin"}, {"d1", "d2"});
  for (const auto& cell : store.manifest().cells) {
    const double lift = cell.strategy == "margin" ? 0.2 : 0.0;
    for (int t = 0; t < 5; ++t) {
      store.append_metric(cell.id, t, metric_names::accuracy, 0.5 + lift + 0.01 * t);
    }
    CellStatus status = store.cell_status(cell.id);
    status.done = true;
    store.write_cell_status(cell.id, status);
  }

  const ScoreTable by_dataset = build_score_table(store, "aulc", false);
  CHECK(by_dataset.row_names == std::vector<std::string>{"d1", "d2"});
  CHECK(by_dataset.col_names == std::vector<std::string>{"random", "margin"});
  CHECK(by_dataset.values.at(0, 1) == doctest::Approx(by_dataset.values.at(0, 0) + 0.2));

  const ScoreTable by_fold = build_score_table(store, "aulc", true);
  CHECK(by_fold.row_names.size() == 4);

  CHECK_THROWS_AS(build_score_table(store, "nonsense", false), std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_score_table(store, "exploration-auc", false),
                       doctest::Contains("unavailable"), StoreError);
}
