#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "alkit/matrix.hpp"

namespace alkit {

class ExperimentStore;

// Rows are tasks (datasets, or dataset/fold pairs in fold-level mode),
// columns are strategies, values the score being ranked (higher = better).
struct ScoreTable {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  Matrix values;

  void validate() const;
};

// Average ranks of one row of scores; rank 1 = best = highest value, ties get
// the average of the spanned ranks.
std::vector<double> average_ranks_descending(std::span<const double> values);

// Ascending variant used for rank correlations.
std::vector<double> average_ranks_ascending(std::span<const double> values);

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> mean_ranks;
};

// Chi-square-approximate Friedman test with average-rank tie handling and the
// standard tie correction. A fully tied table yields statistic 0, p 1.
FriedmanResult friedman_test(const ScoreTable& table);

// Iman-Davenport F-distribution refinement of the Friedman p-value.
double iman_davenport_p(double friedman_statistic, std::size_t n_tasks, std::size_t k);

// Nemenyi critical distance q_alpha(k) * sqrt(k (k+1) / (6 N)) with q from
// the embedded studentized-range-based tabulation, k in [2, 20], alpha in
// {0.05, 0.10}.
double nemenyi_cd(std::size_t k, std::size_t n_tasks, double alpha);

struct RankingReport {
  std::vector<std::string> strategies;
  std::vector<double> mean_ranks;
  double statistic = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool null_rejected = false;
  double critical_distance = 0.0;                // 0 when null not rejected
  std::vector<std::vector<bool>> significant;    // pairwise |mean rank gap| >= CD
};

// Friedman test, then Nemenyi pairwise significance when the null is
// rejected at alpha. Without rejection the report omits pairwise claims.
RankingReport rank_strategies(const ScoreTable& table, double alpha);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> x, std::span<const double> y);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, double df);

// Upper tail of the F distribution (used by the Iman-Davenport variant).
double f_sf(double x, double d1, double d2);

enum class CorrelationMethod { Pearson, Spearman };
enum class CorrelationGrouping { ByDataset, ByStrategy };

CorrelationMethod correlation_method_from_string(const std::string& name);
CorrelationGrouping correlation_grouping_from_string(const std::string& name);

struct GroupCorrelation {
  std::string group;
  double value = 0.0;
  std::size_t n_pairs = 0;
  bool defined = false;  // false: constant series or too few pairs in this group
};

// Correlation of two per-iteration metric series over completed cells,
// concatenating (fold, iteration) pairs within each group.
std::vector<GroupCorrelation> correlate_metrics(const ExperimentStore& store,
                                                const std::string& metric_a,
                                                const std::string& metric_b,
                                                CorrelationGrouping grouping,
                                                CorrelationMethod method);

// Score table for ranking: one AUC value per (task, strategy) computed from
// the metrics log. `ranking_metric` is one of aulc (area under the accuracy
// curve), exploration-auc, reverse-batch-accuracy-auc. In per_fold mode rows
// are dataset/fold pairs; otherwise fold AUCs are averaged per dataset.
ScoreTable build_score_table(const ExperimentStore& store, const std::string& ranking_metric,
                             bool per_fold);

}  // namespace alkit
