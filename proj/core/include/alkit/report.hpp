#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "alkit/stats.hpp"
#include "alkit/store.hpp"

namespace alkit {

// Canonical double formatting (shortest round-trip) so report reruns are
// byte-identical.
std::string format_double(double value);

// Linear interpolation between order statistics, q in [0, 1].
double quantile_linear(std::vector<double> values, double q);

void write_ranking_csv(const RankingReport& report, std::ostream& out);
void write_ranking_text(const RankingReport& report, const std::string& metric, std::ostream& out);

void write_correlations_csv(const std::vector<GroupCorrelation>& correlations,
                            const std::string& metric_a, const std::string& metric_b,
                            const std::string& method, const std::string& grouping,
                            std::ostream& out);

// Long-format curve export: one row per (cell, metric, iteration) with the
// per-(dataset, strategy, iteration) mean and 10th/90th quantile over folds.
void export_curves_csv(const ExperimentStore& store, std::ostream& out);
void export_batches_csv(const ExperimentStore& store, std::ostream& out);
void export_log_csv(const ExperimentStore& store, std::ostream& out);

}  // namespace alkit
