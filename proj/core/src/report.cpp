#include "alkit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "alkit/metrics.hpp"

namespace alkit {
namespace {

constexpr const char* kCurveMetrics[] = {
    metric_names::accuracy,           metric_names::contradiction,
    metric_names::exploration_gradient, metric_names::nn_distance_sum,
    metric_names::reverse_batch_accuracy, metric_names::kappa_agreement,
};

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::logic_error("format_double: buffer too small");
  return std::string(buf, ptr);
}

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile_linear: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile_linear: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

void write_ranking_csv(const RankingReport& report, std::ostream& out) {
  out << "strategy,mean_rank\n";
  std::vector<std::size_t> order(report.strategies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_ranks[a] < report.mean_ranks[b];
  });
  for (std::size_t i : order) {
    out << report.strategies[i] << ',' << format_double(report.mean_ranks[i]) << '\n';
  }
}

void write_ranking_text(const RankingReport& report, const std::string& metric,
                        std::ostream& out) {
  out << "strategy ranking (" << metric << ", rank 1 = best)\n";
  out << "friedman statistic: " << format_double(report.statistic) << '\n';
  out << "p-value: " << format_double(report.p_value) << '\n';
  out << "alpha: " << format_double(report.alpha) << '\n';
  if (!report.null_rejected) {
    out << "null not rejected: no significant difference among strategies\n";
  } else {
    out << "null rejected\n";
    out << "nemenyi critical distance: " << format_double(report.critical_distance) << '\n';
  }

  std::vector<std::size_t> order(report.strategies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_ranks[a] < report.mean_ranks[b];
  });
  out << "mean ranks:\n";
  for (std::size_t i : order) {
    out << "  " << report.strategies[i] << ": " << format_double(report.mean_ranks[i]) << '\n';
  }
  if (report.null_rejected) {
    out << "significant pairs (mean-rank gap >= CD):\n";
    bool any = false;
    for (std::size_t a = 0; a < report.strategies.size(); ++a) {
      for (std::size_t b = a + 1; b < report.strategies.size(); ++b) {
        if (report.significant[a][b]) {
          out << "  " << report.strategies[a] << " vs " << report.strategies[b] << '\n';
          any = true;
        }
      }
    }
    if (!any) out << "  (none)\n";
  }
}

void write_correlations_csv(const std::vector<GroupCorrelation>& correlations,
                            const std::string& metric_a, const std::string& metric_b,
                            const std::string& method, const std::string& grouping,
                            std::ostream& out) {
  out << "group,metric_a,metric_b,method,grouping,n_pairs,correlation\n";
  for (const auto& gc : correlations) {
    out << gc.group << ',' << metric_a << ',' << metric_b << ',' << method << ',' << grouping
        << ',' << gc.n_pairs << ',' << (gc.defined ? format_double(gc.value) : "undefined")
        << '\n';
  }
}

void export_curves_csv(const ExperimentStore& store, std::ostream& out) {
  const auto& cells = store.manifest().cells;
  if (cells.empty()) throw StoreError("empty store");

  // fold values per (dataset, strategy, metric, iteration)
  struct Key {
    std::string dataset, strategy, metric;
    int iteration;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<double>> fold_values;
  for (const auto& cell : cells) {
    for (const char* metric : kCurveMetrics) {
      const MetricSeries series = store.read_metric_series(cell.id, metric);
      for (std::size_t i = 0; i < series.values.size(); ++i) {
        fold_values[{cell.dataset, cell.strategy, metric,
                     series.first_iteration + static_cast<int>(i)}]
            .push_back(series.values[i]);
      }
    }
  }

  out << "dataset,strategy,fold,iteration,metric,value,mean,q10,q90\n";
  for (const auto& cell : cells) {
    for (const char* metric : kCurveMetrics) {
      const MetricSeries series = store.read_metric_series(cell.id, metric);
      for (std::size_t i = 0; i < series.values.size(); ++i) {
        const int t = series.first_iteration + static_cast<int>(i);
        const auto& values = fold_values.at({cell.dataset, cell.strategy, metric, t});
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        out << cell.dataset << ',' << cell.strategy << ',' << cell.fold << ',' << t << ','
            << metric << ',' << format_double(series.values[i]) << ',' << format_double(mean)
            << ',' << format_double(quantile_linear(values, 0.1)) << ','
            << format_double(quantile_linear(values, 0.9)) << '\n';
      }
    }
  }
}

void export_batches_csv(const ExperimentStore& store, std::ostream& out) {
  if (store.manifest().cells.empty()) throw StoreError("empty store");
  out << "cell,dataset,strategy,fold,iteration,position,sample_index\n";
  for (const auto& cell : store.manifest().cells) {
    for (const auto& rec : store.read_records(cell.id)) {
      for (std::size_t pos = 0; pos < rec.batch.size(); ++pos) {
        out << cell.id << ',' << cell.dataset << ',' << cell.strategy << ',' << cell.fold << ','
            << rec.iteration << ',' << pos << ',' << rec.batch[pos] << '\n';
      }
    }
  }
}

void export_log_csv(const ExperimentStore& store, std::ostream& out) {
  if (store.manifest().cells.empty()) throw StoreError("empty store");
  out << "cell,iteration,metric,value,seq\n";
  for (const auto& cell : store.manifest().cells) {
    for (const auto& row : store.read_metric_log(cell.id)) {
      out << row.cell << ',' << row.iteration << ',' << row.metric << ','
          << format_double(row.value) << ',' << row.seq << '\n';
    }
  }
}

}  // namespace alkit
