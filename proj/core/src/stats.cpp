#include "alkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "alkit/store.hpp"

namespace alkit {
namespace {

// regularized lower incomplete gamma P(a, x), series expansion (x < a + 1)
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// regularized upper incomplete gamma Q(a, x), continued fraction (x >= a + 1)
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

// incomplete beta continued fraction (Lentz)
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h;
}

// regularized incomplete beta I_x(a, b)
double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Nemenyi critical values: studentized range over sqrt(2), infinite df, for
// k = 2..20 (Demsar's tabulation).
constexpr double kNemenyiQ05[] = {
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030879,
    3.101730, 3.163684, 3.218654, 3.268004, 3.312739, 3.353618, 3.391230,
    3.426041, 3.458425, 3.488685, 3.517073, 3.543799};
constexpr double kNemenyiQ10[] = {
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884,
    2.855362, 2.920727, 2.977768, 3.029694, 3.076733, 3.119693, 3.159199,
    3.195743, 3.229723, 3.261461, 3.291224, 3.319233};

std::vector<double> ranks_with_ties(std::span<const double> values, bool descending) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t s = i; s <= j; ++s) ranks[order[s]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void ScoreTable::validate() const {
  if (values.rows() != row_names.size() || values.cols() != col_names.size()) {
    throw std::invalid_argument("ScoreTable: shape does not match names");
  }
  if (row_names.size() < 2) throw std::invalid_argument("ScoreTable: need >= 2 tasks");
  if (col_names.size() < 2) throw std::invalid_argument("ScoreTable: need >= 2 strategies");
  for (double v : values.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("ScoreTable: missing or non-finite cell");
  }
}

std::vector<double> average_ranks_descending(std::span<const double> values) {
  return ranks_with_ties(values, true);
}

std::vector<double> average_ranks_ascending(std::span<const double> values) {
  return ranks_with_ties(values, false);
}

double chi2_sf(double x, double df) {
  if (df <= 0.0) throw std::invalid_argument("chi2_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double f_sf(double x, double d1, double d2) {
  if (d1 <= 0.0 || d2 <= 0.0) throw std::invalid_argument("f_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return betai(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
}

FriedmanResult friedman_test(const ScoreTable& table) {
  table.validate();
  const std::size_t n = table.values.rows();
  const std::size_t k = table.values.cols();

  FriedmanResult result;
  result.mean_ranks.assign(k, 0.0);
  double tie_term = 0.0;  // sum over rows of sum(t^3 - t) for tie groups
  for (std::size_t i = 0; i < n; ++i) {
    const auto ranks = average_ranks_descending(table.values.row(i));
    for (std::size_t j = 0; j < k; ++j) result.mean_ranks[j] += ranks[j];

    std::vector<double> sorted(table.values.row(i).begin(), table.values.row(i).end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t s = 0;
    while (s < k) {
      std::size_t e = s;
      while (e + 1 < k && sorted[e + 1] == sorted[s]) ++e;
      const auto run = static_cast<double>(e - s + 1);
      tie_term += run * run * run - run;
      s = e + 1;
    }
  }
  for (double& r : result.mean_ranks) r /= static_cast<double>(n);

  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  double ssq = 0.0;
  for (double r : result.mean_ranks) {
    const double d = r - 0.5 * (kd + 1.0);
    ssq += d * d;
  }
  const double uncorrected = 12.0 * nd / (kd * (kd + 1.0)) * ssq;
  const double correction = 1.0 - tie_term / (nd * kd * (kd * kd - 1.0));
  if (correction <= 0.0) {
    // every row fully tied: no evidence of any difference
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  result.statistic = uncorrected / correction;
  result.p_value = chi2_sf(result.statistic, kd - 1.0);
  return result;
}

double iman_davenport_p(double friedman_statistic, std::size_t n_tasks, std::size_t k) {
  const double nd = static_cast<double>(n_tasks);
  const double kd = static_cast<double>(k);
  const double denom = nd * (kd - 1.0) - friedman_statistic;
  if (denom <= 0.0) return 0.0;
  const double f = (nd - 1.0) * friedman_statistic / denom;
  return f_sf(f, kd - 1.0, (kd - 1.0) * (nd - 1.0));
}

double nemenyi_cd(std::size_t k, std::size_t n_tasks, double alpha) {
  if (k < 2 || k > 20) throw std::invalid_argument("nemenyi_cd: k must be in [2, 20]");
  if (n_tasks < 1) throw std::invalid_argument("nemenyi_cd: need at least 1 task");
  const double* table;
  if (alpha == 0.05) {
    table = kNemenyiQ05;
  } else if (alpha == 0.10) {
    table = kNemenyiQ10;
  } else {
    throw std::invalid_argument("nemenyi_cd: alpha must be 0.05 or 0.10");
  }
  const double q = table[k - 2];
  const double kd = static_cast<double>(k);
  return q * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n_tasks)));
}

RankingReport rank_strategies(const ScoreTable& table, double alpha) {
  const FriedmanResult friedman = friedman_test(table);
  RankingReport report;
  report.strategies = table.col_names;
  report.mean_ranks = friedman.mean_ranks;
  report.statistic = friedman.statistic;
  report.p_value = friedman.p_value;
  report.alpha = alpha;
  report.null_rejected = friedman.p_value <= alpha;
  const std::size_t k = table.col_names.size();
  report.significant.assign(k, std::vector<bool>(k, false));
  if (report.null_rejected) {
    report.critical_distance = nemenyi_cd(k, table.row_names.size(), alpha);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b &&
            std::abs(report.mean_ranks[a] - report.mean_ranks[b]) >= report.critical_distance) {
          report.significant[a][b] = true;
        }
      }
    }
  }
  return report;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("pearson: correlation undefined for a constant series");
  }
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const auto rx = average_ranks_ascending(x);
  const auto ry = average_ranks_ascending(y);
  return pearson(rx, ry);
}

CorrelationMethod correlation_method_from_string(const std::string& name) {
  if (name == "pearson") return CorrelationMethod::Pearson;
  if (name == "spearman") return CorrelationMethod::Spearman;
  throw std::invalid_argument("unknown correlation method: '" + name + "'");
}

CorrelationGrouping correlation_grouping_from_string(const std::string& name) {
  if (name == "by-dataset") return CorrelationGrouping::ByDataset;
  if (name == "by-strategy") return CorrelationGrouping::ByStrategy;
  throw std::invalid_argument("unknown grouping: '" + name + "'");
}

std::vector<GroupCorrelation> correlate_metrics(const ExperimentStore& store,
                                                const std::string& metric_a,
                                                const std::string& metric_b,
                                                CorrelationGrouping grouping,
                                                CorrelationMethod method) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<std::string> group_order;
  bool any_a = false, any_b = false;

  for (const auto& cell : store.manifest().cells) {
    if (!store.cell_status(cell.id).done) continue;
    const MetricSeries a = store.read_metric_series(cell.id, metric_a);
    const MetricSeries b = store.read_metric_series(cell.id, metric_b);
    any_a = any_a || !a.values.empty();
    any_b = any_b || !b.values.empty();

    const std::string key =
        grouping == CorrelationGrouping::ByDataset ? cell.dataset : cell.strategy;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) group_order.push_back(key);

    // align on the iterations where both series are defined
    const int lo = std::max(a.first_iteration, b.first_iteration);
    const int hi = std::min(a.first_iteration + static_cast<int>(a.values.size()),
                            b.first_iteration + static_cast<int>(b.values.size()));
    for (int t = lo; t < hi; ++t) {
      it->second.first.push_back(a.values[static_cast<std::size_t>(t - a.first_iteration)]);
      it->second.second.push_back(b.values[static_cast<std::size_t>(t - b.first_iteration)]);
    }
  }

  if (groups.empty()) throw StoreError("no completed cells in store");
  if (!any_a) throw StoreError("metric series missing from store: " + metric_a);
  if (!any_b) throw StoreError("metric series missing from store: " + metric_b);

  std::vector<GroupCorrelation> out;
  for (const auto& key : group_order) {
    const auto& [xs, ys] = groups.at(key);
    GroupCorrelation gc;
    gc.group = key;
    gc.n_pairs = xs.size();
    try {
      gc.value = method == CorrelationMethod::Pearson ? pearson(xs, ys) : spearman(xs, ys);
      gc.defined = true;
    } catch (const std::invalid_argument&) {
      gc.value = std::numeric_limits<double>::quiet_NaN();
      gc.defined = false;  // constant series or too few pairs
    }
    out.push_back(std::move(gc));
  }
  return out;
}

ScoreTable build_score_table(const ExperimentStore& store, const std::string& ranking_metric,
                             bool per_fold) {
  std::string source;
  if (ranking_metric == "aulc") {
    source = metric_names::accuracy;
  } else if (ranking_metric == "exploration-auc") {
    source = metric_names::exploration_gradient;
  } else if (ranking_metric == "reverse-batch-accuracy-auc") {
    source = metric_names::reverse_batch_accuracy;
  } else {
    throw std::invalid_argument("unknown ranking metric: '" + ranking_metric +
                                "' (expected aulc, exploration-auc, or reverse-batch-accuracy-auc)");
  }

  // first-appearance order for tasks and strategies
  std::vector<std::string> datasets, strategies;
  for (const auto& cell : store.manifest().cells) {
    if (std::find(datasets.begin(), datasets.end(), cell.dataset) == datasets.end()) {
      datasets.push_back(cell.dataset);
    }
    if (std::find(strategies.begin(), strategies.end(), cell.strategy) == strategies.end()) {
      strategies.push_back(cell.strategy);
    }
  }
  if (strategies.size() < 2) throw StoreError("ranking needs >= 2 strategies in the store");

  std::map<std::pair<std::string, std::string>, std::vector<double>> aucs;  // (task, strategy)
  std::vector<std::string> tasks;
  for (const auto& cell : store.manifest().cells) {
    if (!store.cell_status(cell.id).done) {
      throw StoreError("incomplete store: cell " + cell.id + " is not done");
    }
    const MetricSeries series = store.read_metric_series(cell.id, source);
    if (series.values.size() < 2) {
      throw StoreError("metric series '" + source + "' unavailable for cell " + cell.id);
    }
    const std::string task =
        per_fold ? cell.dataset + "#f" + std::to_string(cell.fold) : cell.dataset;
    if (std::find(tasks.begin(), tasks.end(), task) == tasks.end()) tasks.push_back(task);
    aucs[{task, cell.strategy}].push_back(aulc(series.values));
  }

  ScoreTable table;
  table.row_names = tasks;
  table.col_names = strategies;
  table.values = Matrix(tasks.size(), strategies.size(),
                        std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < tasks.size(); ++r) {
    for (std::size_t c = 0; c < strategies.size(); ++c) {
      auto it = aucs.find({tasks[r], strategies[c]});
      if (it == aucs.end() || it->second.empty()) {
        throw StoreError("missing cell for task " + tasks[r] + ", strategy " + strategies[c]);
      }
      double mean = 0.0;
      for (double v : it->second) mean += v;
      table.values.at(r, c) = mean / static_cast<double>(it->second.size());
    }
  }
  table.validate();
  return table;
}

}  // namespace alkit
