// alkit command line: runs experiment suites against a store and analyzes
// the results (rank / correlate / replay / export).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "alkit/config.hpp"
#include "alkit/engine.hpp"
#include "alkit/report.hpp"
#include "alkit/stats.hpp"
#include "alkit/store.hpp"

namespace {

namespace fs = std::filesystem;
using namespace alkit;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfigError = 2;

struct LoadedSuite {
  SuiteConfig suite;
  std::map<std::string, Dataset> datasets;
  std::map<std::string, SplitPlan> plans;
  std::map<std::string, std::uint64_t> fingerprints;
};

LoadedSuite load_suite(const SuiteConfig& suite) {
  LoadedSuite loaded;
  loaded.suite = suite;
  for (const auto& entry : suite.datasets) {
    Dataset dataset = load_dataset(entry);
    loaded.fingerprints[entry.id] = dataset_fingerprint(dataset);
    loaded.plans[entry.id] = make_splits(dataset, suite.split, suite.seed);
    loaded.datasets[entry.id] = std::move(dataset);
  }
  return loaded;
}

std::vector<CellInfo> enumerate_cells(const LoadedSuite& loaded) {
  std::vector<CellInfo> cells;
  for (const auto& entry : loaded.suite.datasets) {
    const auto folds = static_cast<int>(loaded.plans.at(entry.id).folds.size());
    for (const auto& strategy : loaded.suite.strategies) {
      for (int fold = 0; fold < folds; ++fold) {
        cells.push_back({make_cell_id(entry.id, strategy.kind, fold), entry.id,
                         to_string(strategy.kind), fold});
      }
    }
  }
  return cells;
}

std::vector<CellJob> build_jobs(const LoadedSuite& loaded) {
  std::vector<CellJob> jobs;
  for (const auto& entry : loaded.suite.datasets) {
    const SplitPlan& plan = loaded.plans.at(entry.id);
    for (const auto& strategy : loaded.suite.strategies) {
      for (std::size_t fold = 0; fold < plan.folds.size(); ++fold) {
        CellJob job;
        job.cell_id = make_cell_id(entry.id, strategy.kind, static_cast<int>(fold));
        job.config = cell_config(loaded.suite, entry, strategy);
        job.dataset = &loaded.datasets.at(entry.id);
        job.fold = &plan.folds[fold];
        job.fold_index = static_cast<int>(fold);
        jobs.push_back(std::move(job));
      }
    }
  }
  return jobs;
}

void check_fingerprints(const ExperimentStore& store, const LoadedSuite& loaded) {
  for (const auto& [id, fingerprint] : loaded.fingerprints) {
    auto it = store.manifest().dataset_fingerprints.find(id);
    if (it == store.manifest().dataset_fingerprints.end() || it->second != fingerprint) {
      throw StoreError("dataset drift: fingerprint of '" + id +
                       "' does not match the one recorded in the store");
    }
  }
}

int run_jobs(ExperimentStore& store, const std::vector<CellJob>& jobs, int parallelism,
             int max_steps) {
  std::mutex print_mutex;
  const MatrixOutcome outcome =
      run_matrix(store, jobs, parallelism, max_steps, [&](const std::string& line) {
        std::lock_guard guard(print_mutex);
        std::cout << line << '\n';
      });
  std::cout << outcome.completed << " completed, " << outcome.cached << " cached, "
            << outcome.paused << " paused, " << outcome.failed << " failed\n";
  if (outcome.cached == jobs.size()) std::cout << "all cells cached\n";
  return outcome.failed == 0 ? kExitOk : kExitFailure;
}

int cmd_run(const std::string& config_path, const std::string& store_path, int jobs,
            int max_steps) {
  const SuiteConfig suite = parse_suite_config(config_path);
  const LoadedSuite loaded = load_suite(suite);

  ExperimentStore store = [&]() {
    if (ExperimentStore::exists(store_path)) {
      ExperimentStore existing = ExperimentStore::open(store_path);
      if (existing.manifest().config_hash != config_hash(suite)) {
        throw StoreError("config drift: store at " + store_path +
                         " was created from a different config");
      }
      check_fingerprints(existing, loaded);
      return existing;
    }
    StoreManifest manifest;
    manifest.config_json = canonical_config_json(suite);
    manifest.config_hash = config_hash(suite);
    manifest.dataset_fingerprints = loaded.fingerprints;
    manifest.cells = enumerate_cells(loaded);
    return ExperimentStore::create(store_path, std::move(manifest));
  }();

  return run_jobs(store, build_jobs(loaded), jobs, max_steps);
}

int cmd_resume(const std::string& store_path, int jobs, int max_steps) {
  ExperimentStore store = ExperimentStore::open(store_path);
  const SuiteConfig suite =
      parse_suite_config_text(store.manifest().config_json, "store config");
  const LoadedSuite loaded = load_suite(suite);
  check_fingerprints(store, loaded);
  return run_jobs(store, build_jobs(loaded), jobs, max_steps);
}

int cmd_replay(const std::string& store_path, const std::string& metric) {
  ExperimentStore store = ExperimentStore::open(store_path);
  const SuiteConfig suite =
      parse_suite_config_text(store.manifest().config_json, "store config");
  const LoadedSuite loaded = load_suite(suite);
  check_fingerprints(store, loaded);

  std::map<std::string, const DatasetEntry*> entries;
  for (const auto& entry : suite.datasets) entries[entry.id] = &entry;
  std::map<std::string, const StrategySpec*> strategies;
  for (const auto& strategy : suite.strategies) strategies[to_string(strategy.kind)] = &strategy;

  bool any = false;
  for (const auto& cell : store.manifest().cells) {
    if (!store.cell_status(cell.id).done) continue;
    any = true;
    const ExperimentConfig config =
        cell_config(suite, *entries.at(cell.dataset), *strategies.at(cell.strategy));
    const MetricSeries series = replay_metric(store, cell.id, metric,
                                              loaded.datasets.at(cell.dataset), config, cell.fold);
    std::cout << cell.id << ": " << series.values.size() << " values from t="
              << series.first_iteration << '\n';
  }
  if (!any) throw StoreError("no completed cells to replay");
  return kExitOk;
}

int cmd_rank(const std::string& store_path, const std::string& metric, double alpha, bool per_fold,
             bool iman_davenport, std::string out_dir) {
  ExperimentStore store = ExperimentStore::open(store_path);
  const ScoreTable table = build_score_table(store, metric, per_fold);
  RankingReport report = rank_strategies(table, alpha);
  if (iman_davenport) {
    report.p_value = iman_davenport_p(report.statistic, table.row_names.size(),
                                      table.col_names.size());
    report.null_rejected = report.p_value <= alpha;
    if (!report.null_rejected) {
      report.critical_distance = 0.0;
      for (auto& row : report.significant) row.assign(row.size(), false);
    }
  }

  if (out_dir.empty()) out_dir = (fs::path(store_path) / "reports").string();
  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / ("rank_" + metric + ".csv");
  const fs::path txt_path = fs::path(out_dir) / ("rank_" + metric + ".txt");
  {
    std::ofstream csv(csv_path, std::ios::binary);
    write_ranking_csv(report, csv);
  }
  {
    std::ofstream txt(txt_path, std::ios::binary);
    write_ranking_text(report, metric, txt);
  }
  write_ranking_text(report, metric, std::cout);
  std::cout << "wrote " << csv_path.string() << " and " << txt_path.string() << '\n';
  return kExitOk;
}

int cmd_correlate(const std::string& store_path, const std::string& metric_a,
                  const std::string& metric_b, const std::string& method,
                  const std::string& grouping, const std::string& out_file) {
  ExperimentStore store = ExperimentStore::open(store_path);
  const auto correlations =
      correlate_metrics(store, metric_a, metric_b, correlation_grouping_from_string(grouping),
                        correlation_method_from_string(method));
  write_correlations_csv(correlations, metric_a, metric_b, method, grouping, std::cout);
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::binary);
    write_correlations_csv(correlations, metric_a, metric_b, method, grouping, out);
  }
  return kExitOk;
}

int cmd_export(const std::string& store_path, const std::string& what,
               const std::string& out_dir) {
  ExperimentStore store = ExperimentStore::open(store_path);
  fs::create_directories(out_dir);
  const fs::path out_path = fs::path(out_dir) / (what + ".csv");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw StoreError("cannot write " + out_path.string());
  if (what == "curves") {
    export_curves_csv(store, out);
  } else if (what == "batches") {
    export_batches_csv(store, out);
  } else {
    export_log_csv(store, out);
  }
  std::cout << "wrote " << out_path.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pool-based active learning experiments with actionable metrics"};
  app.require_subcommand(1);

  std::string config_path, store_path, metric, metric_a, metric_b, out;
  std::string method = "spearman";
  std::string grouping = "by-dataset";
  std::string what;
  double alpha = 0.05;
  int jobs = 1;
  int max_steps = -1;
  bool per_fold = false;
  bool iman_davenport = false;

  auto add_store = [&](CLI::App* cmd) {
    cmd->add_option("-s,--store", store_path, "experiment store directory")
        ->envname("ALKIT_STORE")
        ->required();
  };
  auto add_jobs = [&](CLI::App* cmd) {
    cmd->add_option("-j,--jobs", jobs, "parallel cells")->envname("ALKIT_JOBS");
  };

  CLI::App* run = app.add_subcommand("run", "run every cell of a config against a store");
  run->add_option("-c,--config", config_path, "experiment config file")->required();
  add_store(run);
  add_jobs(run);
  run->add_option("--max-steps", max_steps, "pause cells after this iteration (resumable)");

  CLI::App* resume = app.add_subcommand("resume", "continue incomplete cells of a store");
  add_store(resume);
  add_jobs(resume);
  resume->add_option("--max-steps", max_steps, "pause cells after this iteration (resumable)");

  CLI::App* replay = app.add_subcommand("replay", "recompute a metric from stored snapshots");
  add_store(replay);
  replay->add_option("--metric", metric, "metric name")->required();

  CLI::App* rank = app.add_subcommand("rank", "Friedman/Nemenyi strategy ranking");
  add_store(rank);
  rank->add_option("--metric", metric, "aulc | exploration-auc | reverse-batch-accuracy-auc")
      ->required();
  rank->add_option("--alpha", alpha, "significance level (0.05 or 0.10)");
  rank->add_flag("--per-fold", per_fold, "rank at fold level instead of dataset-mean level");
  rank->add_flag("--iman-davenport", iman_davenport, "use the F-distribution p-value variant");
  rank->add_option("-o,--out", out, "report directory (default: STORE/reports)");

  CLI::App* correlate = app.add_subcommand("correlate", "correlate two metric series");
  add_store(correlate);
  correlate->add_option("--a", metric_a, "first metric")->required();
  correlate->add_option("--b", metric_b, "second metric")->required();
  correlate->add_option("--method", method, "pearson | spearman");
  correlate->add_option("--group", grouping, "by-dataset | by-strategy");
  correlate->add_option("-o,--out", out, "also write the CSV here");

  CLI::App* exp = app.add_subcommand("export", "export store contents as CSV");
  add_store(exp);
  exp->add_option("--what", what, "curves | batches | log")
      ->required()
      ->check(CLI::IsMember({"curves", "batches", "log"}));
  exp->add_option("-o,--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, store_path, jobs, max_steps);
    if (resume->parsed()) return cmd_resume(store_path, jobs, max_steps);
    if (replay->parsed()) return cmd_replay(store_path, metric);
    if (rank->parsed()) return cmd_rank(store_path, metric, alpha, per_fold, iman_davenport, out);
    if (correlate->parsed()) {
      return cmd_correlate(store_path, metric_a, metric_b, method, grouping, out);
    }
    if (exp->parsed()) return cmd_export(store_path, what, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
