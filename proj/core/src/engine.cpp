#include "alkit/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "alkit/hash.hpp"
#include "alkit/metrics.hpp"

namespace alkit {
namespace {

bool metric_requested(const ExperimentConfig& config, const char* name) {
  if (config.metrics.empty()) return true;
  return std::find(config.metrics.begin(), config.metrics.end(), name) != config.metrics.end();
}

std::vector<int> gather_labels(const Dataset& dataset, std::span<const std::int64_t> indices) {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[i] = dataset.labels[static_cast<std::size_t>(indices[i])];
  }
  return out;
}

std::uint64_t predictions_fingerprint(const std::vector<int>& predictions) {
  return fnv1a64_values<int>(predictions);
}

// Evenly spaced positions (selection order) of the batch samples diverted to
// the incremental test set: ceil(fraction * batch) samples at stride
// batch/count.
std::vector<std::int64_t> incremental_holdout(std::span<const std::int64_t> batch,
                                              double fraction) {
  const auto n = batch.size();
  const auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)) + 1e-12);
  std::vector<std::int64_t> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count && j < n; ++j) {
    out.push_back(batch[(j * n) / count]);
  }
  return out;
}

struct LoopSink {
  std::function<void(int t, const EngineState&, const IterationRecord&, double wall_ms)> commit;
};

// The pool-based AL loop. Iteration 0 fits the initial model and records
// baseline metrics; each later iteration queries, annotates, refits, and
// evaluates. Resumable from any committed EngineState.
std::vector<IterationRecord> run_loop(const ExperimentConfig& config, const Dataset& dataset,
                                      const Fold& fold, int fold_index, const EngineState* resume,
                                      int max_steps, const LoopSink* sink) {
  config.validate();
  dataset.validate();
  const auto fold_u = static_cast<std::uint64_t>(fold_index);
  const bool incremental = config.test_mode == TestMode::Incremental;

  std::vector<IterationRecord> records;

  PoolState pool;
  std::vector<std::int64_t> test_indices;
  Model model;
  std::vector<int> test_pred;
  int start_t = 0;

  auto test_features = [&]() {
    return dataset.features.gather_rows(std::span<const std::int64_t>(test_indices));
  };

  if (resume != nullptr) {
    pool = resume->pool;
    test_indices = resume->test_indices;
    model = resume->model;
    test_pred = resume->test_predictions;
    start_t = resume->iteration + 1;
  }

  for (int t = start_t; t <= config.steps; ++t) {
    if (max_steps >= 0 && t > max_steps) break;
    const auto tick = std::chrono::steady_clock::now();
    const auto t_u = static_cast<std::uint64_t>(t);

    IterationRecord rec;
    rec.iteration = t;
    std::vector<std::int64_t> labeled_prev;

    if (t == 0) {
      pool = init_pool(dataset, fold.train, config.start_size,
                       experiment_seed(config.seed, fold_u, 0, seed_purpose::init_pool));
      test_indices = incremental ? std::vector<std::int64_t>{} : fold.test;
    } else {
      if (pool.unlabeled().empty()) break;  // exhausted before this step

      rec.batch = select_batch(config.strategy, &model, dataset, pool, config.batch_size,
                               experiment_seed(config.seed, fold_u, t_u, seed_purpose::select));

      // batch metrics against h_{t-1} and the labeled set before annotation
      const Matrix batch_features =
          dataset.features.gather_rows(std::span<const std::int64_t>(rec.batch));
      if (metric_requested(config, metric_names::kappa_agreement)) {
        const Matrix labeled_features =
            dataset.features.gather_rows(std::span<const std::int64_t>(pool.labeled()));
        rec.metrics[metric_names::kappa_agreement] = kappa_agreement(
            model, labeled_features, gather_labels(dataset, pool.labeled()), batch_features);
      }
      if (metric_requested(config, metric_names::reverse_batch_accuracy) && !test_indices.empty()) {
        rec.metrics[metric_names::reverse_batch_accuracy] = reverse_batch_accuracy(
            test_features(), gather_labels(dataset, test_indices), config.classifier,
            dataset.n_classes, batch_features, gather_labels(dataset, rec.batch),
            experiment_seed(config.seed, fold_u, t_u, seed_purpose::reverse_fit));
      }

      labeled_prev = pool.labeled();

      // annotate: in incremental mode part of the batch feeds the test set
      std::vector<std::int64_t> to_label(rec.batch.begin(), rec.batch.end());
      if (incremental) {
        const auto diverted = incremental_holdout(rec.batch, config.holdout_fraction);
        pool.discard_unlabeled(diverted);
        test_indices.insert(test_indices.end(), diverted.begin(), diverted.end());
        std::sort(test_indices.begin(), test_indices.end());
        std::erase_if(to_label, [&](std::int64_t idx) {
          return std::find(diverted.begin(), diverted.end(), idx) != diverted.end();
        });
      }
      pool.annotate(to_label);
    }

    // refit from scratch
    const Model prev_model = std::exchange(
        model, fit(config.classifier,
                   dataset.features.gather_rows(std::span<const std::int64_t>(pool.labeled())),
                   gather_labels(dataset, pool.labeled()), dataset.n_classes,
                   experiment_seed(config.seed, fold_u, t_u, seed_purpose::fit)));

    const Matrix test_x = test_features();
    std::vector<int> prev_pred;
    if (t > 0) {
      // fixed mode: the prior predictions are already on the evaluation set;
      // incremental mode: the test set grew, so h_{t-1} is re-applied to it
      prev_pred = incremental && !test_indices.empty() ? prev_model.predict(test_x)
                                                       : std::move(test_pred);
    }
    test_pred = test_indices.empty() ? std::vector<int>{} : model.predict(test_x);

    if (!test_indices.empty()) {
      if (metric_requested(config, metric_names::accuracy)) {
        rec.metrics[metric_names::accuracy] = accuracy(test_pred, gather_labels(dataset, test_indices));
      }
      if (metric_requested(config, metric_names::nn_distance_sum)) {
        rec.metrics[metric_names::nn_distance_sum] =
            nn_distance_sum(test_x, pool.labeled(), dataset);
      }
      if (t > 0) {
        if (metric_requested(config, metric_names::contradiction) && !prev_pred.empty()) {
          rec.metrics[metric_names::contradiction] = contradiction(prev_pred, test_pred);
        }
        if (metric_requested(config, metric_names::exploration_gradient) && !labeled_prev.empty()) {
          rec.metrics[metric_names::exploration_gradient] =
              exploration_gradient(test_x, labeled_prev, pool.labeled(), dataset);
        }
      }
    }

    rec.n_labeled = pool.labeled().size();
    rec.test_pred_fingerprint = predictions_fingerprint(test_pred);
    const bool exhausted = pool.unlabeled().empty() && t < config.steps;
    rec.truncated = (t > 0 && rec.batch.size() < config.batch_size) || exhausted;

    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick).count();
    records.push_back(rec);
    if (sink != nullptr) {
      EngineState state;
      state.iteration = t;
      state.pool = pool;
      state.test_indices = test_indices;
      state.batch = rec.batch;
      state.model = model;
      state.test_predictions = test_pred;
      sink->commit(t, state, rec, rec.wall_ms);
    }
    if (exhausted) break;
  }
  return records;
}

}  // namespace

void ExperimentConfig::validate() const {
  classifier.validate();
  strategy.validate();
  if (steps < 1) throw std::invalid_argument("ExperimentConfig: steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("ExperimentConfig: batch_size must be >= 1");
  if (start_size < 1) throw std::invalid_argument("ExperimentConfig: start_size must be >= 1");
  if (test_mode == TestMode::Incremental &&
      (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)) {
    throw std::invalid_argument("ExperimentConfig: holdout_fraction must be in (0,1)");
  }
  for (const auto& m : metrics) {
    if (!is_iteration_metric(m)) {
      throw std::invalid_argument("ExperimentConfig: unknown metric '" + m + "'");
    }
  }
}

std::vector<IterationRecord> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                            const Fold& fold, int fold_index) {
  return run_loop(config, dataset, fold, fold_index, nullptr, -1, nullptr);
}

std::vector<IterationRecord> run_cell(ExperimentStore& store, const CellJob& job, int max_steps) {
  auto lock = store.lock_cell(job.cell_id);

  CellStatus status = store.cell_status(job.cell_id);
  if (status.done) return store.read_records(job.cell_id);  // cached

  store.repair_cell(job.cell_id);
  if (status.failed) {
    status.failed = false;
    status.error.clear();
    store.write_cell_status(job.cell_id, status);
  }

  EngineState resume_state;
  const EngineState* resume = nullptr;
  std::vector<IterationRecord> records;
  if (status.iterations > 0) {
    resume_state = store.restore(job.cell_id, status.iterations - 1);
    resume = &resume_state;
    records = store.read_records(job.cell_id);
  }

  LoopSink sink;
  sink.commit = [&](int t, const EngineState& state, const IterationRecord& rec, double wall_ms) {
    store.append_record(job.cell_id, rec);
    for (const auto& [name, value] : rec.metrics) {
      store.append_metric(job.cell_id, t, name, value);
    }
    store.snapshot(job.cell_id, t, state);
    store.log_timing(job.cell_id, t, wall_ms);
  };

  auto fresh =
      run_loop(job.config, *job.dataset, *job.fold, job.fold_index, resume, max_steps, &sink);
  records.insert(records.end(), fresh.begin(), fresh.end());

  status = store.cell_status(job.cell_id);
  const bool paused = max_steps >= 0 && max_steps < job.config.steps &&
                      !(!records.empty() && records.back().truncated);
  if (!paused) {
    status.done = true;
    status.truncated = !records.empty() && records.back().truncated;
    store.write_cell_status(job.cell_id, status);
  }
  return records;
}

MatrixOutcome run_matrix(ExperimentStore& store, const std::vector<CellJob>& jobs, int parallelism,
                         int max_steps, const std::function<void(const std::string&)>& progress) {
  MatrixOutcome outcome;
  std::mutex outcome_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const CellJob& job = jobs[i];
      const bool was_done = store.cell_status(job.cell_id).done;
      try {
        run_cell(store, job, max_steps);
        const CellStatus after = store.cell_status(job.cell_id);
        std::lock_guard guard(outcome_mutex);
        if (was_done) {
          ++outcome.cached;
          if (progress) progress(job.cell_id + ": cached");
        } else if (after.done) {
          ++outcome.completed;
          if (progress) {
            progress(job.cell_id + (after.truncated ? ": completed (truncated)" : ": completed"));
          }
        } else {
          ++outcome.paused;
          if (progress) progress(job.cell_id + ": paused");
        }
      } catch (const std::exception& e) {
        CellStatus status = store.cell_status(job.cell_id);
        status.failed = true;
        status.error = e.what();
        store.write_cell_status(job.cell_id, status);
        std::lock_guard guard(outcome_mutex);
        ++outcome.failed;
        outcome.failures.emplace_back(job.cell_id, e.what());
        if (progress) progress(job.cell_id + ": FAILED (" + e.what() + ")");
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return outcome;
}

}  // namespace alkit
