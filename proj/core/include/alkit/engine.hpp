#pragma once

#include <functional>
#include <string>
#include <vector>

#include "alkit/experiment.hpp"
#include "alkit/store.hpp"

namespace alkit {

// Straight-through run of one cell with no store attached. Used by tests and
// as the reference path; run_cell produces identical records.
std::vector<IterationRecord> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                            const Fold& fold, int fold_index);

struct CellJob {
  std::string cell_id;
  ExperimentConfig config;
  const Dataset* dataset = nullptr;
  const Fold* fold = nullptr;
  int fold_index = 0;
};

// Runs (or resumes) one cell against the store: snapshots after every
// iteration, appends records and metric rows, updates the cell status.
// max_steps >= 0 pauses the cell after iteration max_steps without marking it
// done. Completed cells return their stored records untouched.
std::vector<IterationRecord> run_cell(ExperimentStore& store, const CellJob& job,
                                      int max_steps = -1);

struct MatrixOutcome {
  std::size_t completed = 0;
  std::size_t cached = 0;
  std::size_t paused = 0;
  std::size_t failed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // cell id -> error
};

// Executes every cell, jobs-wide in parallel. Cells are independent; per-cell
// outputs do not depend on execution order. A failing cell is marked failed
// and does not abort the rest.
MatrixOutcome run_matrix(ExperimentStore& store, const std::vector<CellJob>& jobs, int parallelism,
                         int max_steps = -1,
                         const std::function<void(const std::string&)>& progress = nullptr);

}  // namespace alkit
