#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "alkit/experiment.hpp"
#include "alkit/metrics.hpp"

namespace alkit {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CellInfo {
  std::string id;
  std::string dataset;
  std::string strategy;
  int fold = 0;
};

struct CellStatus {
  int iterations = 0;  // committed snapshots; last iteration is iterations - 1
  bool done = false;
  bool failed = false;
  bool truncated = false;
  std::string error;
};

struct MetricLogRow {
  std::string cell;
  int iteration = 0;
  std::string metric;
  double value = 0.0;
  int seq = 0;  // per-cell append ordinal

  bool operator==(const MetricLogRow&) const = default;
};

struct StoreManifest {
  int version = 1;
  std::string config_json;  // canonical form of the suite config
  std::uint64_t config_hash = 0;
  std::map<std::string, std::uint64_t> dataset_fingerprints;
  std::vector<CellInfo> cells;
};

// On-disk experiment store: one directory per cell holding snapshots, the
// canonical iteration records, and an append-only metrics log. Layout and
// byte formats are documented in docs/store-format.md. One writer per cell,
// enforced with a lock file; readers may run concurrently.
class ExperimentStore {
 public:
  static ExperimentStore create(const std::filesystem::path& root, StoreManifest manifest);
  static ExperimentStore open(const std::filesystem::path& root);
  static bool exists(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const StoreManifest& manifest() const { return manifest_; }
  const CellInfo* find_cell(const std::string& cell_id) const;

  CellStatus cell_status(const std::string& cell_id) const;
  void write_cell_status(const std::string& cell_id, const CellStatus& status);

  // Durable, atomic (temp file + rename) snapshot of the engine state at
  // iteration t. t must be 0 or follow the last committed snapshot.
  void snapshot(const std::string& cell_id, int t, const EngineState& state);
  EngineState restore(const std::string& cell_id, int t) const;
  int snapshot_count(const std::string& cell_id) const { return cell_status(cell_id).iterations; }

  // Appends one {cell, iteration, metric, value, seq} row. Duplicate
  // (iteration, metric) appends for a cell are rejected.
  void append_metric(const std::string& cell_id, int t, const std::string& metric, double value);
  bool has_metric(const std::string& cell_id, int t, const std::string& metric);
  std::vector<MetricLogRow> read_metric_log(const std::string& cell_id) const;
  MetricSeries read_metric_series(const std::string& cell_id, const std::string& metric) const;

  void append_record(const std::string& cell_id, const IterationRecord& record);
  std::vector<IterationRecord> read_records(const std::string& cell_id) const;

  // Drops uncommitted rows (iteration >= the committed snapshot count) left
  // behind by an interrupted writer. Called when a writer reopens a cell.
  void repair_cell(const std::string& cell_id);

  // Wall-clock sidecar; never part of the canonical records.
  void log_timing(const std::string& cell_id, int t, double wall_ms);

  // Single-writer guard per cell; the flock is released when the holder is
  // destroyed or the process dies.
  class CellLock {
   public:
    CellLock() = default;
    CellLock(CellLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    CellLock& operator=(CellLock&& other) noexcept;
    ~CellLock();
    bool held() const { return fd_ >= 0; }

   private:
    friend class ExperimentStore;
    explicit CellLock(int fd) : fd_(fd) {}
    int fd_ = -1;
  };
  CellLock lock_cell(const std::string& cell_id);

  std::filesystem::path cell_dir(const std::string& cell_id) const;

 private:
  ExperimentStore(std::filesystem::path root, StoreManifest manifest);

  struct CellCache {
    std::set<std::pair<int, std::string>> metric_keys;
    int appended_rows = 0;
    bool loaded = false;
  };
  CellCache& cell_cache(const std::string& cell_id);
  void load_metric_index(const std::string& cell_id, CellCache& cache);

  std::filesystem::path root_;
  StoreManifest manifest_;
  std::shared_ptr<std::mutex> mutex_;  // guards the cache map across threads
  std::shared_ptr<std::map<std::string, CellCache>> cache_;
};

namespace store_detail {
// Test seam: invoked inside snapshot() with phases "after_partial_write" and
// "before_rename" so crash-injection tests can abort mid-write.
extern std::function<void(const std::string& cell, int t, const char* phase)> snapshot_crash_hook;
}  // namespace store_detail

// Recomputes one metric for every committed iteration of a cell from its
// snapshots, without re-running the experiment. Values are appended to the
// metrics log unless already present; present rows must match exactly.
MetricSeries replay_metric(ExperimentStore& store, const std::string& cell_id,
                           const std::string& metric, const Dataset& dataset,
                           const ExperimentConfig& config, int fold_index);

}  // namespace alkit
