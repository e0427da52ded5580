#include "alkit/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alkit/hash.hpp"

namespace alkit {

using nlohmann::json;

namespace store_detail {
std::function<void(const std::string&, int, const char*)> snapshot_crash_hook;
}

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kStatusFile = "status.json";
constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kMetricsFile = "metrics.jsonl";
constexpr const char* kTimingFile = "timing.log";
constexpr const char* kSnapshotMagic = "ALKITSNAP1";

std::string snapshot_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t%05d.snap", t);
  return buf;
}

// atomic file replacement: write to <path>.tmp, then rename over
void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw StoreError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot append to " + path.string());
  out << line << '\n';
  out.flush();
  if (!out) throw StoreError("append failed: " + path.string());
}

// complete lines of a line-oriented file; a trailing chunk without '\n'
// (interrupted append) is ignored
std::vector<std::string> read_complete_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      lines.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return lines;
}

json record_to_json(const IterationRecord& rec) {
  json j;
  j["iteration"] = rec.iteration;
  j["batch"] = rec.batch;
  j["n_labeled"] = rec.n_labeled;
  j["test_pred_fp"] = rec.test_pred_fingerprint;
  j["metrics"] = json::object();
  for (const auto& [name, value] : rec.metrics) j["metrics"][name] = value;
  j["truncated"] = rec.truncated;
  return j;
}

IterationRecord record_from_json(const json& j) {
  IterationRecord rec;
  rec.iteration = j.at("iteration").get<int>();
  rec.batch = j.at("batch").get<std::vector<std::int64_t>>();
  rec.n_labeled = j.at("n_labeled").get<std::size_t>();
  rec.test_pred_fingerprint = j.at("test_pred_fp").get<std::uint64_t>();
  for (const auto& [name, value] : j.at("metrics").items()) {
    rec.metrics[name] = value.get<double>();
  }
  rec.truncated = j.at("truncated").get<bool>();
  return rec;
}

void write_index_section(std::ostream& out, const char* name,
                         std::span<const std::int64_t> values) {
  out << name << ' ' << values.size() << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << values[i];
  }
  out << '\n';
}

void write_int_section(std::ostream& out, const char* name, std::span<const int> values) {
  out << name << ' ' << values.size() << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << values[i];
  }
  out << '\n';
}

std::string serialize_snapshot(const std::string& cell_id, const EngineState& state) {
  std::ostringstream out;
  out << kSnapshotMagic << '\n';
  out << "cell " << cell_id << '\n';
  out << "iteration " << state.iteration << '\n';
  write_index_section(out, "labeled", state.pool.labeled());
  write_index_section(out, "unlabeled", state.pool.unlabeled());
  write_index_section(out, "test_indices", state.test_indices);
  write_index_section(out, "batch", state.batch);
  write_int_section(out, "test_pred", state.test_predictions);
  const auto model_bytes = state.model.serialize();
  out << "model " << model_bytes.size() << '\n';
  out.write(reinterpret_cast<const char*>(model_bytes.data()),
            static_cast<std::streamsize>(model_bytes.size()));
  out << "\nend\n";
  return std::move(out).str();
}

class SnapshotReader {
 public:
  explicit SnapshotReader(std::istream& in) : in_(in) {}

  std::string expect_line() {
    std::string line;
    if (!std::getline(in_, line)) throw StoreError("snapshot truncated");
    return line;
  }

  template <typename T>
  std::vector<T> read_section(const char* name) {
    std::istringstream header(expect_line());
    std::string key;
    std::size_t n = 0;
    header >> key >> n;
    if (key != name) throw StoreError(std::string("snapshot: expected section ") + name);
    std::istringstream body(expect_line());
    std::vector<T> values(n);
    for (auto& v : values) {
      if (!(body >> v)) throw StoreError(std::string("snapshot: short section ") + name);
    }
    return values;
  }

  std::istream& stream() { return in_; }

 private:
  std::istream& in_;
};

}  // namespace

ExperimentStore::CellLock::~CellLock() {
  if (fd_ >= 0) ::close(fd_);
}

ExperimentStore::CellLock& ExperimentStore::CellLock::operator=(CellLock&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

ExperimentStore::ExperimentStore(std::filesystem::path root, StoreManifest manifest)
    : root_(std::move(root)),
      manifest_(std::move(manifest)),
      mutex_(std::make_shared<std::mutex>()),
      cache_(std::make_shared<std::map<std::string, CellCache>>()) {}

bool ExperimentStore::exists(const std::filesystem::path& root) {
  return std::filesystem::exists(root / kManifestFile);
}

ExperimentStore ExperimentStore::create(const std::filesystem::path& root, StoreManifest manifest) {
  if (exists(root)) throw StoreError("store already exists at " + root.string());
  std::filesystem::create_directories(root / "cells");

  json j;
  j["version"] = manifest.version;
  j["config"] = manifest.config_json;
  j["config_hash"] = manifest.config_hash;
  j["datasets"] = json::object();
  for (const auto& [id, fp] : manifest.dataset_fingerprints) j["datasets"][id] = fp;
  j["cells"] = json::array();
  for (const auto& cell : manifest.cells) {
    j["cells"].push_back({{"id", cell.id},
                          {"dataset", cell.dataset},
                          {"strategy", cell.strategy},
                          {"fold", cell.fold}});
  }
  write_file_atomic(root / kManifestFile, j.dump(2) + "\n");

  ExperimentStore store(root, std::move(manifest));
  for (const auto& cell : store.manifest_.cells) {
    std::filesystem::create_directories(store.cell_dir(cell.id) / "snapshots");
  }
  return store;
}

ExperimentStore ExperimentStore::open(const std::filesystem::path& root) {
  const auto manifest_path = root / kManifestFile;
  std::ifstream in(manifest_path);
  if (!in) throw StoreError("no store at " + root.string() + " (missing manifest.json)");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw StoreError("corrupt manifest at " + manifest_path.string() + ": " + e.what());
  }
  StoreManifest manifest;
  manifest.version = j.at("version").get<int>();
  manifest.config_json = j.at("config").get<std::string>();
  manifest.config_hash = j.at("config_hash").get<std::uint64_t>();
  for (const auto& [id, fp] : j.at("datasets").items()) {
    manifest.dataset_fingerprints[id] = fp.get<std::uint64_t>();
  }
  for (const auto& cell : j.at("cells")) {
    manifest.cells.push_back({cell.at("id").get<std::string>(), cell.at("dataset").get<std::string>(),
                              cell.at("strategy").get<std::string>(), cell.at("fold").get<int>()});
  }
  return ExperimentStore(root, std::move(manifest));
}

const CellInfo* ExperimentStore::find_cell(const std::string& cell_id) const {
  for (const auto& cell : manifest_.cells) {
    if (cell.id == cell_id) return &cell;
  }
  return nullptr;
}

std::filesystem::path ExperimentStore::cell_dir(const std::string& cell_id) const {
  if (find_cell(cell_id) == nullptr) throw StoreError("unknown cell: " + cell_id);
  return root_ / "cells" / cell_id;
}

CellStatus ExperimentStore::cell_status(const std::string& cell_id) const {
  std::ifstream in(cell_dir(cell_id) / kStatusFile);
  if (!in) return {};
  json j = json::parse(in);
  CellStatus status;
  status.iterations = j.at("iterations").get<int>();
  status.done = j.at("done").get<bool>();
  status.failed = j.at("failed").get<bool>();
  status.truncated = j.at("truncated").get<bool>();
  status.error = j.value("error", "");
  return status;
}

void ExperimentStore::write_cell_status(const std::string& cell_id, const CellStatus& status) {
  json j;
  j["iterations"] = status.iterations;
  j["done"] = status.done;
  j["failed"] = status.failed;
  j["truncated"] = status.truncated;
  j["error"] = status.error;
  write_file_atomic(cell_dir(cell_id) / kStatusFile, j.dump() + "\n");
}

ExperimentStore::CellLock ExperimentStore::lock_cell(const std::string& cell_id) {
  const auto lock_path = cell_dir(cell_id) / "lock";
  const int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd < 0) throw StoreError("cannot open lock file " + lock_path.string());
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw StoreError("cell " + cell_id + " is locked by another writer");
  }
  return CellLock(fd);
}

void ExperimentStore::snapshot(const std::string& cell_id, int t, const EngineState& state) {
  const CellStatus status = cell_status(cell_id);
  if (t != status.iterations) {
    throw StoreError("out-of-order snapshot for cell " + cell_id + ": got t=" + std::to_string(t) +
                     ", expected t=" + std::to_string(status.iterations));
  }
  if (state.iteration != t) throw StoreError("snapshot state/iteration mismatch");

  const auto dir = cell_dir(cell_id) / "snapshots";
  const auto path = dir / snapshot_name(t);
  const auto tmp = path.string() + ".tmp";
  const std::string payload = serialize_snapshot(cell_id, state);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write snapshot " + tmp);
    const std::size_t half = payload.size() / 2;
    out.write(payload.data(), static_cast<std::streamsize>(half));
    out.flush();
    if (store_detail::snapshot_crash_hook) {
      store_detail::snapshot_crash_hook(cell_id, t, "after_partial_write");
    }
    out.write(payload.data() + half, static_cast<std::streamsize>(payload.size() - half));
    out.flush();
    if (!out) throw StoreError("snapshot write failed: " + tmp);
  }
  if (store_detail::snapshot_crash_hook) {
    store_detail::snapshot_crash_hook(cell_id, t, "before_rename");
  }
  std::filesystem::rename(tmp, path);

  CellStatus updated = status;
  updated.iterations = t + 1;
  write_cell_status(cell_id, updated);
}

EngineState ExperimentStore::restore(const std::string& cell_id, int t) const {
  const CellStatus status = cell_status(cell_id);
  if (t < 0 || t >= status.iterations) {
    throw StoreError("missing snapshot t=" + std::to_string(t) + " for cell " + cell_id +
                     " (have " + std::to_string(status.iterations) + " iterations)");
  }
  const auto path = cell_dir(cell_id) / "snapshots" / snapshot_name(t);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("missing snapshot file " + path.string());

  SnapshotReader reader(in);
  if (reader.expect_line() != kSnapshotMagic) throw StoreError("snapshot: bad magic");
  const std::string cell_line = reader.expect_line();
  if (cell_line != "cell " + cell_id) throw StoreError("snapshot: cell mismatch");
  const std::string iter_line = reader.expect_line();
  if (iter_line != "iteration " + std::to_string(t)) throw StoreError("snapshot: iteration mismatch");

  EngineState state;
  state.iteration = t;
  auto labeled = reader.read_section<std::int64_t>("labeled");
  auto unlabeled = reader.read_section<std::int64_t>("unlabeled");
  state.pool = PoolState(std::move(labeled), std::move(unlabeled), t);
  state.test_indices = reader.read_section<std::int64_t>("test_indices");
  state.batch = reader.read_section<std::int64_t>("batch");
  state.test_predictions = reader.read_section<int>("test_pred");

  std::istringstream header(reader.expect_line());
  std::string key;
  std::size_t n_bytes = 0;
  header >> key >> n_bytes;
  if (key != "model") throw StoreError("snapshot: expected model section");
  std::vector<std::byte> bytes(n_bytes);
  reader.stream().read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n_bytes));
  if (reader.stream().gcount() != static_cast<std::streamsize>(n_bytes)) {
    throw StoreError("snapshot: model blob truncated");
  }
  state.model = Model::deserialize(bytes);
  if (reader.expect_line() != "" || reader.expect_line() != "end") {
    throw StoreError("snapshot: missing end marker");
  }
  return state;
}

ExperimentStore::CellCache& ExperimentStore::cell_cache(const std::string& cell_id) {
  return (*cache_)[cell_id];
}

void ExperimentStore::load_metric_index(const std::string& cell_id, CellCache& cache) {
  if (cache.loaded) return;
  for (const auto& row : read_metric_log(cell_id)) {
    cache.metric_keys.emplace(row.iteration, row.metric);
    cache.appended_rows = std::max(cache.appended_rows, row.seq + 1);
  }
  cache.loaded = true;
}

void ExperimentStore::append_metric(const std::string& cell_id, int t, const std::string& metric,
                                    double value) {
  std::lock_guard guard(*mutex_);
  CellCache& cache = cell_cache(cell_id);
  load_metric_index(cell_id, cache);
  if (!cache.metric_keys.emplace(t, metric).second) {
    throw StoreError("duplicate metric append: cell " + cell_id + ", t=" + std::to_string(t) +
                     ", metric " + metric);
  }
  json j;
  j["cell"] = cell_id;
  j["iteration"] = t;
  j["metric"] = metric;
  j["seq"] = cache.appended_rows;
  j["value"] = value;
  append_line(cell_dir(cell_id) / kMetricsFile, j.dump());
  ++cache.appended_rows;
}

bool ExperimentStore::has_metric(const std::string& cell_id, int t, const std::string& metric) {
  std::lock_guard guard(*mutex_);
  CellCache& cache = cell_cache(cell_id);
  load_metric_index(cell_id, cache);
  return cache.metric_keys.contains({t, metric});
}

std::vector<MetricLogRow> ExperimentStore::read_metric_log(const std::string& cell_id) const {
  std::vector<MetricLogRow> rows;
  for (const auto& line : read_complete_lines(cell_dir(cell_id) / kMetricsFile)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      continue;  // damaged row from an interrupted append
    }
    MetricLogRow row;
    row.cell = j.at("cell").get<std::string>();
    row.iteration = j.at("iteration").get<int>();
    row.metric = j.at("metric").get<std::string>();
    row.value = j.at("value").get<double>();
    row.seq = j.at("seq").get<int>();
    rows.push_back(std::move(row));
  }
  return rows;
}

MetricSeries ExperimentStore::read_metric_series(const std::string& cell_id,
                                                 const std::string& metric) const {
  std::map<int, double> by_iteration;
  for (const auto& row : read_metric_log(cell_id)) {
    if (row.metric == metric) by_iteration[row.iteration] = row.value;
  }
  MetricSeries series;
  series.name = metric;
  if (by_iteration.empty()) return series;
  series.first_iteration = by_iteration.begin()->first;
  int expected = series.first_iteration;
  for (const auto& [t, value] : by_iteration) {
    if (t != expected) {
      throw StoreError("metric series " + metric + " for cell " + cell_id +
                       " is not contiguous at t=" + std::to_string(t));
    }
    series.values.push_back(value);
    ++expected;
  }
  return series;
}

void ExperimentStore::append_record(const std::string& cell_id, const IterationRecord& record) {
  append_line(cell_dir(cell_id) / kRecordsFile, record_to_json(record).dump());
}

std::vector<IterationRecord> ExperimentStore::read_records(const std::string& cell_id) const {
  std::vector<IterationRecord> records;
  for (const auto& line : read_complete_lines(cell_dir(cell_id) / kRecordsFile)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      continue;
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

void ExperimentStore::repair_cell(const std::string& cell_id) {
  const CellStatus status = cell_status(cell_id);
  const auto dir = cell_dir(cell_id);

  // drop stray snapshot temp files
  const auto snap_dir = dir / "snapshots";
  if (std::filesystem::exists(snap_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(snap_dir)) {
      if (entry.path().extension() == ".tmp") std::filesystem::remove(entry.path());
    }
  }

  // keep only rows committed by a snapshot (iteration < status.iterations)
  {
    std::string kept;
    bool dropped = false;
    for (const auto& line : read_complete_lines(dir / kRecordsFile)) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        dropped = true;
        continue;
      }
      if (j.at("iteration").get<int>() >= status.iterations) {
        dropped = true;
        continue;
      }
      kept += line;
      kept += '\n';
    }
    if (dropped) write_file_atomic(dir / kRecordsFile, kept);
  }
  {
    std::string kept;
    bool dropped = false;
    for (const auto& line : read_complete_lines(dir / kMetricsFile)) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        dropped = true;
        continue;
      }
      if (j.at("iteration").get<int>() >= status.iterations) {
        dropped = true;
        continue;
      }
      kept += line;
      kept += '\n';
    }
    if (dropped) write_file_atomic(dir / kMetricsFile, kept);
  }

  std::lock_guard guard(*mutex_);
  cache_->erase(cell_id);  // force reload of the metric index
}

void ExperimentStore::log_timing(const std::string& cell_id, int t, double wall_ms) {
  std::ostringstream line;
  line << "t=" << t << " wall_ms=" << wall_ms;
  append_line(cell_dir(cell_id) / kTimingFile, line.str());
}

MetricSeries replay_metric(ExperimentStore& store, const std::string& cell_id,
                           const std::string& metric, const Dataset& dataset,
                           const ExperimentConfig& config, int fold_index) {
  if (!is_iteration_metric(metric)) {
    throw StoreError("metric '" + metric + "' cannot be replayed per iteration");
  }
  const CellStatus status = store.cell_status(cell_id);
  if (status.iterations == 0) throw StoreError("cell " + cell_id + " has no stored state");

  auto lock = store.lock_cell(cell_id);
  const auto fold_u = static_cast<std::uint64_t>(fold_index);

  auto labels_of = [&](std::span<const std::int64_t> indices) {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      out[i] = dataset.labels[static_cast<std::size_t>(indices[i])];
    }
    return out;
  };

  std::map<int, double> values;
  EngineState prev;
  for (int t = 0; t < status.iterations; ++t) {
    EngineState state = store.restore(cell_id, t);
    const bool have_test = !state.test_indices.empty();
    const Matrix test_x =
        dataset.features.gather_rows(std::span<const std::int64_t>(state.test_indices));

    if (metric == metric_names::accuracy && have_test) {
      values[t] = accuracy(state.test_predictions, labels_of(state.test_indices));
    } else if (metric == metric_names::nn_distance_sum && have_test) {
      values[t] = nn_distance_sum(test_x, state.pool.labeled(), dataset);
    } else if (t > 0 && metric == metric_names::contradiction && have_test) {
      // in incremental mode the test set grew since t-1, so h_{t-1} is
      // re-applied to the current test set, exactly as the live loop did
      std::vector<int> prev_pred = config.test_mode == TestMode::Incremental
                                       ? prev.model.predict(test_x)
                                       : prev.test_predictions;
      if (prev_pred.size() == state.test_predictions.size() && !prev_pred.empty()) {
        values[t] = contradiction(prev_pred, state.test_predictions);
      }
    } else if (t > 0 && metric == metric_names::exploration_gradient && have_test) {
      values[t] = exploration_gradient(test_x, prev.pool.labeled(), state.pool.labeled(), dataset);
    } else if (t > 0 && metric == metric_names::kappa_agreement && !state.batch.empty()) {
      const Matrix batch_x =
          dataset.features.gather_rows(std::span<const std::int64_t>(state.batch));
      const Matrix labeled_x =
          dataset.features.gather_rows(std::span<const std::int64_t>(prev.pool.labeled()));
      values[t] =
          kappa_agreement(prev.model, labeled_x, labels_of(prev.pool.labeled()), batch_x);
    } else if (t > 0 && metric == metric_names::reverse_batch_accuracy &&
               !prev.test_indices.empty() && !state.batch.empty()) {
      // the live loop scores the batch before annotating it, against the test
      // set as it existed at selection time (snapshot t-1)
      const Matrix prev_test_x =
          dataset.features.gather_rows(std::span<const std::int64_t>(prev.test_indices));
      const Matrix batch_x =
          dataset.features.gather_rows(std::span<const std::int64_t>(state.batch));
      values[t] = reverse_batch_accuracy(
          prev_test_x, labels_of(prev.test_indices), config.classifier, dataset.n_classes,
          batch_x, labels_of(state.batch),
          experiment_seed(config.seed, fold_u, static_cast<std::uint64_t>(t),
                          seed_purpose::reverse_fit));
    }
    prev = std::move(state);
  }

  for (const auto& [t, value] : values) {
    if (store.has_metric(cell_id, t, metric)) {
      const MetricSeries logged = store.read_metric_series(cell_id, metric);
      const int offset = t - logged.first_iteration;
      if (offset < 0 || offset >= static_cast<int>(logged.values.size()) ||
          logged.values[static_cast<std::size_t>(offset)] != value) {
        throw StoreError("replay mismatch for cell " + cell_id + ", metric " + metric +
                         " at t=" + std::to_string(t));
      }
    } else {
      store.append_metric(cell_id, t, metric, value);
    }
  }

  MetricSeries series;
  series.name = metric;
  if (!values.empty()) {
    series.first_iteration = values.begin()->first;
    for (const auto& [t, value] : values) series.values.push_back(value);
  }
  return series;
}

}  // namespace alkit
