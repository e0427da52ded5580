#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "alkit/dataset.hpp"
#include "alkit/experiment.hpp"
#include "alkit/synthetic.hpp"

namespace alkit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Where a dataset comes from: a CSV file plus its column schema, or a seeded
// synthetic blob generator.
struct DatasetSource {
  enum class Kind { Csv, Blobs };
  Kind kind = Kind::Csv;
  std::filesystem::path csv_path;
  CsvSchema schema;
  BlobsSpec blobs;
};

struct DatasetEntry {
  std::string id;
  DatasetSource source;
  std::size_t start_size = 10;
  std::size_t batch_size = 10;
  int steps = 10;
};

// One experiment suite as declared by a config file: the full strategy x
// dataset matrix sharing classifier, split scheme, seed, and metric list.
struct SuiteConfig {
  std::string name;
  std::uint64_t seed = 0;
  ClassifierSpec classifier;
  std::vector<StrategySpec> strategies;
  std::vector<DatasetEntry> datasets;
  SplitSpec split;
  TestMode test_mode = TestMode::Fixed;
  double holdout_fraction = 0.2;
  std::vector<std::string> metrics;

  void validate() const;
};

SuiteConfig parse_suite_config(const std::filesystem::path& path);
SuiteConfig parse_suite_config_text(const std::string& text, const std::string& origin);

// Canonical serialization (sorted keys, default values materialized); its
// hash pins a store to the config that created it.
std::string canonical_config_json(const SuiteConfig& config);
std::uint64_t config_hash(const SuiteConfig& config);

std::string make_cell_id(const std::string& dataset_id, StrategySpec::Kind strategy, int fold);

// Loads and preprocesses the entry's dataset (CSV or synthetic).
Dataset load_dataset(const DatasetEntry& entry);

// Per-cell engine config for one (dataset, strategy) pair of the suite.
ExperimentConfig cell_config(const SuiteConfig& suite, const DatasetEntry& entry,
                             const StrategySpec& strategy);

}  // namespace alkit
