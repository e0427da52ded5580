#include "alkit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "alkit/hash.hpp"
#include "alkit/metrics.hpp"

namespace alkit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& message) {
  throw ConfigError(origin + ": " + message);
}

ColumnKind column_kind_from_string(const std::string& origin, const std::string& name) {
  if (name == "numeric") return ColumnKind::Numeric;
  if (name == "categorical") return ColumnKind::Categorical;
  if (name == "label") return ColumnKind::Label;
  fail(origin, "unknown column kind '" + name + "' (expected numeric, categorical, or label)");
}

ClassifierSpec parse_classifier(const std::string& origin, const json& j) {
  ClassifierSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "knn") {
    spec.kind = ClassifierSpec::Kind::Knn;
    spec.k = j.value("k", 5);
  } else if (kind == "softmax_sgd") {
    spec.kind = ClassifierSpec::Kind::SoftmaxSgd;
    spec.learning_rate = j.value("learning_rate", 0.01);
    spec.epochs = j.value("epochs", 50);
    spec.l2 = j.value("l2", 1e-4);
  } else {
    fail(origin, "unknown classifier kind '" + kind + "'");
  }
  return spec;
}

StrategySpec parse_strategy(const json& j) {
  StrategySpec spec;
  if (j.is_string()) {
    spec.kind = strategy_kind_from_string(j.get<std::string>());
    return spec;
  }
  spec.kind = strategy_kind_from_string(j.at("kind").get<std::string>());
  spec.prefilter_factor = j.value("prefilter_factor", 10);
  return spec;
}

DatasetEntry parse_dataset(const std::string& origin, const json& j) {
  DatasetEntry entry;
  entry.id = j.at("id").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "csv") {
    entry.source.kind = DatasetSource::Kind::Csv;
    entry.source.csv_path = j.at("path").get<std::string>();
    const json& schema = j.at("schema");
    for (const auto& [column, kind_name] : schema.items()) {
      const ColumnKind ck = column_kind_from_string(origin, kind_name.get<std::string>());
      if (column == "*") {
        if (ck == ColumnKind::Label) fail(origin, "wildcard column cannot be the label");
        entry.source.schema.wildcard = ck;
      } else {
        entry.source.schema.columns[column] = ck;
      }
    }
  } else if (kind == "blobs") {
    entry.source.kind = DatasetSource::Kind::Blobs;
    BlobsSpec& blobs = entry.source.blobs;
    blobs.n_samples = j.value("n_samples", std::size_t{1000});
    blobs.n_blobs = j.value("n_blobs", 4);
    blobs.dim = j.value("dim", std::size_t{2});
    blobs.spread = j.value("spread", 1.0);
    blobs.center_box = j.value("center_box", 10.0);
    blobs.seed = j.value("seed", std::uint64_t{0});
  } else {
    fail(origin, "unknown dataset kind '" + kind + "' (expected csv or blobs)");
  }
  entry.start_size = j.at("start_size").get<std::size_t>();
  entry.batch_size = j.at("batch_size").get<std::size_t>();
  entry.steps = j.at("steps").get<int>();
  return entry;
}

}  // namespace

void SuiteConfig::validate() const {
  classifier.validate();
  if (strategies.empty()) throw ConfigError("config declares no strategies");
  std::set<StrategySpec::Kind> kinds;
  for (const auto& s : strategies) {
    s.validate();
    if (!kinds.insert(s.kind).second) {
      throw ConfigError("duplicate strategy '" + to_string(s.kind) + "'");
    }
  }
  if (datasets.empty()) throw ConfigError("config declares no datasets");
  std::set<std::string> ids;
  for (const auto& d : datasets) {
    if (d.id.empty()) throw ConfigError("dataset id must not be empty");
    if (!ids.insert(d.id).second) throw ConfigError("duplicate dataset id '" + d.id + "'");
    if (d.steps < 1) throw ConfigError("dataset '" + d.id + "': steps must be >= 1");
    if (d.batch_size < 1) throw ConfigError("dataset '" + d.id + "': batch_size must be >= 1");
    if (d.start_size < 1) throw ConfigError("dataset '" + d.id + "': start_size must be >= 1");
  }
  if (test_mode == TestMode::Incremental &&
      (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)) {
    throw ConfigError("holdout_fraction must be in (0,1)");
  }
  for (const auto& m : metrics) {
    if (!is_iteration_metric(m)) throw ConfigError("unknown metric '" + m + "'");
  }
}

SuiteConfig parse_suite_config_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "... at line L, column C ..." in e.what()
    throw ConfigError(origin + ": " + e.what());
  }

  SuiteConfig config;
  try {
    config.name = j.value("name", "experiment");
    config.seed = j.value("seed", std::uint64_t{0});
    config.classifier = parse_classifier(origin, j.at("classifier"));
    for (const auto& s : j.at("strategies")) config.strategies.push_back(parse_strategy(s));
    for (const auto& d : j.at("datasets")) config.datasets.push_back(parse_dataset(origin, d));

    if (j.contains("split")) {
      const json& split = j.at("split");
      const std::string scheme = split.at("scheme").get<std::string>();
      if (scheme == "five-by-two-cv") {
        config.split.scheme = SplitSpec::Scheme::FiveByTwoCv;
      } else if (scheme == "repeated-holdout") {
        config.split.scheme = SplitSpec::Scheme::RepeatedHoldout;
        config.split.repetitions = split.value("repetitions", 10);
        config.split.test_fraction = split.value("test_fraction", 0.5);
      } else {
        fail(origin, "unknown split scheme '" + scheme + "'");
      }
    }

    if (j.contains("test_mode")) {
      const json& mode = j.at("test_mode");
      const std::string kind = mode.at("kind").get<std::string>();
      if (kind == "fixed") {
        config.test_mode = TestMode::Fixed;
      } else if (kind == "incremental") {
        config.test_mode = TestMode::Incremental;
        config.holdout_fraction = mode.value("holdout_fraction", 0.2);
      } else {
        fail(origin, "unknown test mode '" + kind + "'");
      }
    }

    if (j.contains("metrics")) {
      config.metrics = j.at("metrics").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config;
}

SuiteConfig parse_suite_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_suite_config_text(text, path.string());
}

std::string canonical_config_json(const SuiteConfig& config) {
  json j;
  j["name"] = config.name;
  j["seed"] = config.seed;

  json classifier;
  classifier["kind"] = to_string(config.classifier.kind);
  if (config.classifier.kind == ClassifierSpec::Kind::Knn) {
    classifier["k"] = config.classifier.k;
  } else {
    classifier["learning_rate"] = config.classifier.learning_rate;
    classifier["epochs"] = config.classifier.epochs;
    classifier["l2"] = config.classifier.l2;
  }
  j["classifier"] = classifier;

  j["strategies"] = json::array();
  for (const auto& s : config.strategies) {
    json strategy;
    strategy["kind"] = to_string(s.kind);
    if (s.kind == StrategySpec::Kind::WKMeans) strategy["prefilter_factor"] = s.prefilter_factor;
    j["strategies"].push_back(strategy);
  }

  j["datasets"] = json::array();
  for (const auto& d : config.datasets) {
    json dataset;
    dataset["id"] = d.id;
    if (d.source.kind == DatasetSource::Kind::Csv) {
      dataset["kind"] = "csv";
      dataset["path"] = d.source.csv_path.string();
      json schema = json::object();
      for (const auto& [column, kind] : d.source.schema.columns) {
        schema[column] = kind == ColumnKind::Numeric
                             ? "numeric"
                             : (kind == ColumnKind::Categorical ? "categorical" : "label");
      }
      if (d.source.schema.wildcard) {
        schema["*"] = *d.source.schema.wildcard == ColumnKind::Numeric ? "numeric" : "categorical";
      }
      dataset["schema"] = schema;
    } else {
      dataset["kind"] = "blobs";
      dataset["n_samples"] = d.source.blobs.n_samples;
      dataset["n_blobs"] = d.source.blobs.n_blobs;
      dataset["dim"] = d.source.blobs.dim;
      dataset["spread"] = d.source.blobs.spread;
      dataset["center_box"] = d.source.blobs.center_box;
      dataset["seed"] = d.source.blobs.seed;
    }
    dataset["start_size"] = d.start_size;
    dataset["batch_size"] = d.batch_size;
    dataset["steps"] = d.steps;
    j["datasets"].push_back(dataset);
  }

  json split;
  if (config.split.scheme == SplitSpec::Scheme::FiveByTwoCv) {
    split["scheme"] = "five-by-two-cv";
  } else {
    split["scheme"] = "repeated-holdout";
    split["repetitions"] = config.split.repetitions;
    split["test_fraction"] = config.split.test_fraction;
  }
  j["split"] = split;

  json mode;
  mode["kind"] = config.test_mode == TestMode::Fixed ? "fixed" : "incremental";
  if (config.test_mode == TestMode::Incremental) {
    mode["holdout_fraction"] = config.holdout_fraction;
  }
  j["test_mode"] = mode;
  j["metrics"] = config.metrics;

  return j.dump();  // nlohmann objects iterate sorted by key
}

std::uint64_t config_hash(const SuiteConfig& config) {
  return fnv1a64(canonical_config_json(config));
}

std::string make_cell_id(const std::string& dataset_id, StrategySpec::Kind strategy, int fold) {
  char fold_buf[16];
  std::snprintf(fold_buf, sizeof(fold_buf), "f%02d", fold);
  return dataset_id + "__" + to_string(strategy) + "__" + fold_buf;
}

Dataset load_dataset(const DatasetEntry& entry) {
  if (entry.source.kind == DatasetSource::Kind::Blobs) return make_blobs(entry.source.blobs);
  return preprocess(load_csv_dataset(entry.source.csv_path, entry.source.schema));
}

ExperimentConfig cell_config(const SuiteConfig& suite, const DatasetEntry& entry,
                             const StrategySpec& strategy) {
  ExperimentConfig config;
  config.dataset_id = entry.id;
  config.classifier = suite.classifier;
  config.strategy = strategy;
  config.start_size = entry.start_size;
  config.batch_size = entry.batch_size;
  config.steps = entry.steps;
  config.test_mode = suite.test_mode;
  config.holdout_fraction = suite.holdout_fraction;
  config.split = suite.split;
  config.seed = suite.seed;
  config.metrics = suite.metrics;
  return config;
}

}  // namespace alkit
