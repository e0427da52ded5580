#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alkit/matrix.hpp"

namespace alkit {

enum class ColumnKind { Numeric, Categorical, Label };

// Per-column declaration for CSV ingestion. An optional wildcard kind applies
// to header columns not named explicitly; exactly one column must be the label.
struct CsvSchema {
  std::map<std::string, ColumnKind> columns;
  std::optional<ColumnKind> wildcard;
};

// Typed CSV contents before feature engineering. Label values are mapped to
// dense ids in first-appearance order; categorical cells stay as strings.
struct RawTable {
  std::vector<std::string> column_names;             // non-label columns, file order
  std::vector<ColumnKind> column_kinds;              // parallel to column_names
  std::vector<std::vector<double>> numeric_columns;  // slot per column, empty unless numeric
  std::vector<std::vector<std::string>> categorical_columns;
  std::string label_column;
  std::vector<int> labels;                 // dense ids
  std::vector<std::string> label_names;    // id -> original value
  std::size_t n_rows = 0;
};

struct ColumnMeta {
  enum class Kind { NumericStandardized, OneHot };
  Kind kind = Kind::NumericStandardized;
  std::string source;
  std::string category;  // OneHot only

  bool operator==(const ColumnMeta&) const = default;
};

// Preprocessed learning problem: standardized / one-hot features plus dense
// integer labels. Immutable after construction.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int n_classes = 0;
  std::vector<ColumnMeta> column_meta;

  std::size_t n_samples() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  // Throws std::invalid_argument when any structural invariant is broken:
  // label out of [0, n_classes), n_classes < 2, non-finite feature, row/label
  // count mismatch.
  void validate() const;
};

RawTable load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema);

// One-hot expansion for categorical columns, zero-mean/unit-std scaling for
// numeric ones (sample std; zero-variance columns map to all-zeros).
// Statistics are computed over the whole table.
Dataset preprocess(const RawTable& table);

// Content hash of the preprocessed matrix + labels; guards stores against
// silent dataset swaps.
std::uint64_t dataset_fingerprint(const Dataset& dataset);

}  // namespace alkit
