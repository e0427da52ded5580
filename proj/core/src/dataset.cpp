#include "alkit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "alkit/hash.hpp"

namespace alkit {
namespace {

// RFC 4180 record reader: quoted fields may contain commas, doubled quotes,
// and line breaks. Returns false at end of stream.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  int c;
  while ((c = in.get()) != EOF) {
    saw_any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
  }
  if (!saw_any) return false;
  fields.push_back(std::move(field));
  return true;
}

double parse_numeric_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  // tolerate surrounding spaces
  while (first != last && *first == ' ') ++first;
  while (last != first && *(last - 1) == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    std::ostringstream msg;
    msg << "unparseable numeric cell '" << cell << "' at row " << row
        << ", column '" << column << "'";
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (n_classes < 2) throw std::invalid_argument("Dataset: fewer than 2 classes");
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("Dataset: feature rows and label count differ");
  }
  if (column_meta.size() != features.cols()) {
    throw std::invalid_argument("Dataset: column metadata does not match feature width");
  }
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::invalid_argument("Dataset: label outside [0, n_classes)");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
  }
}

RawTable load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path.string());

  std::vector<std::string> header;
  if (!read_csv_record(in, header) || (header.size() == 1 && header[0].empty())) {
    throw std::runtime_error("empty CSV file: " + path.string());
  }

  // resolve per-column kinds from the schema
  std::vector<ColumnKind> kinds(header.size());
  int label_index = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = schema.columns.find(header[i]);
    if (it != schema.columns.end()) {
      kinds[i] = it->second;
    } else if (schema.wildcard) {
      kinds[i] = *schema.wildcard;
    } else {
      throw std::runtime_error("column '" + header[i] + "' not declared in schema");
    }
    if (kinds[i] == ColumnKind::Label) {
      if (label_index >= 0) throw std::runtime_error("schema declares more than one label column");
      label_index = static_cast<int>(i);
    }
  }
  for (const auto& [name, kind] : schema.columns) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw std::runtime_error("unknown column in schema: '" + name + "' not present in file");
    }
  }
  if (label_index < 0) throw std::runtime_error("schema declares no label column");

  RawTable table;
  table.label_column = header[static_cast<std::size_t>(label_index)];
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) == label_index) continue;
    table.column_names.push_back(header[i]);
    table.column_kinds.push_back(kinds[i]);
  }
  table.numeric_columns.resize(table.column_names.size());
  table.categorical_columns.resize(table.column_names.size());

  std::unordered_map<std::string, int> label_ids;
  std::vector<std::string> fields;
  std::size_t row = 0;
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    ++row;
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << row << " has " << fields.size() << " fields, header has " << header.size();
      throw std::runtime_error(msg.str());
    }
    std::size_t out_col = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<int>(i) == label_index) {
        auto [it, inserted] = label_ids.try_emplace(fields[i], static_cast<int>(table.label_names.size()));
        if (inserted) table.label_names.push_back(fields[i]);
        table.labels.push_back(it->second);
        continue;
      }
      if (kinds[i] == ColumnKind::Numeric) {
        table.numeric_columns[out_col].push_back(parse_numeric_cell(fields[i], row, header[i]));
      } else {
        table.categorical_columns[out_col].push_back(fields[i]);
      }
      ++out_col;
    }
  }
  table.n_rows = row;
  if (table.n_rows == 0) throw std::runtime_error("CSV file has a header but no data rows: " + path.string());
  if (table.label_names.size() < 2) throw std::runtime_error("fewer than 2 classes in label column");
  return table;
}

Dataset preprocess(const RawTable& table) {
  const std::size_t n = table.n_rows;

  // plan output columns
  struct OutColumn {
    ColumnMeta meta;
    std::size_t source_index;
  };
  std::vector<OutColumn> plan;
  std::vector<std::vector<std::string>> category_order(table.column_names.size());
  for (std::size_t c = 0; c < table.column_names.size(); ++c) {
    if (table.column_kinds[c] == ColumnKind::Numeric) {
      plan.push_back({{ColumnMeta::Kind::NumericStandardized, table.column_names[c], ""}, c});
    } else {
      // categories in first-appearance order
      std::unordered_map<std::string, bool> seen;
      for (const auto& v : table.categorical_columns[c]) {
        if (seen.try_emplace(v, true).second) category_order[c].push_back(v);
      }
      for (const auto& cat : category_order[c]) {
        plan.push_back({{ColumnMeta::Kind::OneHot, table.column_names[c], cat}, c});
      }
    }
  }

  Dataset out;
  out.features = Matrix(n, plan.size());
  out.labels = table.labels;
  out.n_classes = static_cast<int>(table.label_names.size());

  std::size_t j = 0;
  for (const auto& col : plan) {
    out.column_meta.push_back(col.meta);
    if (col.meta.kind == ColumnMeta::Kind::NumericStandardized) {
      const auto& raw = table.numeric_columns[col.source_index];
      double mean = 0.0;
      for (double v : raw) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : raw) var += (v - mean) * (v - mean);
      const double std_dev = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
      if (std_dev > 0.0) {
        for (std::size_t i = 0; i < n; ++i) out.features.at(i, j) = (raw[i] - mean) / std_dev;
      }
      // zero-variance column stays all-zeros
    } else {
      const auto& raw = table.categorical_columns[col.source_index];
      for (std::size_t i = 0; i < n; ++i) {
        out.features.at(i, j) = raw[i] == col.meta.category ? 1.0 : 0.0;
      }
    }
    ++j;
  }

  out.validate();
  return out;
}

std::uint64_t dataset_fingerprint(const Dataset& dataset) {
  std::uint64_t h = fnv1a64_values<std::size_t>(
      std::array<std::size_t, 2>{dataset.features.rows(), dataset.features.cols()});
  h = fnv1a64_values<double>(dataset.features.data(), h);
  h = fnv1a64_values<int>(dataset.labels, h);
  return h;
}

}  // namespace alkit
