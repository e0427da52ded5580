#include "alkit/synthetic.hpp"

#include <stdexcept>
#include <string>

#include "alkit/rng.hpp"

namespace alkit {

RawTable make_blobs_table(const BlobsSpec& spec) {
  if (spec.n_blobs < 2) throw std::invalid_argument("make_blobs: need at least 2 blobs");
  if (spec.dim == 0) throw std::invalid_argument("make_blobs: dim must be positive");
  if (spec.n_samples < static_cast<std::size_t>(spec.n_blobs)) {
    throw std::invalid_argument("make_blobs: need at least one sample per blob");
  }
  if (spec.spread < 0.0) throw std::invalid_argument("make_blobs: spread must be nonnegative");

  Rng rng(derive_seed({spec.seed, 0x626c6f6273ULL}));  // "blobs"

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.n_blobs),
                                           std::vector<double>(spec.dim));
  for (auto& c : centers) {
    for (auto& v : c) v = (rng.next_double() * 2.0 - 1.0) * spec.center_box;
  }

  RawTable table;
  table.n_rows = spec.n_samples;
  table.label_column = "blob";
  for (std::size_t d = 0; d < spec.dim; ++d) {
    table.column_names.push_back("x" + std::to_string(d));
    table.column_kinds.push_back(ColumnKind::Numeric);
  }
  table.numeric_columns.resize(spec.dim, std::vector<double>(spec.n_samples));
  table.categorical_columns.resize(spec.dim);
  for (int b = 0; b < spec.n_blobs; ++b) table.label_names.push_back("blob" + std::to_string(b));

  // round-robin over blobs keeps class counts within one of each other
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const int blob = static_cast<int>(i % static_cast<std::size_t>(spec.n_blobs));
    table.labels.push_back(blob);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      table.numeric_columns[d][i] =
          centers[static_cast<std::size_t>(blob)][d] + spec.spread * rng.next_gaussian();
    }
  }
  return table;
}

Dataset make_blobs(const BlobsSpec& spec) { return preprocess(make_blobs_table(spec)); }

}  // namespace alkit
