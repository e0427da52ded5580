#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "alkit/dataset.hpp"
#include "alkit/matrix.hpp"
#include "alkit/rng.hpp"

namespace alkit::test {

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("alkit_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = (rng.next_double() * 2.0 - 1.0) * scale;
  return m;
}

// Small dataset with the given labels and uniformly random features.
inline Dataset random_dataset(std::size_t rows, std::size_t cols, int n_classes,
                              std::uint64_t seed) {
  Dataset ds;
  ds.features = random_matrix(rows, cols, seed, 3.0);
  Rng rng(seed + 1);
  ds.labels.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    // make sure every class appears at least twice
    ds.labels[i] = i < 2 * static_cast<std::size_t>(n_classes)
                       ? static_cast<int>(i / 2)
                       : static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_classes)));
  }
  ds.n_classes = n_classes;
  ds.column_meta.assign(cols, {ColumnMeta::Kind::NumericStandardized, "x", ""});
  return ds;
}

}  // namespace alkit::test
