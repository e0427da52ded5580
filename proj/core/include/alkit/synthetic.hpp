#pragma once

#include <cstdint>

#include "alkit/dataset.hpp"

namespace alkit {

// Gaussian blob mixture: n_blobs isotropic clusters with centers drawn
// uniformly from [-center_box, center_box]^dim, one class per blob. Samples
// are distributed over blobs as evenly as possible.
struct BlobsSpec {
  std::size_t n_samples = 1000;
  int n_blobs = 4;
  std::size_t dim = 2;
  double spread = 1.0;
  double center_box = 10.0;
  std::uint64_t seed = 0;
};

RawTable make_blobs_table(const BlobsSpec& spec);

// make_blobs_table piped through the standard preprocessing, so synthetic
// data obeys the same feature invariants as CSV data.
Dataset make_blobs(const BlobsSpec& spec);

}  // namespace alkit
