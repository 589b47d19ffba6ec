#pragma once

#include <filesystem>
#include <vector>

#include "fvk/augment.hpp"
#include "fvk/image.hpp"

namespace fvk {

struct DatasetEntry {
  i64 id = 0;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;  // sorted ascending by id
};

// Scans root/images and root/masks for files named <id>.pgm|ppm, pairs them
// by numeric id, and validates every mask as binary on disk: values other
// than 0/255 on more than 1% of pixels fail with a data-quality error.
DatasetManifest scan_dataset(const std::filesystem::path& root);

struct SplitSpec {
  i64 train_count = 30;
  double val_fraction = 0.2;  // of the augmented training set, carved by source
  i64 test_count = 10;
  u64 seed = 42;

  void validate(i64 manifest_size) const;
};

struct Split {
  std::vector<i64> train_ids;
  std::vector<i64> test_ids;
};

// Deterministic seeded shuffle; the first train_count ids form the training
// pool and the next test_count the test set.
Split split(const DatasetManifest& manifest, const SplitSpec& spec);

// Validation is carved from the augmented training set at source granularity:
// floor(val_fraction * n_sources) sources move wholesale, so no augmented
// sibling of a validation image remains in training.
struct ValCarve {
  std::vector<i64> train_output_ids;
  std::vector<i64> val_output_ids;
};
ValCarve carve_validation(const std::vector<AugmentRecord>& records,
                          double val_fraction, u64 seed);

// Loaders with the mask threshold rule ({0,255} -> {0,1} at 128).
GrayImage load_gray(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

}  // namespace fvk
