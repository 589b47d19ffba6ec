#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fvk/image.hpp"

namespace fvk {

enum class AugmentOp { identity, hflip, vflip, rotate };

std::string augment_op_name(AugmentOp op);
AugmentOp augment_op_from_name(const std::string& s);

struct AugmentSpec {
  u64 seed = 0;
  double rotation_range = 30.0;  // rotation angle drawn uniformly from +-range
};

struct SourcePair {
  i64 id = 0;
  GrayImage image;
  BinaryMask mask;
};

struct AugmentRecord {
  i64 source_id = 0;
  AugmentOp op = AugmentOp::identity;
  double angle_degrees = 0.0;
  i64 output_id = 0;
  std::string output_file;
};

struct AugmentedPair {
  AugmentRecord record;
  GrayImage image;
  BinaryMask mask;
};

// Emits exactly four variants per source: identity, hflip, vflip, and one
// rotation with an angle drawn per source from a sub-generator seeded
// spec.seed + source index (so parallel schedules cannot change the draws).
// Output ids are source_id * 4 + variant.
std::vector<AugmentedPair> augment_dataset(const std::vector<SourcePair>& pairs,
                                           const AugmentSpec& spec);

// Tab-separated provenance columns:
// source_id, op, angle_millidegrees, output_file.
void write_augment_manifest(const std::vector<AugmentRecord>& records,
                            const std::filesystem::path& path);
std::vector<AugmentRecord> read_augment_manifest(const std::filesystem::path& path);

}  // namespace fvk
