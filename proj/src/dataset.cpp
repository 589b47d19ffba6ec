#include "fvk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fvk/netpbm.hpp"
#include "fvk/rng.hpp"

namespace fvk {

namespace {

std::map<i64, std::filesystem::path> scan_numeric_files(
    const std::filesystem::path& dir, std::initializer_list<const char*> exts) {
  std::map<i64, std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset: missing directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    bool ok = false;
    for (const char* e : exts)
      if (ext == e) ok = true;
    if (!ok) continue;
    const auto stem = entry.path().stem().string();
    i64 id;
    try {
      std::size_t used = 0;
      id = std::stoll(stem, &used);
      if (used != stem.size()) continue;
    } catch (...) {
      continue;
    }
    if (out.count(id))
      throw DataError("dataset: duplicate id " + std::to_string(id) + " in " + dir.string());
    out[id] = entry.path();
  }
  return out;
}

void validate_mask_file(const std::filesystem::path& path) {
  const ImageU8 img = read_netpbm(path);
  if (img.channels != 1)
    throw DataError("dataset: mask " + path.string() + " is not single-channel");
  i64 off = 0;
  for (u8 v : img.data)
    if (v != 0 && v != 255) ++off;
  const double frac = static_cast<double>(off) / static_cast<double>(img.data.size());
  if (frac > 0.01)
    throw DataError("dataset: mask " + path.string() + " is not binary: " +
                    std::to_string(off) + " of " + std::to_string(img.data.size()) +
                    " pixels are neither 0 nor 255");
}

}  // namespace

DatasetManifest scan_dataset(const std::filesystem::path& root) {
  const auto images = scan_numeric_files(root / "images", {".pgm", ".ppm"});
  const auto masks = scan_numeric_files(root / "masks", {".pgm"});

  std::vector<i64> orphan_images, orphan_masks;
  for (const auto& [id, p] : images)
    if (!masks.count(id)) orphan_images.push_back(id);
  for (const auto& [id, p] : masks)
    if (!images.count(id)) orphan_masks.push_back(id);
  if (!orphan_images.empty() || !orphan_masks.empty()) {
    std::string msg = "dataset: unpaired files;";
    if (!orphan_images.empty()) {
      msg += " images without masks:";
      for (i64 id : orphan_images) msg += " " + std::to_string(id);
    }
    if (!orphan_masks.empty()) {
      msg += " masks without images:";
      for (i64 id : orphan_masks) msg += " " + std::to_string(id);
    }
    throw DataError(msg);
  }
  if (images.empty())
    throw DataError("dataset: no image/mask pairs under " + root.string());

  DatasetManifest manifest;
  manifest.root = root;
  for (const auto& [id, p] : images) {
    validate_mask_file(masks.at(id));
    manifest.entries.push_back({id, p, masks.at(id)});
  }
  return manifest;  // std::map iteration is already ascending
}

void SplitSpec::validate(i64 manifest_size) const {
  if (train_count < 1 || test_count < 0)
    throw ValueError("SplitSpec: counts must be positive");
  if (train_count + test_count > manifest_size)
    throw ValueError("SplitSpec: train " + std::to_string(train_count) + " + test " +
                     std::to_string(test_count) + " exceed manifest size " +
                     std::to_string(manifest_size));
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw ValueError("SplitSpec: val_fraction must lie in [0,1)");
}

Split split(const DatasetManifest& manifest, const SplitSpec& spec) {
  spec.validate(static_cast<i64>(manifest.entries.size()));
  std::vector<i64> ids;
  ids.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) ids.push_back(e.id);

  // Fisher-Yates with our own bounded draws; std::shuffle sequences are
  // implementation-defined
  Rng rng(spec.seed);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng.below(i)]);

  Split s;
  s.train_ids.assign(ids.begin(), ids.begin() + spec.train_count);
  s.test_ids.assign(ids.begin() + spec.train_count,
                    ids.begin() + spec.train_count + spec.test_count);
  return s;
}

ValCarve carve_validation(const std::vector<AugmentRecord>& records,
                          double val_fraction, u64 seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw ValueError("carve_validation: val_fraction must lie in [0,1)");
  std::map<i64, std::vector<i64>> by_source;
  for (const auto& r : records) by_source[r.source_id].push_back(r.output_id);

  std::vector<i64> sources;
  for (const auto& [sid, outs] : by_source) sources.push_back(sid);
  Rng rng(seed);
  for (std::size_t i = sources.size(); i > 1; --i)
    std::swap(sources[i - 1], sources[rng.below(i)]);

  const std::size_t n_val = static_cast<std::size_t>(
      std::floor(val_fraction * static_cast<double>(sources.size())));
  std::set<i64> val_sources(sources.begin(), sources.begin() + static_cast<std::ptrdiff_t>(n_val));

  ValCarve carve;
  for (const auto& r : records) {
    if (val_sources.count(r.source_id))
      carve.val_output_ids.push_back(r.output_id);
    else
      carve.train_output_ids.push_back(r.output_id);
  }
  return carve;
}

GrayImage load_gray(const std::filesystem::path& path) {
  ImageU8 img = read_netpbm(path);
  if (img.channels == 3) img = to_grayscale(img);
  return normalize(img);
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const ImageU8 img = read_netpbm(path);
  if (img.channels != 1)
    throw DataError("mask " + path.string() + " is not single-channel");
  return mask_from_u8(img);
}

}  // namespace fvk
