#include "fvk/augment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fvk/geometry.hpp"
#include "fvk/rng.hpp"

namespace fvk {

std::string augment_op_name(AugmentOp op) {
  switch (op) {
    case AugmentOp::identity: return "identity";
    case AugmentOp::hflip: return "hflip";
    case AugmentOp::vflip: return "vflip";
    case AugmentOp::rotate: return "rotate";
  }
  return "identity";
}

AugmentOp augment_op_from_name(const std::string& s) {
  if (s == "identity") return AugmentOp::identity;
  if (s == "hflip") return AugmentOp::hflip;
  if (s == "vflip") return AugmentOp::vflip;
  if (s == "rotate") return AugmentOp::rotate;
  throw FormatError("unknown augmentation op: " + s);
}

std::vector<AugmentedPair> augment_dataset(const std::vector<SourcePair>& pairs,
                                           const AugmentSpec& spec) {
  if (pairs.empty()) throw DataError("augment_dataset: no source pairs");
  std::vector<AugmentedPair> out;
  out.reserve(pairs.size() * 4);
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto& src = pairs[idx];
    Rng sub(spec.seed + static_cast<u64>(idx));
    const double angle = sub.uniform(-spec.rotation_range, spec.rotation_range);

    auto emit = [&](AugmentOp op, double a, GrayImage img, BinaryMask mask) {
      AugmentRecord rec;
      rec.source_id = src.id;
      rec.op = op;
      rec.angle_degrees = a;
      rec.output_id = src.id * 4 + static_cast<i64>(op);
      rec.output_file = "images/" + std::to_string(rec.output_id) + ".pgm";
      out.push_back({std::move(rec), std::move(img), std::move(mask)});
    };

    emit(AugmentOp::identity, 0.0, src.image, src.mask);
    emit(AugmentOp::hflip, 0.0, hflip(src.image), hflip(src.mask));
    emit(AugmentOp::vflip, 0.0, vflip(src.image), vflip(src.mask));
    auto [rimg, rmask] = rotate(src.image, src.mask, angle);
    emit(AugmentOp::rotate, angle, std::move(rimg), std::move(rmask));
  }
  return out;
}

void write_augment_manifest(const std::vector<AugmentRecord>& records,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "source_id\top\tangle_millidegrees\toutput_file\n";
  for (const auto& r : records) {
    out << r.source_id << '\t' << augment_op_name(r.op) << '\t'
        << std::lround(r.angle_degrees * 1000.0) << '\t' << r.output_file << '\n';
  }
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<AugmentRecord> read_augment_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "source_id\top\tangle_millidegrees\toutput_file")
    throw FormatError("manifest " + path.string() + ": bad header line");
  std::vector<AugmentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string sid, op, milli, file;
    if (!std::getline(ss, sid, '\t') || !std::getline(ss, op, '\t') ||
        !std::getline(ss, milli, '\t') || !std::getline(ss, file, '\t'))
      throw FormatError("manifest " + path.string() + ": malformed row: " + line);
    AugmentRecord rec;
    try {
      rec.source_id = std::stoll(sid);
      rec.angle_degrees = static_cast<double>(std::stoll(milli)) / 1000.0;
    } catch (...) {
      throw FormatError("manifest " + path.string() + ": malformed numbers: " + line);
    }
    rec.op = augment_op_from_name(op);
    rec.output_file = file;
    const auto stem = std::filesystem::path(file).stem().string();
    try {
      rec.output_id = std::stoll(stem);
    } catch (...) {
      rec.output_id = rec.source_id * 4 + static_cast<i64>(rec.op);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace fvk
