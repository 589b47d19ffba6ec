#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fvk/image.hpp"

namespace fvk {

// Binary Netpbm only: P5 (gray) and P6 (RGB), maxval 255. The header is
// whitespace- and comment-tolerant ('#' to end of line between tokens).
ImageU8 decode_netpbm(std::span<const u8> bytes);

// Fixed header form "P5\n<w> <h>\n255\n" (or P6), then raw bytes;
// decode(encode(img)) reproduces img exactly.
std::vector<u8> encode_netpbm(const ImageU8& img);

ImageU8 read_netpbm(const std::filesystem::path& path);
void write_netpbm(const ImageU8& img, const std::filesystem::path& path);

}  // namespace fvk
