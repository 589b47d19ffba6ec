#pragma once

#include <vector>

#include "fvk/common.hpp"
#include "fvk/tensor.hpp"

namespace fvk {

// 8-bit image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct ImageU8 {
  i64 width = 0, height = 0, channels = 1;
  std::vector<u8> data;

  static ImageU8 make(i64 w, i64 h, i64 c, u8 fill = 0);
  i64 pixels() const { return width * height; }
  u8 at(i64 x, i64 y, i64 c = 0) const {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  u8& at(i64 x, i64 y, i64 c = 0) {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
};

// Single plane of floats in [0,1].
struct GrayImage {
  i64 width = 0, height = 0;
  std::vector<float> data;

  static GrayImage make(i64 w, i64 h, float fill = 0.0f);
  float at(i64 x, i64 y) const { return data[static_cast<std::size_t>(y * width + x)]; }
  float& at(i64 x, i64 y) { return data[static_cast<std::size_t>(y * width + x)]; }
};

// Strictly binary plane, values 0 or 1.
struct BinaryMask {
  i64 width = 0, height = 0;
  std::vector<u8> data;

  static BinaryMask make(i64 w, i64 h, u8 fill = 0);
  u8 at(i64 x, i64 y) const { return data[static_cast<std::size_t>(y * width + x)]; }
  u8& at(i64 x, i64 y) { return data[static_cast<std::size_t>(y * width + x)]; }
  void validate() const;
};

// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B). Rejects 1-channel input.
ImageU8 to_grayscale(const ImageU8& img);

// value / 255 elementwise; input must be single-channel.
GrayImage normalize(const ImageU8& img);

// round(255 * value); the inverse of normalize on 8-bit data.
ImageU8 denormalize(const GrayImage& img);

// Mask from 8-bit data, threshold at 128 (0/255 are the nominal values).
BinaryMask mask_from_u8(const ImageU8& img);
ImageU8 mask_to_u8(const BinaryMask& mask);  // {0,1} -> {0,255}

// (1,1,H,W) tensors for the network.
Tensor image_to_tensor(const GrayImage& img);
GrayImage tensor_to_image(const Tensor& t);
Tensor mask_to_tensor(const BinaryMask& mask);
BinaryMask tensor_to_mask(const Tensor& t);  // values must be exactly 0/1

}  // namespace fvk
