#include "fvk/image.hpp"

#include <cmath>

namespace fvk {

ImageU8 ImageU8::make(i64 w, i64 h, i64 c, u8 fill) {
  if (w < 1 || h < 1 || (c != 1 && c != 3))
    throw ShapeError("ImageU8: bad dimensions " + std::to_string(w) + "x" +
                     std::to_string(h) + "x" + std::to_string(c));
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.data.assign(static_cast<std::size_t>(w * h * c), fill);
  return img;
}

GrayImage GrayImage::make(i64 w, i64 h, float fill) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.data.assign(static_cast<std::size_t>(w * h), fill);
  return img;
}

BinaryMask BinaryMask::make(i64 w, i64 h, u8 fill) {
  BinaryMask m;
  m.width = w;
  m.height = h;
  m.data.assign(static_cast<std::size_t>(w * h), fill);
  return m;
}

void BinaryMask::validate() const {
  for (u8 v : data)
    if (v != 0 && v != 1)
      throw ValueError("BinaryMask: non-binary value " + std::to_string(v));
}

ImageU8 to_grayscale(const ImageU8& img) {
  if (img.channels != 3)
    throw ValueError("to_grayscale: input is already single-channel");
  ImageU8 out = ImageU8::make(img.width, img.height, 1);
  for (i64 y = 0; y < img.height; ++y)
    for (i64 x = 0; x < img.width; ++x) {
      const double luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                          0.114 * img.at(x, y, 2);
      const long v = std::lround(luma);
      out.at(x, y) = static_cast<u8>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
  return out;
}

GrayImage normalize(const ImageU8& img) {
  if (img.channels != 1)
    throw ValueError("normalize: expected single-channel input");
  GrayImage out = GrayImage::make(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = static_cast<float>(img.data[i]) / 255.0f;
  return out;
}

ImageU8 denormalize(const GrayImage& img) {
  ImageU8 out = ImageU8::make(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const long v = std::lround(255.0 * static_cast<double>(img.data[i]));
    out.data[i] = static_cast<u8>(v < 0 ? 0 : (v > 255 ? 255 : v));
  }
  return out;
}

BinaryMask mask_from_u8(const ImageU8& img) {
  if (img.channels != 1)
    throw ValueError("mask_from_u8: expected single-channel input");
  BinaryMask out = BinaryMask::make(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = img.data[i] >= 128 ? 1 : 0;
  return out;
}

ImageU8 mask_to_u8(const BinaryMask& mask) {
  ImageU8 out = ImageU8::make(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    out.data[i] = mask.data[i] ? 255 : 0;
  return out;
}

Tensor image_to_tensor(const GrayImage& img) {
  return Tensor::from_data({1, 1, img.height, img.width},
                           std::vector<float>(img.data.begin(), img.data.end()));
}

GrayImage tensor_to_image(const Tensor& t) {
  if (t.shape().rank() != 4 || t.shape().n() != 1 || t.shape().c() != 1)
    throw ShapeError("tensor_to_image: expected (1,1,H,W), got " + t.shape().str());
  GrayImage img = GrayImage::make(t.shape().w(), t.shape().h());
  std::copy(t.data().begin(), t.data().end(), img.data.begin());
  return img;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
  std::vector<float> v(mask.data.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask.data[i] ? 1.0f : 0.0f;
  return Tensor::from_data({1, 1, mask.height, mask.width}, std::move(v));
}

BinaryMask tensor_to_mask(const Tensor& t) {
  if (t.shape().rank() != 4 || t.shape().n() != 1 || t.shape().c() != 1)
    throw ShapeError("tensor_to_mask: expected (1,1,H,W), got " + t.shape().str());
  BinaryMask m = BinaryMask::make(t.shape().w(), t.shape().h());
  for (i64 i = 0; i < t.numel(); ++i) {
    const float v = t.data()[i];
    if (v != 0.0f && v != 1.0f)
      throw ValueError("tensor_to_mask: non-binary value " + std::to_string(v));
    m.data[static_cast<std::size_t>(i)] = v == 1.0f ? 1 : 0;
  }
  return m;
}

}  // namespace fvk
