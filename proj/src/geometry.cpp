#include "fvk/geometry.hpp"

#include <cmath>

namespace fvk {

namespace {

i64 clamp_i(i64 v, i64 lo, i64 hi) { return v < lo ? lo : (v > hi ? hi : v); }

float sample_bilinear_clamped(const GrayImage& img, double sx, double sy) {
  const i64 x0 = static_cast<i64>(std::floor(sx));
  const i64 y0 = static_cast<i64>(std::floor(sy));
  const double fx = sx - static_cast<double>(x0);
  const double fy = sy - static_cast<double>(y0);
  const i64 xa = clamp_i(x0, 0, img.width - 1), xb = clamp_i(x0 + 1, 0, img.width - 1);
  const i64 ya = clamp_i(y0, 0, img.height - 1), yb = clamp_i(y0 + 1, 0, img.height - 1);
  const double top = (1.0 - fx) * img.at(xa, ya) + fx * img.at(xb, ya);
  const double bot = (1.0 - fx) * img.at(xa, yb) + fx * img.at(xb, yb);
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

float sample_bilinear_zero(const GrayImage& img, double sx, double sy) {
  const i64 x0 = static_cast<i64>(std::floor(sx));
  const i64 y0 = static_cast<i64>(std::floor(sy));
  const double fx = sx - static_cast<double>(x0);
  const double fy = sy - static_cast<double>(y0);
  auto px = [&](i64 x, i64 y) -> double {
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) return 0.0;
    return img.at(x, y);
  };
  const double top = (1.0 - fx) * px(x0, y0) + fx * px(x0 + 1, y0);
  const double bot = (1.0 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

}  // namespace

GrayImage resize_image(const GrayImage& img, i64 out_w, i64 out_h) {
  if (out_w < 1 || out_h < 1) throw ShapeError("resize_image: output extents must be >= 1");
  if (out_w == img.width && out_h == img.height) return img;
  GrayImage out = GrayImage::make(out_w, out_h);
  const double sx_scale = static_cast<double>(img.width) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(img.height) / static_cast<double>(out_h);
  for (i64 y = 0; y < out_h; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
    for (i64 x = 0; x < out_w; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
      out.at(x, y) = sample_bilinear_clamped(img, sx, sy);
    }
  }
  return out;
}

BinaryMask resize_mask(const BinaryMask& mask, i64 out_w, i64 out_h) {
  if (out_w < 1 || out_h < 1) throw ShapeError("resize_mask: output extents must be >= 1");
  if (out_w == mask.width && out_h == mask.height) return mask;
  BinaryMask out = BinaryMask::make(out_w, out_h);
  const double sx_scale = static_cast<double>(mask.width) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(mask.height) / static_cast<double>(out_h);
  for (i64 y = 0; y < out_h; ++y) {
    const i64 sy = clamp_i(static_cast<i64>(std::floor((static_cast<double>(y) + 0.5) * sy_scale)),
                           0, mask.height - 1);
    for (i64 x = 0; x < out_w; ++x) {
      const i64 sx = clamp_i(static_cast<i64>(std::floor((static_cast<double>(x) + 0.5) * sx_scale)),
                             0, mask.width - 1);
      out.at(x, y) = mask.at(sx, sy);
    }
  }
  return out;
}

GrayImage hflip(const GrayImage& img) {
  GrayImage out = GrayImage::make(img.width, img.height);
  for (i64 y = 0; y < img.height; ++y)
    for (i64 x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
  return out;
}

GrayImage vflip(const GrayImage& img) {
  GrayImage out = GrayImage::make(img.width, img.height);
  for (i64 y = 0; y < img.height; ++y)
    for (i64 x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, img.height - 1 - y);
  return out;
}

BinaryMask hflip(const BinaryMask& mask) {
  BinaryMask out = BinaryMask::make(mask.width, mask.height);
  for (i64 y = 0; y < mask.height; ++y)
    for (i64 x = 0; x < mask.width; ++x) out.at(x, y) = mask.at(mask.width - 1 - x, y);
  return out;
}

BinaryMask vflip(const BinaryMask& mask) {
  BinaryMask out = BinaryMask::make(mask.width, mask.height);
  for (i64 y = 0; y < mask.height; ++y)
    for (i64 x = 0; x < mask.width; ++x) out.at(x, y) = mask.at(x, mask.height - 1 - y);
  return out;
}

std::pair<GrayImage, BinaryMask> rotate(const GrayImage& img, const BinaryMask& mask,
                                        double angle_degrees) {
  if (std::abs(angle_degrees) > 180.0)
    throw ValueError("rotate: |angle| must be <= 180 degrees");
  if (img.width != mask.width || img.height != mask.height)
    throw ShapeError("rotate: image and mask dimensions differ");
  if (angle_degrees == 0.0) return {img, mask};

  const double rad = angle_degrees * 3.141592653589793 / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = static_cast<double>(img.width - 1) / 2.0;
  const double cy = static_cast<double>(img.height - 1) / 2.0;

  GrayImage out_img = GrayImage::make(img.width, img.height);
  BinaryMask out_mask = BinaryMask::make(mask.width, mask.height);
  for (i64 y = 0; y < img.height; ++y) {
    for (i64 x = 0; x < img.width; ++x) {
      // inverse map: rotate the destination pixel back into the source
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      out_img.at(x, y) = sample_bilinear_zero(img, sx, sy);
      const i64 nx = static_cast<i64>(std::lround(sx));
      const i64 ny = static_cast<i64>(std::lround(sy));
      out_mask.at(x, y) = (nx >= 0 && nx < mask.width && ny >= 0 && ny < mask.height)
                              ? mask.at(nx, ny)
                              : 0;
    }
  }
  return {out_img, out_mask};
}

}  // namespace fvk
