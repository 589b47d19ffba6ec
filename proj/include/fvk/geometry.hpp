#pragma once

#include <utility>

#include "fvk/image.hpp"

namespace fvk {

// Bilinear resize with half-pixel-centered sampling; border samples clamp,
// so outputs stay in [0,1].
GrayImage resize_image(const GrayImage& img, i64 out_w, i64 out_h);

// Nearest-neighbor resize with half-pixel centers; strictly binary output.
BinaryMask resize_mask(const BinaryMask& mask, i64 out_w, i64 out_h);

GrayImage hflip(const GrayImage& img);
GrayImage vflip(const GrayImage& img);
BinaryMask hflip(const BinaryMask& mask);
BinaryMask vflip(const BinaryMask& mask);

// Rotation about the image center, |angle| <= 180 degrees. The image samples
// bilinearly and the mask nearest-neighbor through the same geometry;
// out-of-bounds sources read as 0.
std::pair<GrayImage, BinaryMask> rotate(const GrayImage& img, const BinaryMask& mask,
                                        double angle_degrees);

}  // namespace fvk
