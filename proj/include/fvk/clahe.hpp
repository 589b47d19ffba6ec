#pragma once

#include "fvk/image.hpp"

namespace fvk {

struct ClaheConfig {
  int tiles_x = 8;
  int tiles_y = 8;
  float clip_factor = 2.0f;
  static constexpr int bins = 256;

  void validate() const {
    if (tiles_x < 1 || tiles_y < 1)
      throw ValueError("ClaheConfig: tile counts must be >= 1");
    if (!(clip_factor >= 1.0f))
      throw ValueError("ClaheConfig: clip_factor must be >= 1");
  }
};

// Contrast-limited adaptive histogram equalization on an 8-bit gray image.
//
// Contract (the test oracle transcribes exactly this):
//   1. The image splits into tiles_x * tiles_y tiles; tile t spans
//      [t*floor(S/tiles), (t+1)*floor(S/tiles)) per axis, with the last tile
//      absorbing the remainder pixels.
//   2. Per tile, a 256-bin histogram is clipped at
//      limit = max(1, floor(clip_factor * tile_pixels / 256)); the total
//      excess is redistributed in one pass: floor(excess/256) to every bin,
//      the remainder one per bin starting at bin 0.
//   3. The tile mapping is m(v) = round(255 * cdf(v) / tile_pixels).
//   4. Each output pixel bilinearly blends the four surrounding tile-center
//      mappings evaluated at its input value,
//        round((1-fx)(1-fy) m00 + fx(1-fy) m01 + (1-fx) fy m10 + fx fy m11),
//      with tile center coordinates x0 + (tile_w - 1)/2; outside the center
//      lattice the nearest tile mapping applies.
ImageU8 clahe(const ImageU8& img, const ClaheConfig& cfg);

}  // namespace fvk
