#include "fvk/clahe.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace fvk {

namespace {

struct TileGrid {
  std::vector<i64> start, end;  // per-axis tile bounds
  std::vector<double> center;
};

TileGrid make_grid(i64 size, int tiles) {
  TileGrid g;
  const i64 base = size / tiles;
  for (int t = 0; t < tiles; ++t) {
    const i64 s = static_cast<i64>(t) * base;
    const i64 e = (t == tiles - 1) ? size : s + base;
    g.start.push_back(s);
    g.end.push_back(e);
    g.center.push_back(static_cast<double>(s) + static_cast<double>(e - s - 1) / 2.0);
  }
  return g;
}

// index of the left/upper tile whose center bounds the coordinate, and the
// interpolation weight toward the next one; border pixels clamp
void locate(const TileGrid& g, i64 coord, int& t0, int& t1, double& f) {
  const int tiles = static_cast<int>(g.center.size());
  if (coord <= g.center.front()) {
    t0 = t1 = 0;
    f = 0.0;
    return;
  }
  if (coord >= g.center.back()) {
    t0 = t1 = tiles - 1;
    f = 0.0;
    return;
  }
  int t = 0;
  while (t + 1 < tiles && g.center[static_cast<std::size_t>(t + 1)] <= coord) ++t;
  t0 = t;
  t1 = t + 1;
  f = (static_cast<double>(coord) - g.center[static_cast<std::size_t>(t0)]) /
      (g.center[static_cast<std::size_t>(t1)] - g.center[static_cast<std::size_t>(t0)]);
}

}  // namespace

ImageU8 clahe(const ImageU8& img, const ClaheConfig& cfg) {
  cfg.validate();
  if (img.channels != 1) throw ValueError("clahe: expected a single-channel image");
  if (img.width < 1 || img.height < 1) throw ShapeError("clahe: empty image");
  if (img.width < cfg.tiles_x || img.height < cfg.tiles_y)
    throw ShapeError("clahe: image smaller than the tile grid");

  const TileGrid gx = make_grid(img.width, cfg.tiles_x);
  const TileGrid gy = make_grid(img.height, cfg.tiles_y);

  // per-tile clipped-histogram mappings
  const int tx_n = cfg.tiles_x, ty_n = cfg.tiles_y;
  std::vector<std::array<u8, 256>> maps(static_cast<std::size_t>(tx_n * ty_n));
  for (int ty = 0; ty < ty_n; ++ty) {
    for (int tx = 0; tx < tx_n; ++tx) {
      i64 hist[256] = {};
      const i64 x0 = gx.start[static_cast<std::size_t>(tx)], x1 = gx.end[static_cast<std::size_t>(tx)];
      const i64 y0 = gy.start[static_cast<std::size_t>(ty)], y1 = gy.end[static_cast<std::size_t>(ty)];
      for (i64 y = y0; y < y1; ++y)
        for (i64 x = x0; x < x1; ++x) ++hist[img.at(x, y)];
      const i64 tile_pixels = (x1 - x0) * (y1 - y0);

      const i64 limit = std::max<i64>(
          1, static_cast<i64>(std::floor(static_cast<double>(cfg.clip_factor) *
                                         static_cast<double>(tile_pixels) / 256.0)));
      i64 excess = 0;
      for (i64& h : hist) {
        if (h > limit) {
          excess += h - limit;
          h = limit;
        }
      }
      const i64 per_bin = excess / 256;
      const i64 rem = excess % 256;
      for (int v = 0; v < 256; ++v) hist[v] += per_bin + (v < rem ? 1 : 0);

      i64 cdf = 0;
      auto& m = maps[static_cast<std::size_t>(ty * tx_n + tx)];
      for (int v = 0; v < 256; ++v) {
        cdf += hist[v];
        m[static_cast<std::size_t>(v)] = static_cast<u8>(std::lround(
            255.0 * static_cast<double>(cdf) / static_cast<double>(tile_pixels)));
      }
    }
  }

  ImageU8 out = ImageU8::make(img.width, img.height, 1);
  for (i64 y = 0; y < img.height; ++y) {
    int ty0, ty1;
    double fy;
    locate(gy, y, ty0, ty1, fy);
    for (i64 x = 0; x < img.width; ++x) {
      int tx0, tx1;
      double fx;
      locate(gx, x, tx0, tx1, fx);
      const u8 v = img.at(x, y);
      const double m00 = maps[static_cast<std::size_t>(ty0 * tx_n + tx0)][v];
      const double m01 = maps[static_cast<std::size_t>(ty0 * tx_n + tx1)][v];
      const double m10 = maps[static_cast<std::size_t>(ty1 * tx_n + tx0)][v];
      const double m11 = maps[static_cast<std::size_t>(ty1 * tx_n + tx1)][v];
      const double blended = (1.0 - fx) * (1.0 - fy) * m00 + fx * (1.0 - fy) * m01 +
                             (1.0 - fx) * fy * m10 + fx * fy * m11;
      out.at(x, y) = static_cast<u8>(std::lround(blended));
    }
  }
  return out;
}

}  // namespace fvk
