#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "herdtrack/mask.hpp"

namespace herdtrack {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0)
      throw std::invalid_argument("GrayImage: dimensions must be positive");
  }

  uint8_t at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  void set(int x, int y, uint8_t v) {
    pixels[static_cast<size_t>(y) * width + x] = v;
  }
  bool empty() const { return pixels.empty(); }
};

/// Sub-image of the mask's padded bounding box, clipped to image bounds,
/// pixels outside the mask zeroed.
inline GrayImage crop(const GrayImage& image, const BitMask& mask, int pad) {
  if (image.width != mask.width() || image.height != mask.height())
    throw std::invalid_argument("crop: image/mask dimension mismatch");
  BoundingBox bb = mask.bounding_box();  // throws on empty mask
  int x0 = std::max(0, bb.x - pad);
  int y0 = std::max(0, bb.y - pad);
  int x1 = std::min(image.width - 1, bb.x + bb.w - 1 + pad);
  int y1 = std::min(image.height - 1, bb.y + bb.h - 1 + pad);
  GrayImage out(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (mask.get(x, y)) out.set(x - x0, y - y0, image.at(x, y));
  return out;
}

/// Box-filter (area averaging) resize with exact fractional overlap weights.
inline GrayImage resize_area(const GrayImage& src, int dst_w, int dst_h) {
  if (src.empty())
    throw std::invalid_argument("resize_area: empty source");
  GrayImage dst(dst_w, dst_h);
  const double sx = static_cast<double>(src.width) / dst_w;
  const double sy = static_cast<double>(src.height) / dst_h;
  for (int ty = 0; ty < dst_h; ++ty) {
    double fy0 = ty * sy, fy1 = (ty + 1) * sy;
    int iy0 = static_cast<int>(std::floor(fy0));
    int iy1 = std::min(src.height - 1, static_cast<int>(std::ceil(fy1)) - 1);
    for (int tx = 0; tx < dst_w; ++tx) {
      double fx0 = tx * sx, fx1 = (tx + 1) * sx;
      int ix0 = static_cast<int>(std::floor(fx0));
      int ix1 = std::min(src.width - 1, static_cast<int>(std::ceil(fx1)) - 1);
      double acc = 0, wsum = 0;
      for (int y = iy0; y <= iy1; ++y) {
        double wy = std::min<double>(y + 1, fy1) - std::max<double>(y, fy0);
        if (wy <= 0) continue;
        for (int x = ix0; x <= ix1; ++x) {
          double wx = std::min<double>(x + 1, fx1) - std::max<double>(x, fx0);
          if (wx <= 0) continue;
          acc += wx * wy * src.at(x, y);
          wsum += wx * wy;
        }
      }
      dst.set(tx, ty, static_cast<uint8_t>(std::lround(acc / wsum)));
    }
  }
  return dst;
}

}  // namespace herdtrack
