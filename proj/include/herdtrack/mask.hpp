#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace herdtrack {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

/// Row-major binary occupancy raster. Pixel (x,y) lives at index y*width+x.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<size_t>(width) * height, 0) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("BitMask: dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return bits_.empty(); }

  bool get(int x, int y) const {
    return bits_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  const std::vector<uint8_t>& bits() const { return bits_; }
  std::vector<uint8_t>& bits() { return bits_; }

  long long area() const {
    return std::count(bits_.begin(), bits_.end(), uint8_t(1));
  }

  bool same_size(const BitMask& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  bool operator==(const BitMask& o) const {
    return width_ == o.width_ && height_ == o.height_ && bits_ == o.bits_;
  }

  /// Tight bounding box of the set pixels. Throws on empty mask.
  BoundingBox bounding_box() const {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (get(x, y)) {
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
    if (x1 < 0) throw std::runtime_error("bounding_box: empty mask");
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> bits_;
};

/// Column-major run-length encoding, alternating runs starting with a
/// zero-run (COCO-style uncompressed counts).
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> counts;
};

inline RleMask rle_encode(const BitMask& mask) {
  if (mask.empty())
    throw std::invalid_argument("rle_encode: mask dimensions must be positive");
  RleMask out;
  out.width = mask.width();
  out.height = mask.height();
  uint8_t cur = 0;  // first run counts zeros
  uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      uint8_t v = mask.get(x, y) ? 1 : 0;
      if (v == cur) {
        ++run;
      } else {
        out.counts.push_back(run);
        cur = v;
        run = 1;
      }
    }
  }
  out.counts.push_back(run);
  return out;
}

inline BitMask rle_decode(const RleMask& rle) {
  if (rle.width <= 0 || rle.height <= 0)
    throw std::invalid_argument("rle_decode: dimensions must be positive");
  const uint64_t total = static_cast<uint64_t>(rle.width) * rle.height;
  uint64_t sum = 0;
  for (uint32_t c : rle.counts) sum += c;
  if (sum != total)
    throw std::runtime_error("rle_decode: malformed RLE, counts sum " +
                             std::to_string(sum) + " != " +
                             std::to_string(total));
  BitMask mask(rle.width, rle.height);
  uint64_t pos = 0;
  uint8_t cur = 0;
  for (uint32_t c : rle.counts) {
    if (cur) {
      for (uint32_t k = 0; k < c; ++k) {
        uint64_t p = pos + k;
        mask.set(static_cast<int>(p / rle.height),
                 static_cast<int>(p % rle.height));
      }
    }
    pos += c;
    cur ^= 1;
  }
  return mask;
}

inline long long rle_area(const RleMask& rle) {
  long long a = 0;
  for (size_t i = 1; i < rle.counts.size(); i += 2) a += rle.counts[i];
  return a;
}

/// Intersection over union; both-empty is defined as 1 (two absent objects
/// compare as matching).
inline double mask_iou(const BitMask& a, const BitMask& b) {
  if (!a.same_size(b))
    throw std::invalid_argument("mask_iou: dimension mismatch");
  long long inter = 0, uni = 0;
  const auto& ba = a.bits();
  const auto& bb = b.bits();
  for (size_t i = 0; i < ba.size(); ++i) {
    inter += ba[i] & bb[i];
    uni += ba[i] | bb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline BitMask mask_and(const BitMask& a, const BitMask& b) {
  if (!a.same_size(b))
    throw std::invalid_argument("mask_and: dimension mismatch");
  BitMask out(a.width(), a.height());
  for (size_t i = 0; i < a.bits().size(); ++i)
    out.bits()[i] = a.bits()[i] & b.bits()[i];
  return out;
}

inline BitMask mask_or(const BitMask& a, const BitMask& b) {
  if (!a.same_size(b))
    throw std::invalid_argument("mask_or: dimension mismatch");
  BitMask out(a.width(), a.height());
  for (size_t i = 0; i < a.bits().size(); ++i)
    out.bits()[i] = a.bits()[i] | b.bits()[i];
  return out;
}

/// Centroid from raw image moments: (M10/M00, M01/M00).
inline Point centroid(const BitMask& mask) {
  double m00 = 0, m10 = 0, m01 = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.get(x, y)) {
        m00 += 1;
        m10 += x;
        m01 += y;
      }
  if (m00 == 0) throw std::runtime_error("centroid: empty mask");
  return {m10 / m00, m01 / m00};
}

/// Set pixels with at least one 4-neighbor unset or on the image border.
inline std::vector<Point> contour_points(const BitMask& mask) {
  std::vector<Point> pts;
  const int w = mask.width(), h = mask.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
      if (border || !mask.get(x - 1, y) || !mask.get(x + 1, y) ||
          !mask.get(x, y - 1) || !mask.get(x, y + 1))
        pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
  return pts;
}

struct Blob {
  BitMask mask;  // single connected component at full frame size
  long long area = 0;
  Point centroid_;
  BoundingBox bbox;
  std::vector<Point> contour;
};

/// Connected components, sorted by area descending; ties broken by
/// topmost-then-leftmost bounding-box corner.
inline std::vector<Blob> connected_components(const BitMask& mask,
                                              int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8)
    throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
  const int w = mask.width(), h = mask.height();
  std::vector<int> label(static_cast<size_t>(w) * h, -1);
  std::vector<Blob> blobs;
  std::vector<int> stack;

  static const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static const int dx4[] = {0, 0, -1, 1};
  static const int dy4[] = {-1, 1, 0, 0};
  const int* dx = connectivity == 8 ? dx8 : dx4;
  const int* dy = connectivity == 8 ? dy8 : dy4;
  const int nn = connectivity;

  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      size_t idx0 = static_cast<size_t>(y0) * w + x0;
      if (!mask.bits()[idx0] || label[idx0] >= 0) continue;
      int id = static_cast<int>(blobs.size());
      Blob blob;
      blob.mask = BitMask(w, h);
      double m10 = 0, m01 = 0;
      int bx0 = x0, by0 = y0, bx1 = x0, by1 = y0;
      stack.clear();
      stack.push_back(static_cast<int>(idx0));
      label[idx0] = id;
      while (!stack.empty()) {
        int idx = stack.back();
        stack.pop_back();
        int x = idx % w, y = idx / w;
        blob.mask.bits()[idx] = 1;
        ++blob.area;
        m10 += x;
        m01 += y;
        bx0 = std::min(bx0, x); by0 = std::min(by0, y);
        bx1 = std::max(bx1, x); by1 = std::max(by1, y);
        for (int k = 0; k < nn; ++k) {
          int nx = x + dx[k], ny = y + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          size_t nidx = static_cast<size_t>(ny) * w + nx;
          if (mask.bits()[nidx] && label[nidx] < 0) {
            label[nidx] = id;
            stack.push_back(static_cast<int>(nidx));
          }
        }
      }
      blob.centroid_ = {m10 / blob.area, m01 / blob.area};
      blob.bbox = {bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};
      blob.contour = contour_points(blob.mask);
      blobs.push_back(std::move(blob));
    }

  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
    return a.bbox.x < b.bbox.x;
  });
  return blobs;
}

/// Minimum Euclidean distance between the two contours; 0 when the blobs
/// touch or overlap.
inline double contour_distance(const Blob& a, const Blob& b) {
  if (a.contour.empty() || b.contour.empty())
    throw std::invalid_argument("contour_distance: empty blob");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a.contour) {
    for (const auto& q : b.contour) {
      double dxx = p.x - q.x, dyy = p.y - q.y;
      double d2 = dxx * dxx + dyy * dyy;
      if (d2 < best) best = d2;
    }
  }
  best = std::sqrt(best);
  // adjacent or overlapping pixels count as touching
  return best <= 1.0 + 1e-12 ? 0.0 : best;
}

}  // namespace herdtrack
