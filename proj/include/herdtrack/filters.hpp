#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "herdtrack/mask.hpp"

namespace herdtrack {

/// One detected or segmented object in one frame.
struct Instance {
  std::optional<int> identity;
  BitMask mask;
  BoundingBox bbox;
  double confidence = 1.0;
  Point centroid_;
  std::optional<std::vector<float>> embedding;  // external feature bypass

  static Instance from_mask(BitMask m, double conf = 1.0) {
    Instance inst;
    inst.bbox = m.bounding_box();
    inst.centroid_ = centroid(m);
    inst.mask = std::move(m);
    inst.confidence = conf;
    return inst;
  }
};

/// Pen enclosure polygon plus its rasterization at frame resolution.
struct PenRegion {
  std::vector<Point> polygon;
  BitMask rasterized;
};

namespace detail {

inline bool segments_intersect(const Point& a, const Point& b, const Point& c,
                               const Point& d) {
  auto cross = [](const Point& o, const Point& p, const Point& q) {
    return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
  };
  double d1 = cross(c, d, a), d2 = cross(c, d, b);
  double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Even-odd rule point-in-polygon test.
inline bool point_in_polygon(double px, double py,
                             const std::vector<Point>& poly) {
  bool inside = false;
  size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((poly[i].y > py) != (poly[j].y > py)) {
      double xint = poly[j].x + (py - poly[j].y) / (poly[i].y - poly[j].y) *
                                    (poly[i].x - poly[j].x);
      if (px < xint) inside = !inside;
    }
  }
  return inside;
}

}  // namespace detail

/// Rasterizes the polygon with the even-odd rule sampled at pixel centers.
inline PenRegion make_pen(std::vector<Point> polygon, int frame_w,
                          int frame_h) {
  if (polygon.size() < 3)
    throw std::invalid_argument("make_pen: polygon needs >= 3 vertices");
  size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      // skip edges sharing a vertex
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_intersect(polygon[i], polygon[(i + 1) % n],
                                     polygon[j], polygon[(j + 1) % n]))
        throw std::invalid_argument("make_pen: self-intersecting polygon");
    }
  PenRegion pen;
  pen.rasterized = BitMask(frame_w, frame_h);
  for (int y = 0; y < frame_h; ++y)
    for (int x = 0; x < frame_w; ++x)
      if (detail::point_in_polygon(x + 0.5, y + 0.5, polygon))
        pen.rasterized.set(x, y);
  if (pen.rasterized.area() == 0)
    throw std::invalid_argument("make_pen: rasterized pen is empty");
  pen.polygon = std::move(polygon);
  return pen;
}

/// Fraction of the mask's area lying inside the pen.
inline double pen_inside_fraction(const BitMask& mask, const PenRegion& pen) {
  if (!mask.same_size(pen.rasterized))
    throw std::invalid_argument("pen_inside_fraction: dimension mismatch");
  long long total = 0, inside = 0;
  for (size_t i = 0; i < mask.bits().size(); ++i) {
    total += mask.bits()[i];
    inside += mask.bits()[i] & pen.rasterized.bits()[i];
  }
  if (total == 0)
    throw std::runtime_error("pen_inside_fraction: empty mask");
  return static_cast<double>(inside) / static_cast<double>(total);
}

/// Keeps instances with at least min_fraction of their area inside the pen.
inline std::vector<Instance> pen_filter(const std::vector<Instance>& instances,
                                        const PenRegion& pen,
                                        double min_fraction = 0.40) {
  std::vector<Instance> out;
  for (const auto& inst : instances)
    if (pen_inside_fraction(inst.mask, pen) >= min_fraction)
      out.push_back(inst);
  return out;
}

inline BitMask clip_mask_to_pen(const BitMask& mask, const PenRegion& pen) {
  return mask_and(mask, pen.rasterized);
}

enum class NmsOverlap { IoU, OverSmaller };

/// Greedy mask-level non-maximum suppression, confidence descending.
/// Suppression triggers on overlap strictly greater than the threshold.
inline std::vector<Instance> mask_nms(const std::vector<Instance>& instances,
                                      double overlap_threshold = 0.08,
                                      NmsOverlap mode = NmsOverlap::IoU) {
  std::vector<size_t> order(instances.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return instances[a].confidence > instances[b].confidence;
  });
  std::vector<bool> keep(instances.size(), false);
  std::vector<size_t> kept;
  for (size_t idx : order) {
    bool ok = true;
    for (size_t k : kept) {
      double ov;
      if (mode == NmsOverlap::IoU) {
        ov = mask_iou(instances[idx].mask, instances[k].mask);
      } else {
        long long inter = 0;
        const auto& a = instances[idx].mask.bits();
        const auto& b = instances[k].mask.bits();
        for (size_t i = 0; i < a.size(); ++i) inter += a[i] & b[i];
        long long smaller = std::min(instances[idx].mask.area(),
                                     instances[k].mask.area());
        ov = smaller > 0 ? static_cast<double>(inter) / smaller : 0.0;
      }
      if (ov > overlap_threshold) {
        ok = false;
        break;
      }
    }
    if (ok) {
      keep[idx] = true;
      kept.push_back(idx);
    }
  }
  std::vector<Instance> out;
  for (size_t i = 0; i < instances.size(); ++i)
    if (keep[i]) out.push_back(instances[i]);
  return out;
}

/// When more than `trigger` detections are present, keep only the `expected`
/// highest-confidence ones (ties broken by earlier list position).
inline std::vector<Instance> select_top_k(
    const std::vector<Instance>& detections, size_t expected = 10,
    size_t trigger = 15) {
  if (detections.size() <= trigger) return detections;
  std::vector<size_t> order(detections.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  order.resize(expected);
  std::sort(order.begin(), order.end());
  std::vector<Instance> out;
  for (size_t i : order) out.push_back(detections[i]);
  return out;
}

}  // namespace herdtrack
