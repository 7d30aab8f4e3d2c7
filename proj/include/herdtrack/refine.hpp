#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "herdtrack/filters.hpp"
#include "herdtrack/mask.hpp"

namespace herdtrack {

struct RefineConfig {
  double min_area_ratio = 0.30;
  double max_distance_ratio_large = 0.5;   // used when main area >= cutoff
  double max_distance_ratio_small = 1.5;   // used otherwise
  double max_prev_dist = 200.0;            // pixels
  long long large_blob_cutoff = 1000;      // pixel area
  int connectivity = 8;
  // distance to previous centroid measured blob-centroid-to-point by
  // default; set true to measure from the blob contour instead
  bool prev_dist_from_contour = false;
};

struct RefineState {
  std::optional<Point> prev_centroid;
  bool is_first_frame = true;
};

struct RefineResult {
  BitMask cleaned;
  RefineState state;
};

/// Rule-based per-frame mask cleanup: clip to the pen, keep the main blob
/// (nearest to the previous centroid, else largest) plus nearby blobs that
/// pass the area / contour-distance / previous-centroid-distance gates.
inline RefineResult refine_mask(const BitMask& mask, const PenRegion& pen,
                                RefineState state, const RefineConfig& cfg) {
  if (!mask.same_size(pen.rasterized))
    throw std::invalid_argument("refine_mask: dimension mismatch");

  BitMask clipped = clip_mask_to_pen(mask, pen);
  std::vector<Blob> blobs = connected_components(clipped, cfg.connectivity);

  BitMask cleaned(mask.width(), mask.height());
  bool kept_any = false;

  if (!blobs.empty()) {
    size_t main_idx = 0;  // blobs are area-descending, so default = largest
    if (state.prev_centroid) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < blobs.size(); ++i) {
        double d = distance(blobs[i].centroid_, *state.prev_centroid);
        if (d < best) {
          best = d;
          main_idx = i;
        }
      }
    }
    const Blob& main = blobs[main_idx];
    const double radius = std::sqrt(static_cast<double>(main.area) / M_PI);
    const double a_min = cfg.min_area_ratio * main.area;
    const double d_max = (main.area >= cfg.large_blob_cutoff
                              ? cfg.max_distance_ratio_large
                              : cfg.max_distance_ratio_small) *
                         radius;

    for (size_t i = 0; i < blobs.size(); ++i) {
      bool keep = false;
      if (i == main_idx) {
        keep = true;
      } else if (blobs[i].area >= a_min &&
                 contour_distance(blobs[i], main) <= d_max) {
        if (!state.prev_centroid) {
          keep = true;  // no previous centroid: distance gate cannot apply
        } else {
          double d_prev;
          if (cfg.prev_dist_from_contour) {
            d_prev = std::numeric_limits<double>::infinity();
            for (const auto& p : blobs[i].contour)
              d_prev = std::min(d_prev, distance(p, *state.prev_centroid));
          } else {
            d_prev = distance(blobs[i].centroid_, *state.prev_centroid);
          }
          keep = d_prev <= cfg.max_prev_dist;
        }
      }
      if (keep) {
        cleaned = mask_or(cleaned, blobs[i].mask);
        kept_any = true;
      }
    }
  }

  if (!kept_any) {
    if (state.is_first_frame)
      cleaned = mask;  // original mask, unclipped
    // otherwise cleaned stays empty
  }

  if (cleaned.area() > 0) state.prev_centroid = centroid(cleaned);
  state.is_first_frame = false;
  return {std::move(cleaned), std::move(state)};
}

}  // namespace herdtrack
