#pragma once

#include <algorithm>
#include <climits>
#include <map>
#include <numeric>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "herdtrack/filters.hpp"
#include "herdtrack/mask.hpp"
#include "herdtrack/refine.hpp"
#include "herdtrack/reid.hpp"
#include "herdtrack/track.hpp"

namespace herdtrack {

struct PipelineConfig {
  int scan_stride = 10;          // initializer frame stride
  int expected_count = 10;       // nominal animal count
  int anchor_window = 10;        // matcher look-back frames
  double detection_threshold = 0.24;
  double qc_overlap_threshold = 0.08;
  long long qc_min_area = 25;    // pixels
  double qc_teleport_dist = 200.0;
  int visibility_window = 600;   // adaptive-count trailing memory, frames
  double pen_min_fraction = 0.40;
  double nms_overlap_threshold = 0.08;
  size_t topk_expected = 10;
  size_t topk_trigger = 15;
};

struct QcFlag {
  enum class Reason { Overlap, NearZeroArea, Teleport };
  int frame = 0;
  Reason reason = Reason::Overlap;
  std::vector<int> identities;
  double value = 0.0;  // measured IoU / area / jump distance
};

inline const char* to_string(QcFlag::Reason r) {
  switch (r) {
    case QcFlag::Reason::Overlap: return "overlap";
    case QcFlag::Reason::NearZeroArea: return "near_zero_area";
    case QcFlag::Reason::Teleport: return "teleport";
  }
  return "?";
}

/// Detection contract standing in for a promptable open-vocabulary detector.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Instance> detect(const FrameRecord& frame) const = 0;
};

/// Reads pre-computed detections from the frame record, filtered at the
/// confidence threshold.
class ReferenceDetector : public Detector {
 public:
  explicit ReferenceDetector(double threshold = 0.24) : threshold_(threshold) {}
  std::vector<Instance> detect(const FrameRecord& frame) const override {
    std::vector<Instance> out;
    for (const auto& det : frame.detections) {
      if (det.confidence < threshold_) continue;
      if (rle_area(det.rle) == 0) continue;
      Instance inst = Instance::from_mask(rle_decode(det.rle), det.confidence);
      inst.embedding = det.embedding;
      out.push_back(std::move(inst));
    }
    return out;
  }

 private:
  double threshold_;
};

/// Per-identity previous state fed to a propagation step, ordered by the
/// caller; `mask` is the identity's last nonempty mask.
struct PropagatorSeed {
  int identity = -1;
  BitMask mask;
  BoundingBox bbox;
};

/// Frame-to-frame mask propagation contract (the stand-in for a video
/// foundation model's memory attention).
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual std::map<int, BitMask> step(const std::vector<PropagatorSeed>& prev,
                                      const FrameRecord& frame) const = 0;
};

namespace detail {

inline long long boxed_intersection(const BitMask& a, const BoundingBox& ba,
                                    const BitMask& b, const BoundingBox& bb) {
  int x0 = std::max(ba.x, bb.x), y0 = std::max(ba.y, bb.y);
  int x1 = std::min(ba.x + ba.w, bb.x + bb.w);
  int y1 = std::min(ba.y + ba.h, bb.y + bb.h);
  long long inter = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (a.get(x, y) && b.get(x, y)) ++inter;
  return inter;
}

inline double boxed_iou(const BitMask& a, const BoundingBox& ba, long long area_a,
                        const BitMask& b, const BoundingBox& bb, long long area_b) {
  long long inter = boxed_intersection(a, ba, b, bb);
  long long uni = area_a + area_b - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / uni;
}

}  // namespace detail

/// Greedy foreground-component tracker: each identity, in descending
/// previous-mask area, claims the unconsumed connected component of the
/// frame's foreground with the highest IoU against its previous mask
/// (IoU > 0 required). Unclaimed identities get an empty mask.
class ReferencePropagator : public Propagator {
 public:
  explicit ReferencePropagator(int connectivity = 8)
      : connectivity_(connectivity) {}

  std::map<int, BitMask> step(const std::vector<PropagatorSeed>& prev,
                              const FrameRecord& frame) const override {
    BitMask fg = rle_decode(frame.foreground);
    std::vector<Blob> comps = connected_components(fg, connectivity_);
    std::vector<bool> used(comps.size(), false);

    std::vector<size_t> order(prev.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return prev[a].mask.area() > prev[b].mask.area();
    });

    std::map<int, BitMask> out;
    for (size_t k : order) {
      const PropagatorSeed& seed = prev[k];
      long long seed_area = seed.mask.area();
      double best = 0.0;
      int best_c = -1;
      for (size_t c = 0; c < comps.size(); ++c) {
        if (used[c]) continue;
        double iou = detail::boxed_iou(seed.mask, seed.bbox, seed_area,
                                       comps[c].mask, comps[c].bbox,
                                       comps[c].area);
        if (iou > best) {
          best = iou;
          best_c = static_cast<int>(c);
        }
      }
      if (best_c >= 0) {
        used[best_c] = true;
        out[seed.identity] = comps[best_c].mask;
      } else {
        out[seed.identity] = BitMask(fg.width(), fg.height());
      }
    }
    return out;
  }

 private:
  int connectivity_;
};

enum class Direction { Forward, Backward };

struct RefineHook {
  const PenRegion* pen = nullptr;
  const RefineConfig* cfg = nullptr;
  std::map<int, RefineState>* states = nullptr;
};

struct PropagationResult {
  // identity -> frame index -> mask
  std::map<int, std::map<int, RleMask>> masks;
  std::vector<int> failed_frames;
};

/// Propagates anchor instances across the clip in one direction, starting at
/// the frame after (or before) the anchor. A propagator failure on a frame
/// flags that frame and emits empty masks; propagation continues.
inline PropagationResult propagate(const std::vector<Instance>& anchor_instances,
                                   const Clip& clip, int anchor_frame,
                                   Direction direction,
                                   const Propagator& propagator,
                                   const RefineHook* refine = nullptr) {
  PropagationResult result;
  int anchor_pos = -1;
  for (size_t i = 0; i < clip.frames.size(); ++i)
    if (clip.frames[i].index == anchor_frame) {
      anchor_pos = static_cast<int>(i);
      break;
    }
  if (anchor_pos < 0)
    throw std::invalid_argument("propagate: anchor frame not in clip");

  struct Live {
    int identity;
    BitMask last;  // last nonempty mask
    BoundingBox bbox;
  };
  std::vector<Live> live;
  for (const auto& inst : anchor_instances) {
    if (!inst.identity)
      throw std::invalid_argument("propagate: anchor identity unset");
    live.push_back({*inst.identity, inst.mask, inst.bbox});
  }

  const int step = direction == Direction::Forward ? 1 : -1;
  for (int pos = anchor_pos + step;
       pos >= 0 && pos < static_cast<int>(clip.frames.size()); pos += step) {
    const FrameRecord& frame = clip.frames[pos];
    std::vector<PropagatorSeed> seeds;
    for (const auto& l : live) seeds.push_back({l.identity, l.last, l.bbox});
    std::map<int, BitMask> masks;
    bool failed = false;
    try {
      masks = propagator.step(seeds, frame);
    } catch (const std::exception&) {
      failed = true;
    }
    if (failed) {
      result.failed_frames.push_back(frame.index);
      for (const auto& l : live)
        masks[l.identity] = BitMask(clip.width, clip.height);
    }
    for (auto& l : live) {
      BitMask m = masks.count(l.identity)
                      ? std::move(masks[l.identity])
                      : BitMask(clip.width, clip.height);
      if (refine) {
        RefineResult rr =
            refine_mask(m, *refine->pen, (*refine->states)[l.identity],
                        *refine->cfg);
        (*refine->states)[l.identity] = rr.state;
        m = std::move(rr.cleaned);
      }
      if (m.area() > 0) {
        l.last = m;
        l.bbox = m.bounding_box();
      }
      result.masks[l.identity][frame.index] = rle_encode(m);
    }
  }
  return result;
}

/// Bidirectional tracking from an anchor: forward to the clip end, backward
/// to the clip start, merged so every frame carries exactly one entry per
/// identity. Anchor at the first frame degenerates to forward-only.
inline std::vector<Track> bidirectional_track(
    const Clip& clip, int anchor_frame,
    const std::vector<Instance>& anchor_instances,
    const Propagator& propagator, const PenRegion& pen,
    const RefineConfig& refine_cfg, bool apply_refine = true) {
  std::map<int, RefineState> states;
  std::vector<Instance> anchors = anchor_instances;
  // refine the anchor masks first; the resulting state seeds both passes
  if (apply_refine) {
    for (auto& inst : anchors) {
      RefineResult rr =
          refine_mask(inst.mask, pen, RefineState{}, refine_cfg);
      states[*inst.identity] = rr.state;
      if (rr.cleaned.area() > 0) {
        inst.mask = std::move(rr.cleaned);
        inst.bbox = inst.mask.bounding_box();
        inst.centroid_ = centroid(inst.mask);
      }
    }
  }

  std::map<int, RefineState> fwd_states = states, bwd_states = states;
  RefineHook fwd_hook{&pen, &refine_cfg, &fwd_states};
  RefineHook bwd_hook{&pen, &refine_cfg, &bwd_states};

  PropagationResult fwd =
      propagate(anchors, clip, anchor_frame, Direction::Forward, propagator,
                apply_refine ? &fwd_hook : nullptr);
  PropagationResult bwd =
      propagate(anchors, clip, anchor_frame, Direction::Backward, propagator,
                apply_refine ? &bwd_hook : nullptr);

  std::vector<Track> tracks;
  for (const auto& inst : anchors) {
    Track t;
    t.identity = *inst.identity;
    TrackEntry anchor_entry;
    anchor_entry.visible = inst.mask.area() > 0;
    anchor_entry.mask = rle_encode(inst.mask);
    t.entries[anchor_frame] = std::move(anchor_entry);
    for (const auto* pass : {&fwd, &bwd}) {
      auto it = pass->masks.find(t.identity);
      if (it == pass->masks.end()) continue;
      for (const auto& [frame, rle] : it->second) {
        TrackEntry e;
        e.visible = rle_area(rle) > 0;
        e.mask = rle;
        t.entries[frame] = std::move(e);
      }
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

struct Anchor {
  int frame_index = 0;
  std::vector<Instance> instances;
};

/// Scans every scan_stride-th frame for one holding exactly expected_count
/// high-confidence, pairwise non-overlapping instances fully inside the pen.
inline std::optional<Anchor> find_reference_frame(const Clip& clip,
                                                  const Detector& detector,
                                                  const PenRegion& pen,
                                                  const PipelineConfig& cfg,
                                                  int expected_override = -1) {
  if (clip.frames.empty())
    throw std::invalid_argument("find_reference_frame: empty clip");
  const int expected =
      expected_override > 0 ? expected_override : cfg.expected_count;
  for (size_t pos = 0; pos < clip.frames.size();
       pos += static_cast<size_t>(cfg.scan_stride)) {
    std::vector<Instance> dets = detector.detect(clip.frames[pos]);
    dets = select_top_k(dets, cfg.topk_expected, cfg.topk_trigger);
    dets = pen_filter(dets, pen, cfg.pen_min_fraction);
    dets = mask_nms(dets, cfg.nms_overlap_threshold);
    if (static_cast<int>(dets.size()) != expected) continue;
    bool ok = true;
    for (const auto& d : dets)
      if (pen_inside_fraction(d.mask, pen) < 1.0) {
        ok = false;
        break;
      }
    for (size_t i = 0; i < dets.size() && ok; ++i)
      for (size_t j = i + 1; j < dets.size() && ok; ++j)
        if (mask_iou(dets[i].mask, dets[j].mask) > cfg.qc_overlap_threshold)
          ok = false;
    if (ok) return Anchor{clip.frames[pos].index, std::move(dets)};
  }
  return std::nullopt;
}

struct AdaptiveCount {
  int expected = 0;
  std::vector<int> excluded;
};

/// Excludes every identity whose mask was empty for the entire trailing
/// window ending at `end_frame` (inclusive).
inline AdaptiveCount adaptive_count(const std::vector<Track>& prev,
                                    int window, int end_frame) {
  AdaptiveCount out;
  for (const auto& t : prev) {
    bool seen = false;
    for (int f = end_frame; f > end_frame - window; --f)
      if (t.visible_at(f)) {
        seen = true;
        break;
      }
    if (seen)
      ++out.expected;
    else
      out.excluded.push_back(t.identity);
  }
  return out;
}

struct QcReport {
  std::vector<QcFlag> flags;
  std::vector<std::pair<int, int>> error_spans;  // inclusive frame ranges
};

/// Flags frames with overlapping identities, near-zero-area masks, or
/// centroid teleports between adjacent visible frames; consecutive flagged
/// frames coalesce into error spans.
inline QcReport post_qc(const std::vector<Track>& tracks,
                        const PipelineConfig& cfg, int from_frame = INT_MIN,
                        int to_frame = INT_MAX) {
  QcReport report;
  std::set<int> frames;
  for (const auto& t : tracks)
    for (const auto& [f, e] : t.entries)
      if (f >= from_frame && f <= to_frame) frames.insert(f);

  struct Cached {
    int identity;
    BitMask mask;
    BoundingBox bbox;
    long long area;
    Point c;
  };
  std::map<int, std::optional<Point>> prev_centroid;  // at previous frame
  std::set<int> flagged;

  int last_frame = INT_MIN;
  for (int frame : frames) {
    std::vector<Cached> vis;
    for (const auto& t : tracks) {
      auto it = t.entries.find(frame);
      if (it == t.entries.end() || !it->second.visible) continue;
      Cached c;
      c.identity = t.identity;
      c.mask = rle_decode(it->second.mask);
      c.area = c.mask.area();
      if (c.area == 0) continue;
      c.bbox = c.mask.bounding_box();
      c.c = centroid(c.mask);
      vis.push_back(std::move(c));
    }

    for (size_t i = 0; i < vis.size(); ++i)
      for (size_t j = i + 1; j < vis.size(); ++j) {
        double iou = detail::boxed_iou(vis[i].mask, vis[i].bbox, vis[i].area,
                                       vis[j].mask, vis[j].bbox, vis[j].area);
        if (iou > cfg.qc_overlap_threshold) {
          report.flags.push_back({frame, QcFlag::Reason::Overlap,
                                  {vis[i].identity, vis[j].identity}, iou});
          flagged.insert(frame);
        }
      }
    for (const auto& v : vis)
      if (v.area < cfg.qc_min_area) {
        report.flags.push_back({frame, QcFlag::Reason::NearZeroArea,
                                {v.identity}, static_cast<double>(v.area)});
        flagged.insert(frame);
      }
    if (frame == last_frame + 1) {
      for (const auto& v : vis) {
        auto pit = prev_centroid.find(v.identity);
        if (pit != prev_centroid.end() && pit->second) {
          double d = distance(v.c, *pit->second);
          if (d > cfg.qc_teleport_dist) {
            report.flags.push_back(
                {frame, QcFlag::Reason::Teleport, {v.identity}, d});
            flagged.insert(frame);
          }
        }
      }
    }
    prev_centroid.clear();
    for (const auto& v : vis) prev_centroid[v.identity] = v.c;
    last_frame = frame;
  }

  int span_start = INT_MIN, span_prev = INT_MIN;
  for (int f : flagged) {
    if (span_start == INT_MIN) {
      span_start = span_prev = f;
    } else if (f == span_prev + 1) {
      span_prev = f;
    } else {
      report.error_spans.emplace_back(span_start, span_prev);
      span_start = span_prev = f;
    }
  }
  if (span_start != INT_MIN)
    report.error_spans.emplace_back(span_start, span_prev);
  return report;
}

}  // namespace herdtrack

#include "herdtrack/pipeline_driver.hpp"
