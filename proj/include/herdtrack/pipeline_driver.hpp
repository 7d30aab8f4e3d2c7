#pragma once

// Long-run orchestration: cross-clip matching, adaptive counting, and the
// driver chaining initializer -> tracker -> matcher -> post-QC.
// Included at the end of pipeline.hpp; not meant for direct inclusion.

#include <sstream>

namespace herdtrack {

struct MatcherState {
  // identities dropped by adaptive counting, with their last visible
  // appearance kept for later re-identification
  std::map<int, ReidCandidate> inactive;
};

struct MatchOutcome {
  bool ok = false;
  int anchor_frame = -1;
  std::vector<Instance> anchor_instances;
  std::vector<int> newly_excluded;
  std::vector<int> reactivated;
  std::string path;  // transfer | reid | reid-recover | (empty on failure)
};

namespace detail {

inline const Track* track_by_id(const std::vector<Track>& tracks, int id) {
  for (const auto& t : tracks)
    if (t.identity == id) return &t;
  return nullptr;
}

inline bool entry_valid(const Track& t, int frame, long long min_area) {
  auto it = t.entries.find(frame);
  return it != t.entries.end() && it->second.visible &&
         rle_area(it->second.mask) >= min_area;
}

/// Last frame in the look-back window of the previous clip where every given
/// identity has a sufficiently large mask and no two masks overlap.
inline std::optional<int> find_clean_prev_frame(
    const std::vector<Track>& live, const Clip& prev_clip,
    const PipelineConfig& cfg) {
  const int n = static_cast<int>(prev_clip.frames.size());
  for (int pos = n - 1; pos >= std::max(0, n - cfg.anchor_window); --pos) {
    int frame = prev_clip.frames[pos].index;
    bool ok = !live.empty();
    std::vector<BitMask> masks;
    std::vector<BoundingBox> boxes;
    std::vector<long long> areas;
    for (const auto& t : live) {
      if (!entry_valid(t, frame, cfg.qc_min_area)) {
        ok = false;
        break;
      }
      masks.push_back(rle_decode(t.entries.at(frame).mask));
      boxes.push_back(masks.back().bounding_box());
      areas.push_back(masks.back().area());
    }
    for (size_t i = 0; i < masks.size() && ok; ++i)
      for (size_t j = i + 1; j < masks.size() && ok; ++j)
        if (boxed_iou(masks[i], boxes[i], areas[i], masks[j], boxes[j],
                      areas[j]) > cfg.qc_overlap_threshold)
          ok = false;
    if (ok) return frame;
  }
  return std::nullopt;
}

/// Frame in the look-back window with the most valid (visible, large enough)
/// masks; latest wins ties.
inline int best_prev_frame(const std::vector<Track>& live,
                           const Clip& prev_clip, const PipelineConfig& cfg) {
  const int n = static_cast<int>(prev_clip.frames.size());
  int best_frame = prev_clip.frames[n - 1].index;
  int best_count = -1;
  for (int pos = n - 1; pos >= std::max(0, n - cfg.anchor_window); --pos) {
    int frame = prev_clip.frames[pos].index;
    int count = 0;
    for (const auto& t : live)
      if (entry_valid(t, frame, cfg.qc_min_area)) ++count;
    if (count > best_count) {
      best_count = count;
      best_frame = frame;
    }
  }
  return best_frame;
}

inline const FrameRecord* clip_frame(const Clip& clip, int frame) {
  for (const auto& f : clip.frames)
    if (f.index == frame) return &f;
  return nullptr;
}

inline ReidCandidate candidate_from_entry(const Track& t, int frame,
                                          const Clip* clip,
                                          const ReidConfig& reid_cfg,
                                          const Embedder& embedder) {
  ReidCandidate c;
  c.identity = t.identity;
  c.mask = t.entries.at(frame).mask;
  BitMask m = rle_decode(c.mask);
  c.centroid_ = centroid(m);
  if (clip) {
    const FrameRecord* rec = clip_frame(*clip, frame);
    if (rec && !rec->image.empty()) {
      GrayImage cr = crop(rec->image, m, reid_cfg.crop_pad);
      c.feature = embedder.embed(enhance_crop(cr, reid_cfg));
    }
  }
  return c;
}

inline ReidCandidate candidate_from_instance(const Instance& inst,
                                             const GrayImage& image,
                                             const ReidConfig& reid_cfg,
                                             const Embedder& embedder) {
  ReidCandidate c;
  c.identity = inst.identity.value_or(-1);
  c.mask = rle_encode(inst.mask);
  c.centroid_ = inst.centroid_;
  c.feature = instance_feature(inst, image, reid_cfg, embedder);
  return c;
}

}  // namespace detail

/// Links identities across a clip boundary. Tries, in order: full-count
/// detector recovery with re-identification (when identities are currently
/// excluded), direct mask transfer from a clean trailing frame, detector
/// anchor plus re-identification, and finally adaptive count reduction.
inline MatchOutcome match_clips(const std::vector<Track>& prev_tracks,
                                const Clip& prev_clip, const Clip& next_clip,
                                const Detector& detector,
                                const Propagator& propagator,
                                const Embedder& embedder,
                                const PenRegion& pen,
                                const ReidConfig& reid_cfg,
                                const PipelineConfig& cfg,
                                MatcherState& state) {
  MatchOutcome out;
  if (prev_tracks.empty() || next_clip.frames.empty()) return out;
  const int prev_end = prev_clip.frames.back().index;

  auto build_old_side = [&](const std::vector<Track>& live,
                            bool include_inactive) {
    int frame = detail::best_prev_frame(live, prev_clip, cfg);
    std::vector<ReidCandidate> old_side;
    for (const auto& t : live) {
      int use = -1;
      if (detail::entry_valid(t, frame, cfg.qc_min_area)) {
        use = frame;
      } else {
        // identity had no clean mask there (e.g. merged away): fall back to
        // its most recent valid appearance so it still takes part in reid
        for (auto it = t.entries.rbegin(); it != t.entries.rend(); ++it)
          if (it->second.visible &&
              rle_area(it->second.mask) >= cfg.qc_min_area) {
            use = it->first;
            break;
          }
      }
      if (use >= 0)
        old_side.push_back(detail::candidate_from_entry(
            t, use, detail::clip_frame(prev_clip, use) ? &prev_clip : nullptr,
            reid_cfg, embedder));
    }
    if (include_inactive)
      for (const auto& [id, cand] : state.inactive) old_side.push_back(cand);
    return old_side;
  };

  auto try_reid_anchor = [&](const Anchor& anchor,
                             const std::vector<Track>& live,
                             bool include_inactive) {
    std::vector<ReidCandidate> new_side;
    const FrameRecord* rec = detail::clip_frame(next_clip, anchor.frame_index);
    static const GrayImage kNoImage;
    const GrayImage& img = rec ? rec->image : kNoImage;
    for (const auto& inst : anchor.instances)
      new_side.push_back(
          detail::candidate_from_instance(inst, img, reid_cfg, embedder));
    ReidOutcome ro =
        assign_identities(new_side, build_old_side(live, include_inactive),
                          reid_cfg);
    out.anchor_frame = anchor.frame_index;
    out.anchor_instances = anchor.instances;
    for (size_t i = 0; i < out.anchor_instances.size(); ++i) {
      int id = ro.new_identities[i];
      out.anchor_instances[i].identity = id;
      auto iit = state.inactive.find(id);
      if (iit != state.inactive.end()) {
        out.reactivated.push_back(id);
        state.inactive.erase(iit);
      }
    }
    out.ok = true;
  };

  // (pre) detector recovery at full expected count when identities are out
  if (static_cast<int>(prev_tracks.size()) < cfg.expected_count &&
      !state.inactive.empty()) {
    auto anchor = find_reference_frame(next_clip, detector, pen, cfg);
    if (anchor) {
      try_reid_anchor(*anchor, prev_tracks, /*include_inactive=*/true);
      out.path = "reid-recover";
      return out;
    }
  }

  auto try_paths = [&](const std::vector<Track>& live) -> bool {
    // (a) direct transfer from a clean trailing frame
    auto clean = detail::find_clean_prev_frame(live, prev_clip, cfg);
    if (clean) {
      std::vector<PropagatorSeed> seeds;
      std::map<int, BitMask> prev_masks;
      for (const auto& t : live) {
        BitMask m = rle_decode(t.entries.at(*clean).mask);
        BoundingBox bb = m.bounding_box();
        seeds.push_back({t.identity, m, bb});
        prev_masks.emplace(t.identity, std::move(m));
      }
      std::map<int, BitMask> stepped;
      try {
        stepped = propagator.step(seeds, next_clip.frames[0]);
      } catch (const std::exception&) {
        stepped.clear();
      }
      out.anchor_frame = next_clip.frames[0].index;
      out.anchor_instances.clear();
      for (const auto& t : live) {
        BitMask m = stepped.count(t.identity) &&
                            stepped[t.identity].area() > 0
                        ? stepped[t.identity]
                        : prev_masks.at(t.identity);  // stale seed fallback
        Instance inst = Instance::from_mask(std::move(m));
        inst.identity = t.identity;
        out.anchor_instances.push_back(std::move(inst));
      }
      out.ok = true;
      out.path = "transfer";
      return true;
    }
    // (b) detector anchor within the next clip, identities restored by reid
    auto anchor = find_reference_frame(next_clip, detector, pen, cfg,
                                       static_cast<int>(live.size()));
    if (anchor) {
      try_reid_anchor(*anchor, live, /*include_inactive=*/false);
      out.path = "reid";
      return true;
    }
    return false;
  };

  if (try_paths(prev_tracks)) return out;

  // (c) reduce the expected count by recent visibility and retry
  AdaptiveCount ac =
      adaptive_count(prev_tracks, cfg.visibility_window, prev_end);
  if (!ac.excluded.empty() && ac.expected > 0) {
    std::vector<Track> reduced;
    for (const auto& t : prev_tracks) {
      if (std::find(ac.excluded.begin(), ac.excluded.end(), t.identity) !=
          ac.excluded.end()) {
        // remember the last visible appearance for later recovery
        int last_vis = -1;
        for (const auto& [f, e] : t.entries)
          if (e.visible) last_vis = std::max(last_vis, f);
        if (last_vis >= 0)
          state.inactive[t.identity] = detail::candidate_from_entry(
              t, last_vis, detail::clip_frame(prev_clip, last_vis) ? &prev_clip
                                                                   : nullptr,
              reid_cfg, embedder);
        out.newly_excluded.push_back(t.identity);
      } else {
        reduced.push_back(t);
      }
    }
    if (try_paths(reduced)) return out;
  }
  out.ok = false;
  return out;
}

struct ExcludedSpan {
  int clip_index = -1;
  int from = 0;
  int to = 0;
  std::string reason;
};

struct LongTermResult {
  std::vector<Track> tracks;
  std::vector<QcFlag> qc_flags;
  std::vector<ExcludedSpan> excluded_spans;
  std::vector<int> excluded_clips;
  std::vector<std::string> log;
};

namespace detail {

/// Clean re-track anchor nearest to an error span: a frame outside the span
/// where every live identity is visible, large enough, and non-overlapping.
inline std::optional<int> find_retrack_anchor(
    const std::vector<Track>& clip_tracks, const Clip& clip, int span_from,
    int span_to, const PipelineConfig& cfg) {
  auto clean_at = [&](int frame) {
    std::vector<BitMask> masks;
    std::vector<BoundingBox> boxes;
    std::vector<long long> areas;
    for (const auto& t : clip_tracks) {
      if (!entry_valid(t, frame, cfg.qc_min_area)) return false;
      masks.push_back(rle_decode(t.entries.at(frame).mask));
      boxes.push_back(masks.back().bounding_box());
      areas.push_back(masks.back().area());
    }
    for (size_t i = 0; i < masks.size(); ++i)
      for (size_t j = i + 1; j < masks.size(); ++j)
        if (boxed_iou(masks[i], boxes[i], areas[i], masks[j], boxes[j],
                      areas[j]) > cfg.qc_overlap_threshold)
          return false;
    return true;
  };
  const int first = clip.frames.front().index;
  const int last = clip.frames.back().index;
  for (int off = 1; off <= last - first; ++off) {
    int after = span_to + off;
    if (after <= last && clean_at(after)) return after;
    int before = span_from - off;
    if (before >= first && clean_at(before)) return before;
  }
  return std::nullopt;
}

}  // namespace detail

/// Full long-term run: initializer on the first usable clip, matcher across
/// boundaries, bidirectional tracking within clips, per-clip post-QC with a
/// single re-track attempt per error span. Per-clip failures are logged and
/// skipped, never fatal.
inline LongTermResult run_long_term(const std::vector<Clip>& clips,
                                    const Detector& detector,
                                    const Propagator& propagator,
                                    const Embedder& embedder,
                                    const PenRegion& pen,
                                    const RefineConfig& refine_cfg,
                                    const ReidConfig& reid_cfg,
                                    const PipelineConfig& cfg) {
  LongTermResult result;
  std::map<int, Track> all_tracks;
  MatcherState mstate;
  bool initialized = false;
  const Clip* prev_clip = nullptr;
  std::vector<int> live_ids;

  for (const Clip& clip : clips) {
    std::vector<Instance> anchor_insts;
    int anchor_frame = -1;

    if (!initialized) {
      auto anchor = find_reference_frame(clip, detector, pen, cfg);
      if (!anchor) {
        result.excluded_clips.push_back(clip.index);
        result.log.push_back("clip " + std::to_string(clip.index) +
                             ": no reference frame, excluded");
        continue;
      }
      anchor_frame = anchor->frame_index;
      anchor_insts = std::move(anchor->instances);
      for (size_t i = 0; i < anchor_insts.size(); ++i)
        anchor_insts[i].identity = static_cast<int>(i);
      initialized = true;
      result.log.push_back("clip " + std::to_string(clip.index) +
                           ": initialized at frame " +
                           std::to_string(anchor_frame));
    } else {
      std::vector<Track> live;
      for (int id : live_ids) live.push_back(all_tracks.at(id));
      MatchOutcome mo =
          match_clips(live, *prev_clip, clip, detector, propagator, embedder,
                      pen, reid_cfg, cfg, mstate);
      for (int id : mo.newly_excluded)
        result.log.push_back("clip " + std::to_string(clip.index) +
                             ": identity " + std::to_string(id) +
                             " excluded by adaptive count");
      for (int id : mo.reactivated)
        result.log.push_back("clip " + std::to_string(clip.index) +
                             ": identity " + std::to_string(id) +
                             " re-included");
      if (!mo.ok) {
        result.excluded_clips.push_back(clip.index);
        result.log.push_back("clip " + std::to_string(clip.index) +
                             ": no initialization path, excluded");
        continue;
      }
      anchor_frame = mo.anchor_frame;
      anchor_insts = std::move(mo.anchor_instances);
      result.log.push_back("clip " + std::to_string(clip.index) + ": " +
                           mo.path + " anchor at frame " +
                           std::to_string(anchor_frame));
    }

    std::vector<Track> clip_tracks = bidirectional_track(
        clip, anchor_frame, anchor_insts, propagator, pen, refine_cfg);

    // post-QC with one re-track attempt per error span
    QcReport qc = post_qc(clip_tracks, cfg);
    for (const auto& [from, to] : qc.error_spans) {
      auto retrack_anchor =
          detail::find_retrack_anchor(clip_tracks, clip, from, to, cfg);
      bool resolved = false;
      if (retrack_anchor) {
        std::vector<Instance> insts;
        bool buildable = true;
        for (const auto& t : clip_tracks) {
          const TrackEntry& e = t.entries.at(*retrack_anchor);
          BitMask m = rle_decode(e.mask);
          if (m.area() == 0) {
            buildable = false;
            break;
          }
          Instance inst = Instance::from_mask(std::move(m));
          inst.identity = t.identity;
          insts.push_back(std::move(inst));
        }
        if (buildable) {
          std::vector<Track> redone = bidirectional_track(
              clip, *retrack_anchor, insts, propagator, pen, refine_cfg);
          for (auto& t : clip_tracks)
            for (auto& rt : redone)
              if (rt.identity == t.identity)
                for (int f = from; f <= to; ++f) {
                  auto it = rt.entries.find(f);
                  if (it != rt.entries.end()) t.entries[f] = it->second;
                }
          QcReport recheck = post_qc(clip_tracks, cfg, from, to);
          resolved = recheck.flags.empty();
          result.log.push_back(
              "clip " + std::to_string(clip.index) + ": re-tracked span [" +
              std::to_string(from) + "," + std::to_string(to) + "] " +
              (resolved ? "resolved" : "unresolved"));
        }
      }
      if (!resolved)
        result.excluded_spans.push_back(
            {clip.index, from, to, "qc flags persisted after re-track"});
    }
    for (auto& f : qc.flags) result.qc_flags.push_back(std::move(f));

    live_ids.clear();
    for (auto& t : clip_tracks) {
      live_ids.push_back(t.identity);
      Track& global = all_tracks[t.identity];
      global.identity = t.identity;
      for (auto& [f, e] : t.entries) global.entries[f] = std::move(e);
    }
    prev_clip = &clip;
  }

  for (auto& [id, t] : all_tracks) result.tracks.push_back(std::move(t));
  return result;
}

}  // namespace herdtrack
