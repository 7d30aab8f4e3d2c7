#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "herdtrack/assignment.hpp"
#include "herdtrack/filters.hpp"
#include "herdtrack/mask.hpp"
#include "herdtrack/track.hpp"

namespace herdtrack {

struct DetectionCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn_ = 0;

  DetectionCounts& operator+=(const DetectionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn_ += o.fn_;
    return *this;
  }
};

inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
  double inter = std::max(0, x1 - x0) * static_cast<double>(std::max(0, y1 - y0));
  double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// One-to-one box matching maximizing matched pairs, then total IoU, with
/// pairs below the threshold ineligible.
inline DetectionCounts match_detections(const std::vector<Instance>& preds,
                                        const std::vector<Instance>& gts,
                                        double iou_threshold = 0.5) {
  DetectionCounts c;
  if (preds.empty() || gts.empty()) {
    c.fp = static_cast<long long>(preds.size());
    c.fn_ = static_cast<long long>(gts.size());
    return c;
  }
  const double kNoMatch = 1e6;  // dominates any number of valid pairs
  std::vector<std::vector<double>> cost(preds.size(),
                                        std::vector<double>(gts.size()));
  for (size_t i = 0; i < preds.size(); ++i)
    for (size_t j = 0; j < gts.size(); ++j) {
      double iou = box_iou(preds[i].bbox, gts[j].bbox);
      cost[i][j] = iou >= iou_threshold ? 1.0 - iou : kNoMatch;
    }
  AssignmentResult res = hungarian(cost);
  for (size_t i = 0; i < preds.size(); ++i) {
    int j = res.mapping[i];
    if (j >= 0 && cost[i][j] < kNoMatch) ++c.tp;
  }
  c.fp = static_cast<long long>(preds.size()) - c.tp;
  c.fn_ = static_cast<long long>(gts.size()) - c.tp;
  return c;
}

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline PrfScores precision_recall_f1(const DetectionCounts& c) {
  PrfScores s;
  if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn_ > 0) s.recall = static_cast<double>(c.tp) / (c.tp + c.fn_);
  if (s.precision + s.recall > 0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

struct SweepRow {
  double threshold = 0.0;
  DetectionCounts counts;
  PrfScores scores;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double best_threshold = 0.0;  // argmax F1 (first on ties)
};

/// Per-image scored detections against ground-truth boxes, filtered at each
/// confidence threshold.
inline SweepResult sweep_thresholds(
    const std::vector<std::vector<Instance>>& scored_preds,
    const std::vector<std::vector<Instance>>& gts,
    const std::vector<double>& thresholds, double iou_threshold = 0.5) {
  if (scored_preds.size() != gts.size())
    throw std::invalid_argument("sweep_thresholds: image count mismatch");
  SweepResult out;
  double best_f1 = -1.0;
  for (double thr : thresholds) {
    SweepRow row;
    row.threshold = thr;
    for (size_t img = 0; img < scored_preds.size(); ++img) {
      std::vector<Instance> kept;
      for (const auto& p : scored_preds[img])
        if (p.confidence >= thr) kept.push_back(p);
      row.counts += match_detections(kept, gts[img], iou_threshold);
    }
    row.scores = precision_recall_f1(row.counts);
    if (row.scores.f1 > best_f1) {
      best_f1 = row.scores.f1;
      out.best_threshold = thr;
    }
    out.rows.push_back(row);
  }
  return out;
}

inline double jaccard(const BitMask& pred, const BitMask& gt) {
  return mask_iou(pred, gt);
}

inline int default_boundary_tolerance(int width, int height) {
  return static_cast<int>(std::ceil(
      0.008 * std::hypot(static_cast<double>(width), static_cast<double>(height))));
}

///// Contour F-measure: precision/recall of boundary pixels within `tolerance`
/// of the other mask's boundary. Both contours empty -> 1, one empty -> 0.
inline double boundary_f(const BitMask& pred, const BitMask& gt,
                         int tolerance) {
  if (!pred.same_size(gt))
    throw std::invalid_argument("boundary_f: dimension mismatch");
  auto cp = contour_points(pred);
  auto cg = contour_points(gt);
  if (cp.empty() && cg.empty()) return 1.0;
  if (cp.empty() || cg.empty()) return 0.0;
  const double tol2 = static_cast<double>(tolerance) * tolerance;
  auto near_count = [&](const std::vector<Point>& from,
                        const std::vector<Point>& to) {
    long long n = 0;
    for (const auto& p : from) {
      for (const auto& q : to) {
        double dx = p.x - q.x, dy = p.y - q.y;
        if (dx * dx + dy * dy <= tol2) {
          ++n;
          break;
        }
      }
    }
    return n;
  };
  double pc = static_cast<double>(near_count(cp, cg)) / cp.size();
  double rc = static_cast<double>(near_count(cg, cp)) / cg.size();
  if (pc + rc == 0) return 0.0;
  return 2.0 * pc * rc / (pc + rc);
}

struct IdentityScore {
  int gt_identity = -1;
  int pred_identity = -1;
  double j = 0.0;
  double f = 0.0;
  int frames = 0;
};

struct FrameSegScore {
  int frame = 0;
  double j = 0.0;
  double f = 0.0;
};

struct SegScore {
  double j = 0.0;
  double f = 0.0;
  double jf = 0.0;
  std::vector<IdentityScore> per_id;
  std::vector<FrameSegScore> per_frame;
};

namespace detail {

/// Optimal one-time gt -> pred identity bijection by total mask IoU over the
/// annotated frames. Predicted identities are arbitrary labels, so scoring
/// needs a global alignment first.
inline std::map<int, int> align_identities(const std::vector<Track>& preds,
                                           const std::vector<Track>& gts) {
  if (preds.empty() || gts.empty()) return {};
  // the bijection only needs a representative sample of annotated frames
  std::set<int> all_frames;
  for (const auto& t : gts)
    for (const auto& [f, e] : t.entries) all_frames.insert(f);
  std::set<int> sample;
  size_t stride = std::max<size_t>(1, all_frames.size() / 25);
  size_t k = 0;
  for (int f : all_frames)
    if (k++ % stride == 0) sample.insert(f);
  std::vector<std::vector<double>> cost(
      gts.size(), std::vector<double>(preds.size(), 0.0));
  for (size_t g = 0; g < gts.size(); ++g)
    for (const auto& [frame, ge] : gts[g].entries) {
      if (!ge.visible || !sample.count(frame)) continue;
      BitMask gm = rle_decode(ge.mask);
      for (size_t p = 0; p < preds.size(); ++p) {
        auto it = preds[p].entries.find(frame);
        if (it == preds[p].entries.end() || !it->second.visible) continue;
        cost[g][p] -= mask_iou(gm, rle_decode(it->second.mask));
      }
    }
  AssignmentResult res = hungarian(cost);
  std::map<int, int> mapping;
  for (size_t g = 0; g < gts.size(); ++g)
    if (res.mapping[g] >= 0)
      mapping[gts[g].identity] = preds[res.mapping[g]].identity;
  return mapping;
}

}  // namespace detail

/// Region similarity and contour accuracy on the (possibly sparse) set of
/// ground-truth annotated frames. A gt frame missing from the predictions
/// counts as J = F = 0 for the identities annotated there.
inline SegScore jf_series(const std::vector<Track>& pred_tracks,
                          const std::vector<Track>& gt_tracks,
                          int tolerance = 0) {
  SegScore out;
  if (gt_tracks.empty()) return out;
  std::map<int, int> gt_to_pred = detail::align_identities(pred_tracks, gt_tracks);
  std::map<int, const Track*> pred_by_id;
  for (const auto& t : pred_tracks) pred_by_id[t.identity] = &t;

  int frame_w = 0, frame_h = 0;
  std::map<int, std::pair<double, int>> frame_j, frame_f;
  double j_sum = 0, f_sum = 0;
  long long n = 0;

  for (const auto& gt : gt_tracks) {
    IdentityScore ids;
    ids.gt_identity = gt.identity;
    auto mit = gt_to_pred.find(gt.identity);
    const Track* pt = nullptr;
    if (mit != gt_to_pred.end()) {
      ids.pred_identity = mit->second;
      pt = pred_by_id.at(mit->second);
    }
    for (const auto& [frame, ge] : gt.entries) {
      BitMask gm = rle_decode(ge.mask);
      if (frame_w == 0) {
        frame_w = gm.width();
        frame_h = gm.height();
      }
      int tol = tolerance > 0 ? tolerance
                              : default_boundary_tolerance(gm.width(), gm.height());
      double j = 0, f = 0;
      const TrackEntry* pe = nullptr;
      if (pt) {
        auto it = pt->entries.find(frame);
        if (it != pt->entries.end()) pe = &it->second;
      }
      if (pe) {
        BitMask pm = pe->visible ? rle_decode(pe->mask)
                                 : BitMask(gm.width(), gm.height());
        j = jaccard(pm, gm);
        f = boundary_f(pm, gm, tol);
      }
      ids.j += j;
      ids.f += f;
      ++ids.frames;
      j_sum += j;
      f_sum += f;
      ++n;
      frame_j[frame].first += j;
      ++frame_j[frame].second;
      frame_f[frame].first += f;
      ++frame_f[frame].second;
    }
    if (ids.frames > 0) {
      ids.j /= ids.frames;
      ids.f /= ids.frames;
    }
    out.per_id.push_back(ids);
  }

  if (n > 0) {
    out.j = j_sum / n;
    out.f = f_sum / n;
  }
  out.jf = (out.j + out.f) / 2.0;
  for (const auto& [frame, jp] : frame_j) {
    FrameSegScore fs;
    fs.frame = frame;
    fs.j = jp.first / jp.second;
    fs.f = frame_f[frame].first / frame_f[frame].second;
    out.per_frame.push_back(fs);
  }
  return out;
}

struct FrameMotCounts {
  int frame = 0;
  long long gt = 0;
  long long fn_ = 0;
  long long fp = 0;
  long long idsw = 0;
  double matched_iou_sum = 0.0;
  long long matches = 0;
};

struct MotResult {
  double mota = 0.0;
  double motp = 0.0;
  long long gt_total = 0;
  long long fn_ = 0;
  long long fp = 0;
  long long idsw = 0;
  long long matches = 0;
  std::vector<FrameMotCounts> per_frame;
};

inline double mota_from_counts(long long fn, long long fp, long long idsw,
                               long long gt_total) {
  if (gt_total == 0) return fn + fp + idsw == 0 ? 1.0 : 0.0;
  return 1.0 - static_cast<double>(fn + fp + idsw) / gt_total;
}

///// CLEAR-MOT with sticky correspondences: a gt <-> prediction pair from the
/// previous frame is kept while its IoU stays at or above the threshold;
/// leftovers are matched by optimal assignment maximizing IoU. An identity
/// switch is counted when a gt's matched predicted identity differs from its
/// last recorded match.
inline MotResult mot_evaluate(const std::vector<Track>& pred_tracks,
                              const std::vector<Track>& gt_tracks,
                              double iou_threshold = 0.5) {
  MotResult out;
  std::set<int> frames;
  for (const auto& t : gt_tracks)
    for (const auto& [f, e] : t.entries) frames.insert(f);

  std::map<int, int> corr;        // gt id -> pred id carried across frames
  std::map<int, int> last_match;  // gt id -> last matched pred id ever

  for (int frame : frames) {
    FrameMotCounts fc;
    fc.frame = frame;
    std::vector<std::pair<int, BitMask>> gt_masks, pred_masks;
    for (const auto& t : gt_tracks) {
      auto it = t.entries.find(frame);
      if (it != t.entries.end() && it->second.visible)
        gt_masks.emplace_back(t.identity, rle_decode(it->second.mask));
    }
    for (const auto& t : pred_tracks) {
      auto it = t.entries.find(frame);
      if (it != t.entries.end() && it->second.visible)
        pred_masks.emplace_back(t.identity, rle_decode(it->second.mask));
    }
    fc.gt = static_cast<long long>(gt_masks.size());

    std::vector<bool> gt_done(gt_masks.size(), false), pred_done(pred_masks.size(), false);
    std::vector<std::pair<size_t, size_t>> matched;  // (gt idx, pred idx)

    // carry forward still-valid correspondences
    for (size_t g = 0; g < gt_masks.size(); ++g) {
      auto cit = corr.find(gt_masks[g].first);
      if (cit == corr.end()) continue;
      for (size_t p = 0; p < pred_masks.size(); ++p) {
        if (pred_done[p] || pred_masks[p].first != cit->second) continue;
        double iou = mask_iou(gt_masks[g].second, pred_masks[p].second);
        if (iou >= iou_threshold) {
          matched.emplace_back(g, p);
          gt_done[g] = true;
          pred_done[p] = true;
          fc.matched_iou_sum += iou;
        }
        break;
      }
    }

    // optimal assignment over the remainder
    std::vector<size_t> gs, ps;
    for (size_t g = 0; g < gt_masks.size(); ++g)
      if (!gt_done[g]) gs.push_back(g);
    for (size_t p = 0; p < pred_masks.size(); ++p)
      if (!pred_done[p]) ps.push_back(p);
    if (!gs.empty() && !ps.empty()) {
      const double kNoMatch = 1e6;
      std::vector<std::vector<double>> cost(gs.size(),
                                            std::vector<double>(ps.size()));
      std::vector<std::vector<double>> ious(gs.size(),
                                            std::vector<double>(ps.size()));
      for (size_t a = 0; a < gs.size(); ++a)
        for (size_t b = 0; b < ps.size(); ++b) {
          double iou = mask_iou(gt_masks[gs[a]].second, pred_masks[ps[b]].second);
          ious[a][b] = iou;
          cost[a][b] = iou >= iou_threshold ? 1.0 - iou : kNoMatch;
        }
      AssignmentResult res = hungarian(cost);
      for (size_t a = 0; a < gs.size(); ++a) {
        int b = res.mapping[a];
        if (b >= 0 && cost[a][b] < kNoMatch) {
          matched.emplace_back(gs[a], ps[b]);
          fc.matched_iou_sum += ious[a][b];
        }
      }
    }

    fc.matches = static_cast<long long>(matched.size());
    fc.fn_ = fc.gt - fc.matches;
    fc.fp = static_cast<long long>(pred_masks.size()) - fc.matches;

    std::map<int, int> new_corr;
    for (const auto& [g, p] : matched) {
      int gid = gt_masks[g].first, pid = pred_masks[p].first;
      auto lit = last_match.find(gid);
      if (lit != last_match.end() && lit->second != pid) ++fc.idsw;
      last_match[gid] = pid;
      new_corr[gid] = pid;
    }
    // keep stale correspondences for gts unmatched this frame
    for (const auto& [gid, pid] : corr)
      if (!new_corr.count(gid)) new_corr[gid] = pid;
    corr = std::move(new_corr);

    out.gt_total += fc.gt;
    out.fn_ += fc.fn_;
    out.fp += fc.fp;
    out.idsw += fc.idsw;
    out.matches += fc.matches;
    out.per_frame.push_back(fc);
  }

  double iou_total = 0;
  for (const auto& fc : out.per_frame) iou_total += fc.matched_iou_sum;
  out.mota = mota_from_counts(out.fn_, out.fp, out.idsw, out.gt_total);
  out.motp = out.matches > 0 ? iou_total / out.matches : 0.0;
  return out;
}

}  // namespace herdtrack
