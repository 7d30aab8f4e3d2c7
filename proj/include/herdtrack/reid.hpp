#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "herdtrack/assignment.hpp"
#include "herdtrack/filters.hpp"
#include "herdtrack/image.hpp"
#include "herdtrack/mask.hpp"

namespace herdtrack {

struct FeatureVector {
  std::vector<float> values;
  double norm = 0.0;

  FeatureVector() = default;
  explicit FeatureVector(std::vector<float> v) : values(std::move(v)) {
    double s = 0;
    for (float x : values) s += static_cast<double>(x) * x;
    norm = std::sqrt(s);
  }
  bool empty() const { return values.empty(); }
};

struct ReidConfig {
  double alpha = 0.5;    // appearance (cosine) weight
  double beta = 0.3;     // mask IoU weight
  double gamma_w = 0.2;  // centroid proximity weight
  double d_max = 0.0;    // pixels; <= 0 means "use the image diagonal"
  double gamma_correction = 0.6;
  int crop_pad = 4;

  void normalize_weights() {
    double s = alpha + beta + gamma_w;
    if (s <= 0) throw std::invalid_argument("ReidConfig: weights sum to zero");
    alpha /= s;
    beta /= s;
    gamma_w /= s;
  }

  double effective_d_max(int frame_w, int frame_h) const {
    if (d_max > 0) return d_max;
    return std::hypot(static_cast<double>(frame_w),
                      static_cast<double>(frame_h));
  }
};

/// Gamma correction followed by histogram equalization over the nonzero
/// (in-mask) pixels. Zero background pixels are left untouched; a constant
/// in-mask image maps to itself.
inline GrayImage enhance_crop(const GrayImage& crop_img,
                              const ReidConfig& cfg) {
  if (crop_img.empty()) throw std::invalid_argument("enhance_crop: empty crop");
  GrayImage out = crop_img;
  for (auto& p : out.pixels)
    if (p != 0)
      p = static_cast<uint8_t>(
          std::lround(255.0 * std::pow(p / 255.0, cfg.gamma_correction)));

  long long hist[256] = {0};
  long long total = 0;
  for (auto p : out.pixels)
    if (p != 0) {
      ++hist[p];
      ++total;
    }
  if (total == 0) return out;

  long long cdf[256];
  long long acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[v];
    cdf[v] = acc;
  }
  long long cdf_min = 0;
  for (int v = 0; v < 256; ++v)
    if (hist[v] > 0) {
      cdf_min = cdf[v];
      break;
    }
  if (cdf_min == total) return out;  // single-bin histogram: identity

  for (auto& p : out.pixels)
    if (p != 0)
      p = static_cast<uint8_t>(std::clamp<long>(
          std::lround(255.0 * static_cast<double>(cdf[p] - cdf_min) /
                      static_cast<double>(total - cdf_min)),
          0L, 255L));
  return out;
}

/// Pluggable feature extractor over an enhanced crop.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual FeatureVector embed(const GrayImage& crop_img) const = 0;
  virtual int dimension() const = 0;
};

/// Deterministic stand-in for a frozen vision encoder: crop resized to
/// 32x32 by area averaging, concatenated with a 16-bin intensity histogram.
class ReferenceEmbedder : public Embedder {
 public:
  FeatureVector embed(const GrayImage& crop_img) const override {
    if (crop_img.empty())
      throw std::invalid_argument("embed: empty crop");
    GrayImage small = resize_area(crop_img, 32, 32);
    std::vector<float> values;
    values.reserve(1040);
    float hist[16] = {0};
    for (auto p : small.pixels) {
      float v = p / 255.0f;
      values.push_back(v);
      hist[std::min(15, p / 16)] += 1.0f;
    }
    for (float h : hist) values.push_back(h / 1024.0f);
    return FeatureVector(std::move(values));
  }
  int dimension() const override { return 1040; }
};

inline double cosine_similarity(const FeatureVector& a,
                                const FeatureVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  if (a.norm == 0.0 || b.norm == 0.0)
    throw std::runtime_error("cosine_similarity: zero-norm vector");
  double dot = 0;
  for (size_t i = 0; i < a.values.size(); ++i)
    dot += static_cast<double>(a.values[i]) * b.values[i];
  return dot / (a.norm * b.norm);
}

/// 1 - distance/d_max, clamped below at 0.
inline double centroid_similarity(const Point& c_new, const Point& c_old,
                                  double d_max) {
  if (d_max <= 0) throw std::invalid_argument("centroid_similarity: d_max <= 0");
  return std::max(0.0, 1.0 - distance(c_new, c_old) / d_max);
}

/// One side of the re-identification cost: an instance plus its feature.
struct ReidCandidate {
  int identity = -1;
  RleMask mask;
  Point centroid_;
  FeatureVector feature;  // may be empty when no image/embedding exists
};

/// Cost[i][j] = 1 - (alpha*S_cos + beta*S_IoU + gamma*S_centroid).
/// Pairs where either feature is missing score S_cos = 0.
inline std::vector<std::vector<double>> build_cost_matrix(
    const std::vector<ReidCandidate>& new_side,
    const std::vector<ReidCandidate>& old_side, const ReidConfig& cfg) {
  std::vector<std::vector<double>> cost(
      new_side.size(), std::vector<double>(old_side.size(), 1.0));
  if (new_side.empty() || old_side.empty()) return cost;
  const double dmax =
      cfg.effective_d_max(new_side[0].mask.width, new_side[0].mask.height);
  std::vector<BitMask> new_masks, old_masks;
  for (const auto& c : new_side) new_masks.push_back(rle_decode(c.mask));
  for (const auto& c : old_side) old_masks.push_back(rle_decode(c.mask));
  for (size_t i = 0; i < new_side.size(); ++i)
    for (size_t j = 0; j < old_side.size(); ++j) {
      double s_cos = 0.0;
      if (!new_side[i].feature.empty() && !old_side[j].feature.empty())
        s_cos = cosine_similarity(new_side[i].feature, old_side[j].feature);
      double s_iou = mask_iou(new_masks[i], old_masks[j]);
      double s_cent =
          centroid_similarity(new_side[i].centroid_, old_side[j].centroid_, dmax);
      cost[i][j] =
          1.0 - (cfg.alpha * s_cos + cfg.beta * s_iou + cfg.gamma_w * s_cent);
    }
  return cost;
}

struct ReidOutcome {
  AssignmentResult assignment;       // new index -> old index
  std::vector<int> new_identities;   // per new instance, resolved identity
  std::vector<int> missing_old_ids;  // old identities left unmatched
};

inline ReidOutcome assign_identities(
    const std::vector<ReidCandidate>& new_side,
    const std::vector<ReidCandidate>& old_side, const ReidConfig& cfg) {
  ReidOutcome out;
  out.assignment = hungarian(build_cost_matrix(new_side, old_side, cfg));
  out.new_identities.assign(new_side.size(), -1);
  int max_old = -1;
  for (const auto& c : old_side) max_old = std::max(max_old, c.identity);
  std::vector<bool> old_used(old_side.size(), false);
  for (size_t i = 0; i < new_side.size(); ++i) {
    int j = i < out.assignment.mapping.size() ? out.assignment.mapping[i] : -1;
    if (j >= 0) {
      out.new_identities[i] = old_side[j].identity;
      old_used[j] = true;
    }
  }
  int fresh = max_old + 1;
  for (auto& id : out.new_identities)
    if (id < 0) id = fresh++;
  for (size_t j = 0; j < old_side.size(); ++j)
    if (!old_used[j]) out.missing_old_ids.push_back(old_side[j].identity);
  return out;
}

/// Crop -> enhance -> embed, honoring a pre-supplied external embedding.
inline FeatureVector instance_feature(const Instance& inst,
                                      const GrayImage& image,
                                      const ReidConfig& cfg,
                                      const Embedder& embedder) {
  if (inst.embedding)
    return FeatureVector(std::vector<float>(inst.embedding->begin(),
                                            inst.embedding->end()));
  if (image.empty()) return FeatureVector();
  GrayImage c = crop(image, inst.mask, cfg.crop_pad);
  return embedder.embed(enhance_crop(c, cfg));
}

/// Full re-identification of a new frame against an old frame with known
/// identities. Unmatched new instances receive fresh identities; unmatched
/// old identities are reported missing.
inline ReidOutcome reidentify(const std::vector<Instance>& new_frame,
                              const std::vector<Instance>& old_frame,
                              const GrayImage& new_image,
                              const GrayImage& old_image,
                              const ReidConfig& cfg,
                              const Embedder& embedder) {
  for (const auto& inst : old_frame)
    if (!inst.identity)
      throw std::invalid_argument("reidentify: old frame identity unset");
  auto to_candidates = [&](const std::vector<Instance>& frame,
                           const GrayImage& image) {
    std::vector<ReidCandidate> side;
    for (const auto& inst : frame) {
      ReidCandidate c;
      c.identity = inst.identity.value_or(-1);
      c.mask = rle_encode(inst.mask);
      c.centroid_ = inst.centroid_;
      c.feature = instance_feature(inst, image, cfg, embedder);
      side.push_back(std::move(c));
    }
    return side;
  };
  return assign_identities(to_candidates(new_frame, new_image),
                           to_candidates(old_frame, old_image), cfg);
}

}  // namespace herdtrack
