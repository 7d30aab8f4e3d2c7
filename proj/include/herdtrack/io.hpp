#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "herdtrack/filters.hpp"
#include "herdtrack/metrics.hpp"
#include "herdtrack/pipeline.hpp"
#include "herdtrack/refine.hpp"
#include "herdtrack/reid.hpp"
#include "herdtrack/simgen.hpp"
#include "herdtrack/track.hpp"

namespace herdtrack {

using nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw SchemaError("unknown key '" + it.key() + "' in " + where);
}

}  // namespace detail

// ---- RLE ----

inline json rle_to_json(const RleMask& rle) {
  return json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

inline RleMask rle_from_json(const json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts"))
    throw SchemaError("RLE object requires 'size' and 'counts'");
  detail::reject_unknown_keys(j, {"size", "counts"}, "rle");
  RleMask rle;
  rle.height = j["size"].at(0).get<int>();
  rle.width = j["size"].at(1).get<int>();
  rle.counts = j["counts"].get<std::vector<uint32_t>>();
  return rle;
}

// ---- pen config ----

struct PenConfigFile {
  std::string camera_id;
  std::vector<Point> polygon;
  int frame_w = 0;
  int frame_h = 0;
};

inline PenConfigFile pen_config_from_json(const json& j) {
  detail::reject_unknown_keys(j, {"camera_id", "polygon", "frame_size"},
                              "pen config");
  PenConfigFile p;
  p.camera_id = j.value("camera_id", std::string());
  for (const auto& v : j.at("polygon"))
    p.polygon.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  p.frame_w = j.at("frame_size").at(0).get<int>();
  p.frame_h = j.at("frame_size").at(1).get<int>();
  return p;
}

inline json pen_config_to_json(const PenConfigFile& p) {
  json poly = json::array();
  for (const auto& v : p.polygon) poly.push_back({v.x, v.y});
  return json{{"camera_id", p.camera_id},
              {"polygon", poly},
              {"frame_size", {p.frame_w, p.frame_h}}};
}

// ---- PGM / PPM ----

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
}

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string magic;
  int w, h, maxv;
  f >> magic >> w >> h >> maxv;
  if (magic != "P5" || maxv != 255)
    throw std::runtime_error("read_pgm: unsupported format in " + path);
  f.get();  // single whitespace after header
  GrayImage img(w, h);
  f.read(reinterpret_cast<char*>(img.pixels.data()),
         static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw std::runtime_error("read_pgm: truncated file " + path);
  return img;
}

inline void write_ppm(const std::string& path,
                      const std::vector<uint8_t>& rgb, int w, int h) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_ppm: cannot open " + path);
  f << "P6\n" << w << " " << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(rgb.data()),
          static_cast<std::streamsize>(rgb.size()));
}

// ---- frames / clips ----

inline json clip_to_json(const Clip& clip) {
  json frames = json::array();
  for (const auto& fr : clip.frames) {
    json f;
    f["index"] = fr.index;
    f["image"] = fr.image_path.empty() ? json(nullptr) : json(fr.image_path);
    f["foreground_rle"] = rle_to_json(fr.foreground);
    json dets = json::array();
    for (const auto& d : fr.detections) {
      json dj;
      dj["confidence"] = d.confidence;
      dj["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
      dj["rle"] = rle_to_json(d.rle);
      if (d.embedding) dj["embedding"] = *d.embedding;
      dets.push_back(std::move(dj));
    }
    f["detections"] = std::move(dets);
    frames.push_back(std::move(f));
  }
  return json{{"clip_index", clip.index},
              {"width", clip.width},
              {"height", clip.height},
              {"frames", std::move(frames)}};
}

/// `image_dir`: when non-empty, per-frame image paths are resolved against
/// it and the PGM files are loaded into memory.
inline Clip clip_from_json(const json& j, const std::string& image_dir = "") {
  detail::reject_unknown_keys(j, {"clip_index", "width", "height", "frames"},
                              "clip");
  Clip clip;
  clip.index = j.at("clip_index").get<int>();
  clip.width = j.at("width").get<int>();
  clip.height = j.at("height").get<int>();
  for (const auto& f : j.at("frames")) {
    detail::reject_unknown_keys(
        f, {"index", "image", "foreground_rle", "detections"}, "frame");
    FrameRecord rec;
    rec.index = f.at("index").get<int>();
    if (f.contains("image") && !f["image"].is_null()) {
      rec.image_path = f["image"].get<std::string>();
      if (!image_dir.empty())
        rec.image = read_pgm(
            (std::filesystem::path(image_dir) / rec.image_path).string());
    }
    rec.foreground = rle_from_json(f.at("foreground_rle"));
    for (const auto& dj : f.at("detections")) {
      detail::reject_unknown_keys(dj, {"confidence", "bbox", "rle", "embedding"},
                                  "detection");
      Detection d;
      d.confidence = dj.at("confidence").get<double>();
      d.bbox = {dj.at("bbox").at(0).get<int>(), dj.at("bbox").at(1).get<int>(),
                dj.at("bbox").at(2).get<int>(), dj.at("bbox").at(3).get<int>()};
      d.rle = rle_from_json(dj.at("rle"));
      if (dj.contains("embedding"))
        d.embedding = dj["embedding"].get<std::vector<float>>();
      rec.detections.push_back(std::move(d));
    }
    clip.frames.push_back(std::move(rec));
  }
  return clip;
}

// ---- tracks ----

inline json tracks_to_json(const std::vector<Track>& tracks) {
  json arr = json::array();
  for (const auto& t : tracks) {
    json entries = json::array();
    for (const auto& [frame, e] : t.entries)
      entries.push_back(json{{"frame", frame},
                             {"rle", rle_to_json(e.mask)},
                             {"visible", e.visible}});
    arr.push_back(json{{"id", t.identity}, {"entries", std::move(entries)}});
  }
  return arr;
}

inline std::vector<Track> tracks_from_json(const json& arr) {
  std::vector<Track> tracks;
  for (const auto& tj : arr) {
    detail::reject_unknown_keys(tj, {"id", "entries"}, "track");
    Track t;
    t.identity = tj.at("id").get<int>();
    for (const auto& ej : tj.at("entries")) {
      detail::reject_unknown_keys(ej, {"frame", "rle", "visible"}, "entry");
      TrackEntry e;
      e.mask = rle_from_json(ej.at("rle"));
      e.visible = ej.at("visible").get<bool>();
      t.entries[ej.at("frame").get<int>()] = std::move(e);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

inline json qc_flag_to_json(const QcFlag& f) {
  return json{{"frame", f.frame},
              {"reason", to_string(f.reason)},
              {"identities", f.identities},
              {"value", f.value}};
}

inline json long_term_to_json(const LongTermResult& result) {
  json qc = json::array();
  for (const auto& f : result.qc_flags) qc.push_back(qc_flag_to_json(f));
  json spans = json::array();
  for (const auto& s : result.excluded_spans)
    spans.push_back(json{{"clip", s.clip_index},
                         {"from", s.from},
                         {"to", s.to},
                         {"reason", s.reason}});
  return json{{"tracks", tracks_to_json(result.tracks)},
              {"qc", std::move(qc)},
              {"excluded_spans", std::move(spans)},
              {"excluded_clips", result.excluded_clips},
              {"log", result.log}};
}

// ---- metric reports ----

inline json seg_score_to_json(const SegScore& s) {
  json per_id = json::array();
  for (const auto& i : s.per_id)
    per_id.push_back(json{{"gt_id", i.gt_identity},
                          {"pred_id", i.pred_identity},
                          {"J", i.j},
                          {"F", i.f},
                          {"frames", i.frames}});
  return json{
      {"J", s.j}, {"F", s.f}, {"JF", s.jf}, {"per_id", std::move(per_id)}};
}

inline json mot_to_json(const MotResult& m) {
  return json{{"MOTA", m.mota},   {"MOTP", m.motp}, {"IDSW", m.idsw},
              {"FN", m.fn_},      {"FP", m.fp},     {"GT", m.gt_total},
              {"matches", m.matches}};
}

inline std::string per_frame_csv(const SegScore& seg) {
  std::ostringstream out;
  out << "frame,J,F,JF\n";
  for (const auto& fs : seg.per_frame)
    out << fs.frame << "," << fs.j << "," << fs.f << ","
        << (fs.j + fs.f) / 2.0 << "\n";
  return out.str();
}

// ---- hashing / atomic writes ----

inline std::string fnv1a_hex(const std::string& data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void atomic_write_file(const std::string& path,
                              const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + tmp);
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

// ---- run configuration ----

struct MetricConfig {
  double iou_threshold = 0.5;
  int boundary_tolerance = 0;  // 0 = derive from image diagonal
  double sweep_min = 0.01;
  double sweep_max = 0.60;
  double sweep_step = 0.01;
};

struct RunConfig {
  RefineConfig refine;
  ReidConfig reid;
  PipelineConfig pipeline;
  MetricConfig metrics;
  ScenarioSpec scenario;
  std::optional<PenConfigFile> pen;
  std::string input;
  std::string gt;
  std::string out;
};

inline void refine_from_json(const json& j, RefineConfig& c) {
  detail::reject_unknown_keys(
      j,
      {"min_area_ratio", "max_distance_ratio_large", "max_distance_ratio_small",
       "max_prev_dist", "large_blob_cutoff", "connectivity",
       "prev_dist_from_contour"},
      "refine");
  c.min_area_ratio = j.value("min_area_ratio", c.min_area_ratio);
  c.max_distance_ratio_large =
      j.value("max_distance_ratio_large", c.max_distance_ratio_large);
  c.max_distance_ratio_small =
      j.value("max_distance_ratio_small", c.max_distance_ratio_small);
  c.max_prev_dist = j.value("max_prev_dist", c.max_prev_dist);
  c.large_blob_cutoff = j.value("large_blob_cutoff", c.large_blob_cutoff);
  c.connectivity = j.value("connectivity", c.connectivity);
  c.prev_dist_from_contour =
      j.value("prev_dist_from_contour", c.prev_dist_from_contour);
}

inline void reid_from_json(const json& j, ReidConfig& c) {
  detail::reject_unknown_keys(j,
                              {"alpha", "beta", "gamma", "d_max",
                               "gamma_correction", "crop_pad"},
                              "reid");
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma_w = j.value("gamma", c.gamma_w);
  c.d_max = j.value("d_max", c.d_max);
  c.gamma_correction = j.value("gamma_correction", c.gamma_correction);
  c.crop_pad = j.value("crop_pad", c.crop_pad);
  c.normalize_weights();
}

inline void pipeline_from_json(const json& j, PipelineConfig& c) {
  detail::reject_unknown_keys(
      j,
      {"scan_stride", "expected_count", "anchor_window", "detection_threshold",
       "qc_overlap_threshold", "qc_min_area", "qc_teleport_dist",
       "visibility_window", "pen_min_fraction", "nms_overlap_threshold",
       "topk_expected", "topk_trigger"},
      "pipeline");
  c.scan_stride = j.value("scan_stride", c.scan_stride);
  c.expected_count = j.value("expected_count", c.expected_count);
  c.anchor_window = j.value("anchor_window", c.anchor_window);
  c.detection_threshold = j.value("detection_threshold", c.detection_threshold);
  c.qc_overlap_threshold =
      j.value("qc_overlap_threshold", c.qc_overlap_threshold);
  c.qc_min_area = j.value("qc_min_area", c.qc_min_area);
  c.qc_teleport_dist = j.value("qc_teleport_dist", c.qc_teleport_dist);
  c.visibility_window = j.value("visibility_window", c.visibility_window);
  c.pen_min_fraction = j.value("pen_min_fraction", c.pen_min_fraction);
  c.nms_overlap_threshold =
      j.value("nms_overlap_threshold", c.nms_overlap_threshold);
  c.topk_expected = j.value("topk_expected", c.topk_expected);
  c.topk_trigger = j.value("topk_trigger", c.topk_trigger);
}

inline void metrics_from_json(const json& j, MetricConfig& c) {
  detail::reject_unknown_keys(j,
                              {"iou_threshold", "boundary_tolerance",
                               "sweep_min", "sweep_max", "sweep_step"},
                              "metrics");
  c.iou_threshold = j.value("iou_threshold", c.iou_threshold);
  c.boundary_tolerance = j.value("boundary_tolerance", c.boundary_tolerance);
  c.sweep_min = j.value("sweep_min", c.sweep_min);
  c.sweep_max = j.value("sweep_max", c.sweep_max);
  c.sweep_step = j.value("sweep_step", c.sweep_step);
}

inline void scenario_from_json(const json& j, ScenarioSpec& s) {
  detail::reject_unknown_keys(
      j,
      {"seed", "n_agents", "frame_w", "frame_h", "n_clips", "frames_per_clip",
       "axis_min", "axis_max", "speed", "events"},
      "scenario");
  s.seed = j.value("seed", s.seed);
  s.n_agents = j.value("n_agents", s.n_agents);
  s.frame_w = j.value("frame_w", s.frame_w);
  s.frame_h = j.value("frame_h", s.frame_h);
  s.n_clips = j.value("n_clips", s.n_clips);
  s.frames_per_clip = j.value("frames_per_clip", s.frames_per_clip);
  s.axis_min = j.value("axis_min", s.axis_min);
  s.axis_max = j.value("axis_max", s.axis_max);
  s.speed = j.value("speed", s.speed);
  if (j.contains("events"))
    for (const auto& ej : j["events"]) {
      detail::reject_unknown_keys(ej, {"type", "agents", "start", "end"},
                                  "event");
      ScenarioEvent ev;
      std::string type = ej.at("type").get<std::string>();
      if (type == "occlusion") ev.type = EventType::Occlusion;
      else if (type == "exit_enter") ev.type = EventType::ExitEnter;
      else if (type == "pile_up") ev.type = EventType::PileUp;
      else if (type == "disappearance") ev.type = EventType::Disappearance;
      else throw SchemaError("unknown event type '" + type + "'");
      ev.agents = ej.at("agents").get<std::vector<int>>();
      ev.start_frame = ej.at("start").get<int>();
      ev.end_frame = ej.at("end").get<int>();
      s.events.push_back(std::move(ev));
    }
}

inline RunConfig run_config_from_json(const json& j) {
  detail::reject_unknown_keys(
      j, {"pen", "refine", "reid", "pipeline", "metrics", "scenario", "io"},
      "config");
  RunConfig c;
  if (j.contains("refine")) refine_from_json(j["refine"], c.refine);
  if (j.contains("reid")) reid_from_json(j["reid"], c.reid);
  if (j.contains("pipeline")) pipeline_from_json(j["pipeline"], c.pipeline);
  if (j.contains("metrics")) metrics_from_json(j["metrics"], c.metrics);
  if (j.contains("scenario")) scenario_from_json(j["scenario"], c.scenario);
  if (j.contains("pen")) {
    if (j["pen"].is_string())
      c.pen = pen_config_from_json(json::parse(read_file(j["pen"].get<std::string>())));
    else
      c.pen = pen_config_from_json(j["pen"]);
  }
  if (j.contains("io")) {
    detail::reject_unknown_keys(j["io"], {"input", "gt", "out"}, "io");
    c.input = j["io"].value("input", std::string());
    c.gt = j["io"].value("gt", std::string());
    c.out = j["io"].value("out", std::string());
  }
  return c;
}

inline json run_config_to_json(const RunConfig& c) {
  json j;
  j["refine"] = {
      {"min_area_ratio", c.refine.min_area_ratio},
      {"max_distance_ratio_large", c.refine.max_distance_ratio_large},
      {"max_distance_ratio_small", c.refine.max_distance_ratio_small},
      {"max_prev_dist", c.refine.max_prev_dist},
      {"large_blob_cutoff", c.refine.large_blob_cutoff},
      {"connectivity", c.refine.connectivity},
      {"prev_dist_from_contour", c.refine.prev_dist_from_contour}};
  j["reid"] = {{"alpha", c.reid.alpha},
               {"beta", c.reid.beta},
               {"gamma", c.reid.gamma_w},
               {"d_max", c.reid.d_max},
               {"gamma_correction", c.reid.gamma_correction},
               {"crop_pad", c.reid.crop_pad}};
  j["pipeline"] = {{"scan_stride", c.pipeline.scan_stride},
                   {"expected_count", c.pipeline.expected_count},
                   {"anchor_window", c.pipeline.anchor_window},
                   {"detection_threshold", c.pipeline.detection_threshold},
                   {"qc_overlap_threshold", c.pipeline.qc_overlap_threshold},
                   {"qc_min_area", c.pipeline.qc_min_area},
                   {"qc_teleport_dist", c.pipeline.qc_teleport_dist},
                   {"visibility_window", c.pipeline.visibility_window},
                   {"pen_min_fraction", c.pipeline.pen_min_fraction},
                   {"nms_overlap_threshold", c.pipeline.nms_overlap_threshold},
                   {"topk_expected", c.pipeline.topk_expected},
                   {"topk_trigger", c.pipeline.topk_trigger}};
  j["metrics"] = {{"iou_threshold", c.metrics.iou_threshold},
                  {"boundary_tolerance", c.metrics.boundary_tolerance},
                  {"sweep_min", c.metrics.sweep_min},
                  {"sweep_max", c.metrics.sweep_max},
                  {"sweep_step", c.metrics.sweep_step}};
  json events = json::array();
  for (const auto& ev : c.scenario.events) {
    const char* type = ev.type == EventType::Occlusion      ? "occlusion"
                       : ev.type == EventType::ExitEnter    ? "exit_enter"
                       : ev.type == EventType::PileUp       ? "pile_up"
                                                            : "disappearance";
    events.push_back(json{{"type", type},
                          {"agents", ev.agents},
                          {"start", ev.start_frame},
                          {"end", ev.end_frame}});
  }
  j["scenario"] = {{"seed", c.scenario.seed},
                   {"n_agents", c.scenario.n_agents},
                   {"frame_w", c.scenario.frame_w},
                   {"frame_h", c.scenario.frame_h},
                   {"n_clips", c.scenario.n_clips},
                   {"frames_per_clip", c.scenario.frames_per_clip},
                   {"axis_min", c.scenario.axis_min},
                   {"axis_max", c.scenario.axis_max},
                   {"speed", c.scenario.speed},
                   {"events", std::move(events)}};
  if (c.pen) j["pen"] = pen_config_to_json(*c.pen);
  j["io"] = {{"input", c.input}, {"gt", c.gt}, {"out", c.out}};
  return j;
}

}  // namespace herdtrack
