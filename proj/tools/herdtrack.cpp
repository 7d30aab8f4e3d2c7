// Command-line front end: simulate / track / evaluate / sweep / render /
// qc-report over the JSON interchange formats.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or schema error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "herdtrack/io.hpp"

namespace fs = std::filesystem;
using namespace herdtrack;

namespace {

bool log_enabled() {
  const char* v = std::getenv("HERDTRACK_LOG");
  return v && *v && std::string(v) != "0";
}

void log_line(const std::string& msg) {
  if (log_enabled()) std::cerr << "[herdtrack] " << msg << "\n";
}

json load_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return run_config_from_json(load_json(path));
}

/// Accepts either a bare track array or an object holding a "tracks" key
/// (the `track` subcommand's output).
std::vector<Track> load_tracks(const json& j) {
  if (j.is_array()) return tracks_from_json(j);
  if (j.is_object() && j.contains("tracks")) return tracks_from_json(j["tracks"]);
  throw SchemaError("expected a track array or an object with 'tracks'");
}

std::vector<Clip> load_clips(const json& j, const std::string& image_dir) {
  const json& arr = j.is_object() && j.contains("clips") ? j["clips"] : j;
  if (!arr.is_array()) throw SchemaError("expected a clip array or an object with 'clips'");
  std::vector<Clip> clips;
  for (const auto& cj : arr) clips.push_back(clip_from_json(cj, image_dir));
  return clips;
}

PenRegion pen_from_config(const RunConfig& cfg, int fallback_w, int fallback_h) {
  if (!cfg.pen) throw SchemaError("pen configuration required (--pen or config 'pen')");
  int w = cfg.pen->frame_w > 0 ? cfg.pen->frame_w : fallback_w;
  int h = cfg.pen->frame_h > 0 ? cfg.pen->frame_h : fallback_h;
  return make_pen(cfg.pen->polygon, w, h);
}

void write_json(const std::string& path, const json& j) {
  atomic_write_file(path, j.dump(2) + "\n");
  log_line("wrote " + path);
}

// ---- subcommand bodies ----

int cmd_simulate(const std::string& config_path, long long seed_override,
                 const std::string& out_dir) {
  RunConfig cfg = load_config(config_path);
  if (seed_override >= 0)
    cfg.scenario.seed = static_cast<uint64_t>(seed_override);
  Scenario sc = generate_scenario(cfg.scenario);
  fs::create_directories(out_dir);

  PenConfigFile pen;
  pen.camera_id = "synthetic";
  pen.polygon = sc.pen_polygon;
  pen.frame_w = cfg.scenario.frame_w;
  pen.frame_h = cfg.scenario.frame_h;
  cfg.pen = pen;

  json cfg_json = run_config_to_json(cfg);
  std::string input_hash = fnv1a_hex(cfg_json.dump());

  write_json((fs::path(out_dir) / "pen.json").string(), pen_config_to_json(pen));
  write_json((fs::path(out_dir) / "gt.json").string(),
             json{{"config", cfg_json},
                  {"input_hash", input_hash},
                  {"tracks", tracks_to_json(sc.gt_tracks)}});
  json clips = json::array();
  for (const auto& c : sc.clips) clips.push_back(clip_to_json(c));
  write_json((fs::path(out_dir) / "clips.json").string(),
             json{{"config", cfg_json},
                  {"input_hash", input_hash},
                  {"clips", std::move(clips)}});
  log_line("simulated " + std::to_string(sc.clips.size()) + " clips");
  return 0;
}

int cmd_track(const std::string& config_path, const std::string& input_path,
              const std::string& pen_path, const std::string& out_path,
              double threshold_override) {
  RunConfig cfg = load_config(config_path);
  if (!pen_path.empty())
    cfg.pen = pen_config_from_json(load_json(pen_path));
  if (threshold_override >= 0)
    cfg.pipeline.detection_threshold = threshold_override;

  std::string raw = read_file(input_path);
  std::vector<Clip> clips =
      load_clips(json::parse(raw), fs::path(input_path).parent_path().string());
  if (clips.empty()) throw SchemaError("no clips in " + input_path);

  PenRegion pen = pen_from_config(cfg, clips[0].width, clips[0].height);
  ReferenceDetector detector(cfg.pipeline.detection_threshold);
  ReferencePropagator propagator(cfg.refine.connectivity);
  ReferenceEmbedder embedder;
  LongTermResult result =
      run_long_term(clips, detector, propagator, embedder, pen, cfg.refine,
                    cfg.reid, cfg.pipeline);
  for (const auto& line : result.log) log_line(line);

  json out = long_term_to_json(result);
  out["config"] = run_config_to_json(cfg);
  out["input_hash"] = fnv1a_hex(raw);
  write_json(out_path, out);
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& input_path,
                 const std::string& gt_path, const std::string& clips_path,
                 const std::string& out_path, const std::string& csv_path) {
  RunConfig cfg = load_config(config_path);
  std::string raw_pred = read_file(input_path);
  std::string raw_gt = read_file(gt_path);
  std::vector<Track> pred = load_tracks(json::parse(raw_pred));
  std::vector<Track> gt = load_tracks(json::parse(raw_gt));

  int tolerance = cfg.metrics.boundary_tolerance;
  if (tolerance <= 0) {
    int w = 0, h = 0;
    for (const auto& t : gt)
      for (const auto& [f, e] : t.entries) {
        w = e.mask.width;
        h = e.mask.height;
        break;
      }
    tolerance = w > 0 ? default_boundary_tolerance(w, h) : 1;
  }

  SegScore seg = jf_series(pred, gt, tolerance);
  MotResult mot = mot_evaluate(pred, gt, cfg.metrics.iou_threshold);

  json report;
  report["config"] = run_config_to_json(cfg);
  report["input_hash"] = fnv1a_hex(raw_pred + raw_gt);
  report["segmentation"] = seg_score_to_json(seg);
  report["tracking"] = mot_to_json(mot);

  if (!clips_path.empty()) {
    std::vector<Clip> clips = load_clips(
        load_json(clips_path), fs::path(clips_path).parent_path().string());
    DetectionCounts counts;
    for (const auto& clip : clips)
      for (const auto& frame : clip.frames) {
        std::vector<Instance> preds;
        for (const auto& d : frame.detections)
          if (d.confidence >= cfg.pipeline.detection_threshold &&
              rle_area(d.rle) > 0)
            preds.push_back(Instance::from_mask(rle_decode(d.rle), d.confidence));
        std::vector<Instance> gts;
        for (const auto& t : gt) {
          auto it = t.entries.find(frame.index);
          if (it != t.entries.end() && it->second.visible &&
              rle_area(it->second.mask) > 0)
            gts.push_back(Instance::from_mask(rle_decode(it->second.mask)));
        }
        counts += match_detections(preds, gts, cfg.metrics.iou_threshold);
      }
    PrfScores prf = precision_recall_f1(counts);
    report["detection"] = {{"tp", counts.tp},          {"fp", counts.fp},
                           {"fn", counts.fn_},         {"precision", prf.precision},
                           {"recall", prf.recall},     {"f1", prf.f1},
                           {"threshold", cfg.pipeline.detection_threshold}};
  }

  write_json(out_path, report);
  if (!csv_path.empty()) {
    atomic_write_file(csv_path, per_frame_csv(seg));
    log_line("wrote " + csv_path);
  }
  std::cout << "J " << seg.j << "  F " << seg.f << "  J&F " << seg.jf
            << "  MOTA " << mot.mota << "  MOTP " << mot.motp << "  IDSW "
            << mot.idsw << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& clips_path,
              const std::string& gt_path, const std::string& out_path) {
  RunConfig cfg = load_config(config_path);
  std::vector<Clip> clips = load_clips(
      load_json(clips_path), fs::path(clips_path).parent_path().string());
  std::vector<Track> gt = load_tracks(load_json(gt_path));

  std::vector<std::vector<Instance>> scored, gts;
  for (const auto& clip : clips)
    for (const auto& frame : clip.frames) {
      std::vector<Instance> preds;
      for (const auto& d : frame.detections)
        if (rle_area(d.rle) > 0)
          preds.push_back(Instance::from_mask(rle_decode(d.rle), d.confidence));
      std::vector<Instance> g;
      for (const auto& t : gt) {
        auto it = t.entries.find(frame.index);
        if (it != t.entries.end() && it->second.visible &&
            rle_area(it->second.mask) > 0)
          g.push_back(Instance::from_mask(rle_decode(it->second.mask)));
      }
      scored.push_back(std::move(preds));
      gts.push_back(std::move(g));
    }

  std::vector<double> thresholds;
  for (double t = cfg.metrics.sweep_min; t <= cfg.metrics.sweep_max + 1e-9;
       t += cfg.metrics.sweep_step)
    thresholds.push_back(t);
  SweepResult sw =
      sweep_thresholds(scored, gts, thresholds, cfg.metrics.iou_threshold);

  if (out_path.size() > 4 && out_path.substr(out_path.size() - 4) == ".csv") {
    std::ostringstream csv;
    csv << "threshold,tp,fp,fn,precision,recall,f1\n";
    for (const auto& r : sw.rows)
      csv << r.threshold << "," << r.counts.tp << "," << r.counts.fp << ","
          << r.counts.fn_ << "," << r.scores.precision << ","
          << r.scores.recall << "," << r.scores.f1 << "\n";
    atomic_write_file(out_path, csv.str());
    log_line("wrote " + out_path);
  } else {
    json rows = json::array();
    for (const auto& r : sw.rows)
      rows.push_back(json{{"threshold", r.threshold},
                          {"tp", r.counts.tp},
                          {"fp", r.counts.fp},
                          {"fn", r.counts.fn_},
                          {"precision", r.scores.precision},
                          {"recall", r.scores.recall},
                          {"f1", r.scores.f1}});
    write_json(out_path, json{{"config", run_config_to_json(cfg)},
                              {"rows", std::move(rows)},
                              {"best_threshold", sw.best_threshold}});
  }
  std::cout << "best threshold " << sw.best_threshold << "\n";
  return 0;
}

int cmd_render(const std::string& config_path, const std::string& input_path,
               const std::string& clips_path, const std::string& out_dir) {
  load_config(config_path);  // validates only; rendering has no knobs
  json tj = json::parse(read_file(input_path));
  std::vector<Track> tracks = load_tracks(tj);
  std::set<int> flagged;
  if (tj.is_object() && tj.contains("qc"))
    for (const auto& f : tj["qc"]) flagged.insert(f.at("frame").get<int>());
  std::vector<Clip> clips = load_clips(
      load_json(clips_path), fs::path(clips_path).parent_path().string());
  fs::create_directories(out_dir);

  static const uint8_t palette[16][3] = {
      {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
      {245, 130, 48},  {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
      {210, 245, 60},  {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
      {170, 110, 40},  {255, 250, 200}, {128, 0, 0},    {170, 255, 195}};

  int written = 0;
  for (const auto& clip : clips)
    for (const auto& frame : clip.frames) {
      const int w = clip.width, h = clip.height;
      std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3, 0);
      if (!frame.image.empty())
        for (int i = 0; i < w * h; ++i)
          rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = frame.image.pixels[i];
      for (const auto& t : tracks) {
        auto it = t.entries.find(frame.index);
        if (it == t.entries.end() || !it->second.visible) continue;
        BitMask m = rle_decode(it->second.mask);
        const uint8_t* col = palette[((t.identity % 16) + 16) % 16];
        for (int i = 0; i < w * h; ++i)
          if (m.bits()[i])
            for (int c = 0; c < 3; ++c)
              rgb[3 * i + c] =
                  static_cast<uint8_t>((rgb[3 * i + c] + col[c]) / 2);
      }
      if (flagged.count(frame.index)) {
        // red frame border marks QC-flagged frames
        for (int b = 0; b < 3; ++b)
          for (int x = 0; x < w; ++x)
            for (int yy : {b, h - 1 - b}) {
              size_t i = (static_cast<size_t>(yy) * w + x) * 3;
              rgb[i] = 255;
              rgb[i + 1] = 0;
              rgb[i + 2] = 0;
            }
        for (int b = 0; b < 3; ++b)
          for (int y = 0; y < h; ++y)
            for (int xx : {b, w - 1 - b}) {
              size_t i = (static_cast<size_t>(y) * w + xx) * 3;
              rgb[i] = 255;
              rgb[i + 1] = 0;
              rgb[i + 2] = 0;
            }
      }
      char name[64];
      std::snprintf(name, sizeof(name), "frame_%05d.ppm", frame.index);
      write_ppm((fs::path(out_dir) / name).string(), rgb, w, h);
      ++written;
    }
  std::cout << "rendered " << written << " frames to " << out_dir << "\n";
  return 0;
}

int cmd_qc_report(const std::string& config_path, const std::string& input_path,
                  const std::string& out_path) {
  RunConfig cfg = load_config(config_path);
  std::string raw = read_file(input_path);
  std::vector<Track> tracks = load_tracks(json::parse(raw));
  QcReport qc = post_qc(tracks, cfg.pipeline);
  json flags = json::array();
  for (const auto& f : qc.flags) flags.push_back(qc_flag_to_json(f));
  json spans = json::array();
  for (const auto& [from, to] : qc.error_spans)
    spans.push_back(json{{"from", from}, {"to", to}});
  write_json(out_path, json{{"config", run_config_to_json(cfg)},
                            {"input_hash", fnv1a_hex(raw)},
                            {"qc", std::move(flags)},
                            {"error_spans", std::move(spans)}});
  std::cout << qc.flags.size() << " flags, " << qc.error_spans.size()
            << " spans\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"herdtrack: segmentation-based multi-animal tracking toolkit"};
  app.require_subcommand(1);

  std::string config, input, gt, clips, pen, out, csv;
  long long seed = -1;
  double threshold = -1.0;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  sim->add_option("--config", config, "Run configuration JSON");
  sim->add_option("--seed", seed, "Scenario seed override");
  sim->add_option("--out", out, "Output directory")->required();

  auto* trk = app.add_subcommand("track", "Run long-term tracking over clips");
  trk->add_option("--config", config, "Run configuration JSON");
  trk->add_option("--input", input, "Clips JSON")->required();
  trk->add_option("--pen", pen, "Pen configuration JSON");
  trk->add_option("--threshold", threshold, "Detection threshold override");
  trk->add_option("--out", out, "Output tracks JSON")->required();

  auto* ev = app.add_subcommand("evaluate", "Score tracks against ground truth");
  ev->add_option("--config", config, "Run configuration JSON");
  ev->add_option("--input", input, "Predicted tracks JSON")->required();
  ev->add_option("--gt", gt, "Ground-truth tracks JSON")->required();
  ev->add_option("--clips", clips, "Clips JSON (enables detection metrics)");
  ev->add_option("--out", out, "Report JSON")->required();
  ev->add_option("--csv", csv, "Per-frame J/F CSV");

  auto* sw = app.add_subcommand("sweep", "Detection threshold sweep");
  sw->add_option("--config", config, "Run configuration JSON");
  sw->add_option("--clips", clips, "Clips JSON")->required();
  sw->add_option("--gt", gt, "Ground-truth tracks JSON")->required();
  sw->add_option("--out", out, "Sweep output (.json or .csv)")->required();

  auto* rd = app.add_subcommand("render", "Render tracks as PPM overlays");
  rd->add_option("--config", config, "Run configuration JSON");
  rd->add_option("--input", input, "Tracks JSON")->required();
  rd->add_option("--clips", clips, "Clips JSON")->required();
  rd->add_option("--out", out, "Output directory")->required();

  auto* qc = app.add_subcommand("qc-report", "Re-run quality control on tracks");
  qc->add_option("--config", config, "Run configuration JSON");
  qc->add_option("--input", input, "Tracks JSON")->required();
  qc->add_option("--out", out, "QC report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, seed, out);
    if (trk->parsed()) return cmd_track(config, input, pen, out, threshold);
    if (ev->parsed()) return cmd_evaluate(config, input, gt, clips, out, csv);
    if (sw->parsed()) return cmd_sweep(config, clips, gt, out);
    if (rd->parsed()) return cmd_render(config, input, clips, out);
    if (qc->parsed()) return cmd_qc_report(config, input, out);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
