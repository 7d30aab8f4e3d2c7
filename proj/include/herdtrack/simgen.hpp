#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

#include "herdtrack/filters.hpp"
#include "herdtrack/image.hpp"
#include "herdtrack/mask.hpp"
#include "herdtrack/track.hpp"

namespace herdtrack {

enum class EventType { Occlusion, ExitEnter, PileUp, Disappearance };

struct ScenarioEvent {
  EventType type = EventType::Occlusion;
  std::vector<int> agents;
  int start_frame = 0;
  int end_frame = 0;  // inclusive
};

struct ScenarioSpec {
  uint64_t seed = 1;
  int n_agents = 10;
  int frame_w = 480;
  int frame_h = 360;
  int n_clips = 3;
  int frames_per_clip = 200;
  double axis_min = 12.0;  // ellipse semi-major axis range
  double axis_max = 18.0;
  double speed = 2.0;  // px/frame
  std::vector<ScenarioEvent> events;
};

struct Scenario {
  std::vector<Clip> clips;
  std::vector<Track> gt_tracks;
  std::vector<Point> pen_polygon;
  std::set<int> overlap_frames;  // frames where any two footprints overlap
};

namespace detail {

/// splitmix64; stdlib distributions are implementation-defined, this is not.
struct SimRng {
  uint64_t state;
  explicit SimRng(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

inline double hash_unit(uint64_t seed, uint64_t a, uint64_t b) {
  SimRng r(seed ^ (a * 0x100000001b3ull) ^ (b << 32));
  r.next();
  return r.uniform();
}

struct Agent {
  Point pos;
  Point waypoint;
  double ax = 0, bx = 0;  // semi axes
  double angle = 0;
  uint8_t gray = 0;
  // home cell bounds (waypoints stay inside)
  double cx0 = 0, cy0 = 0, cx1 = 0, cy1 = 0;
};

inline bool inside_ellipse(double px, double py, const Point& c, double a,
                           double b, double ang) {
  double dx = px - c.x, dy = py - c.y;
  double u = dx * std::cos(ang) + dy * std::sin(ang);
  double v = -dx * std::sin(ang) + dy * std::cos(ang);
  return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
}

inline RleMask empty_rle(int w, int h) {
  RleMask r;
  r.width = w;
  r.height = h;
  r.counts = {static_cast<uint32_t>(w) * static_cast<uint32_t>(h)};
  return r;
}

}  // namespace detail

inline std::vector<Point> default_pen_polygon(int w, int h, int margin = 8) {
  return {{static_cast<double>(margin), static_cast<double>(margin)},
          {static_cast<double>(w - margin), static_cast<double>(margin)},
          {static_cast<double>(w - margin), static_cast<double>(h - margin)},
          {static_cast<double>(margin), static_cast<double>(h - margin)}};
}

/// Renders a deterministic multi-agent pen scenario: filled ellipses with
/// unique stable gray levels wandering inside disjoint home cells, plus
/// scripted occlusion / pile-up / disappearance events that hide agents or
/// let footprints overlap and degrade the emitted detections.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  if (spec.n_agents <= 0 || spec.n_clips <= 0 || spec.frames_per_clip <= 0)
    throw std::invalid_argument("generate_scenario: invalid spec");
  const int w = spec.frame_w, h = spec.frame_h;
  const int margin = 8;
  detail::SimRng rng(spec.seed);

  // home-cell grid inside the pen keeps agents separated outside events
  const double pw = w - 2.0 * margin, ph = h - 2.0 * margin;
  int cols = static_cast<int>(std::ceil(std::sqrt(spec.n_agents * pw / ph)));
  cols = std::max(1, cols);
  int rows = (spec.n_agents + cols - 1) / cols;
  const double cw = pw / cols, ch = ph / rows;

  std::vector<detail::Agent> agents(spec.n_agents);
  for (int i = 0; i < spec.n_agents; ++i) {
    detail::Agent& ag = agents[i];
    ag.ax = rng.uniform(spec.axis_min, spec.axis_max);
    ag.bx = ag.ax * 0.6;
    ag.angle = rng.uniform(0, M_PI);
    ag.gray = static_cast<uint8_t>(16 * (i % 15 + 1) + 8);
    int cx = i % cols, cy = i / cols;
    double pad = ag.ax + 3.0;
    ag.cx0 = margin + cx * cw + pad;
    ag.cx1 = margin + (cx + 1) * cw - pad;
    ag.cy0 = margin + cy * ch + pad;
    ag.cy1 = margin + (cy + 1) * ch - pad;
    if (ag.cx1 <= ag.cx0 || ag.cy1 <= ag.cy0)
      throw std::invalid_argument(
          "generate_scenario: agents do not fit the frame");
    ag.pos = {rng.uniform(ag.cx0, ag.cx1), rng.uniform(ag.cy0, ag.cy1)};
    ag.waypoint = {rng.uniform(ag.cx0, ag.cx1), rng.uniform(ag.cy0, ag.cy1)};
  }

  // initial non-overlap check
  for (int i = 0; i < spec.n_agents; ++i)
    for (int j = i + 1; j < spec.n_agents; ++j)
      if (distance(agents[i].pos, agents[j].pos) <
          agents[i].ax + agents[j].ax)
        throw std::invalid_argument(
            "generate_scenario: initially overlapping agents");

  const int total_frames = spec.n_clips * spec.frames_per_clip;
  Scenario scenario;
  scenario.pen_polygon = default_pen_polygon(w, h, margin);
  scenario.gt_tracks.resize(spec.n_agents);
  for (int i = 0; i < spec.n_agents; ++i)
    scenario.gt_tracks[i].identity = i;

  scenario.clips.resize(spec.n_clips);
  for (int c = 0; c < spec.n_clips; ++c) {
    scenario.clips[c].index = c;
    scenario.clips[c].width = w;
    scenario.clips[c].height = h;
  }

  std::vector<int> owner(static_cast<size_t>(w) * h);

  for (int frame = 0; frame < total_frames; ++frame) {
    // resolve active events
    std::vector<bool> hidden(spec.n_agents, false);
    std::vector<bool> piling(spec.n_agents, false);
    Point pile_target{0, 0};
    for (const auto& ev : spec.events) {
      if (frame < ev.start_frame || frame > ev.end_frame) continue;
      switch (ev.type) {
        case EventType::Occlusion:
          // the second listed agent is fully covered by the first
          if (ev.agents.size() >= 2) hidden[ev.agents[1]] = true;
          break;
        case EventType::ExitEnter:
        case EventType::Disappearance:
          for (int a : ev.agents) hidden[a] = true;
          break;
        case EventType::PileUp: {
          double tx = 0, ty = 0;
          for (int a : ev.agents) {
            tx += (agents[a].cx0 + agents[a].cx1) / 2;
            ty += (agents[a].cy0 + agents[a].cy1) / 2;
            piling[a] = true;
          }
          pile_target = {tx / ev.agents.size(), ty / ev.agents.size()};
          break;
        }
      }
    }

    // motion step
    for (int i = 0; i < spec.n_agents; ++i) {
      detail::Agent& ag = agents[i];
      Point target = piling[i] ? pile_target : ag.waypoint;
      double d = distance(ag.pos, target);
      double step = piling[i] ? spec.speed * 1.5 : spec.speed;
      if (d <= step) {
        ag.pos = target;
        if (!piling[i])
          ag.waypoint = {rng.uniform(ag.cx0, ag.cx1),
                         rng.uniform(ag.cy0, ag.cy1)};
      } else {
        ag.pos.x += (target.x - ag.pos.x) / d * step;
        ag.pos.y += (target.y - ag.pos.y) / d * step;
      }
    }

    // render: later agent index paints on top
    std::fill(owner.begin(), owner.end(), -1);
    for (int i = 0; i < spec.n_agents; ++i) {
      if (hidden[i]) continue;
      const detail::Agent& ag = agents[i];
      int x0 = std::max(0, static_cast<int>(std::floor(ag.pos.x - ag.ax)));
      int x1 = std::min(w - 1, static_cast<int>(std::ceil(ag.pos.x + ag.ax)));
      int y0 = std::max(0, static_cast<int>(std::floor(ag.pos.y - ag.ax)));
      int y1 = std::min(h - 1, static_cast<int>(std::ceil(ag.pos.y + ag.ax)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (detail::inside_ellipse(x + 0.5, y + 0.5, ag.pos, ag.ax, ag.bx,
                                     ag.angle))
            owner[static_cast<size_t>(y) * w + x] = i;
    }

    FrameRecord rec;
    rec.index = frame;
    rec.image = GrayImage(w, h, 0);
    BitMask foreground(w, h);
    std::vector<BitMask> gt_masks(spec.n_agents, BitMask(w, h));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int o = owner[static_cast<size_t>(y) * w + x];
        if (o >= 0) {
          rec.image.set(x, y, agents[o].gray);
          foreground.set(x, y);
          gt_masks[o].set(x, y);
        }
      }
    rec.foreground = rle_encode(foreground);

    // footprint overlap groups drive detection degradation (merged boxes)
    std::vector<int> group(spec.n_agents);
    for (int i = 0; i < spec.n_agents; ++i) group[i] = i;
    std::function<int(int)> find = [&](int x) {
      while (group[x] != x) x = group[x] = group[group[x]];
      return x;
    };
    bool any_overlap = false;
    for (int i = 0; i < spec.n_agents; ++i) {
      if (hidden[i]) continue;
      for (int j = i + 1; j < spec.n_agents; ++j) {
        if (hidden[j]) continue;
        if (distance(agents[i].pos, agents[j].pos) >=
            agents[i].ax + agents[j].ax)
          continue;
        // footprints may overlap; confirm on pixels within the shared box
        int x0 = std::max(0, static_cast<int>(std::floor(
                                 std::max(agents[i].pos.x - agents[i].ax,
                                          agents[j].pos.x - agents[j].ax))));
        int x1 = std::min(w - 1, static_cast<int>(std::ceil(
                                     std::min(agents[i].pos.x + agents[i].ax,
                                              agents[j].pos.x + agents[j].ax))));
        int y0 = std::max(0, static_cast<int>(std::floor(
                                 std::max(agents[i].pos.y - agents[i].ax,
                                          agents[j].pos.y - agents[j].ax))));
        int y1 = std::min(h - 1, static_cast<int>(std::ceil(
                                     std::min(agents[i].pos.y + agents[i].ax,
                                              agents[j].pos.y + agents[j].ax))));
        bool touches = false;
        for (int y = y0; y <= y1 && !touches; ++y)
          for (int x = x0; x <= x1 && !touches; ++x)
            if (detail::inside_ellipse(x + 0.5, y + 0.5, agents[i].pos,
                                       agents[i].ax, agents[i].bx,
                                       agents[i].angle) &&
                detail::inside_ellipse(x + 0.5, y + 0.5, agents[j].pos,
                                       agents[j].ax, agents[j].bx,
                                       agents[j].angle))
              touches = true;
        if (touches) {
          group[find(i)] = find(j);
          any_overlap = true;
        }
      }
    }
    if (any_overlap) scenario.overlap_frames.insert(frame);

    std::vector<std::vector<int>> groups(spec.n_agents);
    for (int i = 0; i < spec.n_agents; ++i)
      if (!hidden[i]) groups[find(i)].push_back(i);
    for (const auto& g : groups) {
      if (g.empty()) continue;
      BitMask m(w, h);
      for (int a : g) m = mask_or(m, gt_masks[a]);
      if (m.area() == 0) continue;
      Detection det;
      det.rle = rle_encode(m);
      det.bbox = m.bounding_box();
      det.confidence =
          g.size() == 1
              ? 0.5 + 0.49 * detail::hash_unit(spec.seed, g[0], frame)
              : 0.4;
      rec.detections.push_back(std::move(det));
    }

    for (int i = 0; i < spec.n_agents; ++i) {
      TrackEntry e;
      if (gt_masks[i].area() > 0) {
        e.visible = true;
        e.mask = rle_encode(gt_masks[i]);
      } else {
        e.visible = false;
        e.mask = detail::empty_rle(w, h);
      }
      scenario.gt_tracks[i].entries[frame] = std::move(e);
    }

    scenario.clips[frame / spec.frames_per_clip].frames.push_back(
        std::move(rec));
  }
  return scenario;
}

}  // namespace herdtrack
