#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "herdtrack/image.hpp"
#include "herdtrack/mask.hpp"

namespace herdtrack {

struct TrackEntry {
  RleMask mask;
  bool visible = false;
};

/// One identity's mask sequence across frames, possibly spanning clips.
struct Track {
  int identity = -1;
  std::map<int, TrackEntry> entries;  // frame index -> entry

  bool visible_at(int frame) const {
    auto it = entries.find(frame);
    return it != entries.end() && it->second.visible;
  }
};

struct Detection {
  double confidence = 1.0;
  BoundingBox bbox;
  RleMask rle;
  std::optional<std::vector<float>> embedding;
};

struct FrameRecord {
  int index = 0;
  GrayImage image;              // may be empty when only masks are available
  std::string image_path;       // source reference, if file-backed
  RleMask foreground;           // scene foreground union
  std::vector<Detection> detections;
};

struct Clip {
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<FrameRecord> frames;
};

}  // namespace herdtrack
