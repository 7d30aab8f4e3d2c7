#pragma once

// Shared fixtures for the unit tests and the acceptance gate.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "herdtrack/filters.hpp"
#include "herdtrack/mask.hpp"
#include "herdtrack/refine.hpp"

namespace testutil {

using herdtrack::BitMask;
using herdtrack::PenRegion;
using herdtrack::Point;
using herdtrack::RefineConfig;
using herdtrack::RefineState;

/// Mask from ASCII art: '#' set, anything else clear. Rows top to bottom.
inline BitMask art(const std::vector<std::string>& rows) {
  int h = static_cast<int>(rows.size());
  int w = static_cast<int>(rows[0].size());
  BitMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rows[y][x] == '#') m.set(x, y);
  return m;
}

inline void fill_rect(BitMask& m, int x0, int y0, int w, int h) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) m.set(x, y);
}

inline BitMask rect_mask(int fw, int fh, int x0, int y0, int w, int h) {
  BitMask m(fw, fh);
  fill_rect(m, x0, y0, w, h);
  return m;
}

/// Pen covering the whole frame.
inline PenRegion full_pen(int w, int h) {
  PenRegion pen;
  pen.polygon = {{-1, -1},
                 {static_cast<double>(w) + 1, -1},
                 {static_cast<double>(w) + 1, static_cast<double>(h) + 1},
                 {-1, static_cast<double>(h) + 1}};
  pen.rasterized = BitMask(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) pen.rasterized.set(x, y);
  return pen;
}

/// xorshift-free deterministic RNG for test data (splitmix64).
struct TestRng {
  uint64_t s;
  explicit TestRng(uint64_t seed) : s(seed) {}
  uint64_t next() {
    uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }
};

inline BitMask random_mask(TestRng& rng, int w, int h, double density) {
  BitMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rng.uniform() < density) m.set(x, y);
  return m;
}

/// Exhaustive minimum assignment cost over all permutations (n <= 8).
inline double brute_force_assignment(
    const std::vector<std::vector<double>>& cost) {
  int n = static_cast<int>(cost.size());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (int i = 0; i < n; ++i) total += cost[i][perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---- mask-refinement conformance fixtures ----

struct RefineCase {
  std::string name;
  BitMask mask;
  PenRegion pen;
  RefineState state;
  RefineConfig cfg;
  BitMask expected;
};

/// Hand-derived keep/drop decisions covering: both area regimes around the
/// 1000 px cutoff, the 0.30 area-ratio boundary, the 200 px previous-centroid
/// distance boundary, main-blob selection by previous centroid, pen clipping,
/// first-frame fallback, and the empty outcome.
inline std::vector<RefineCase> refine_conformance_cases() {
  std::vector<RefineCase> cases;
  RefineConfig cfg;  // defaults: 0.30, 0.5/1.5, 200 px, cutoff 1000

  {  // 1. single in-pen blob, no previous centroid: returned unchanged
    RefineCase c{"single blob unchanged", rect_mask(60, 40, 10, 10, 20, 15),
                 full_pen(60, 40), RefineState{}, cfg,
                 rect_mask(60, 40, 10, 10, 20, 15)};
    cases.push_back(std::move(c));
  }
  {  // 2. main 2000 px, second 500 px: 500 < 0.30*2000 = 600, dropped
    BitMask m(130, 50);
    fill_rect(m, 0, 0, 50, 40);    // main 2000
    fill_rect(m, 55, 0, 25, 20);   // second 500, contour gap 5
    RefineState st;
    st.prev_centroid = Point{24.5, 19.5};  // main centroid
    cases.push_back({"area ratio drop", m, full_pen(130, 50), st, cfg,
                     rect_mask(130, 50, 0, 0, 50, 40)});
  }
  {  // 3. main 2000 (large regime, D_max = 0.5*sqrt(2000/pi) ~ 12.62),
     //    second 700 at contour distance 10, prev-centroid distance ~52: kept
    BitMask m(130, 50);
    fill_rect(m, 0, 0, 50, 40);    // main 2000, right edge x=49
    fill_rect(m, 59, 0, 35, 20);   // second 700, gap = 59-49 = 10
    RefineState st;
    st.prev_centroid = Point{24.5, 19.5};
    cases.push_back({"large regime keep", m, full_pen(130, 50), st, cfg, m});
  }
  {  // 4a. small regime: main 900 (<1000), D_max = 1.5*sqrt(900/pi) ~ 25.39;
     //     second 300 at contour distance 19: kept
    BitMask m(120, 40);
    fill_rect(m, 0, 0, 30, 30);    // main 900, right edge x=29
    fill_rect(m, 48, 0, 10, 30);   // second 300, gap 19
    RefineState st;
    st.prev_centroid = Point{14.5, 14.5};
    cases.push_back({"small regime keep at 19 px", m, full_pen(120, 40), st,
                     cfg, m});
  }
  {  // 4b. large regime: main 1024 (>=1000), D_max = 0.5*sqrt(1024/pi) ~ 9.02;
     //     same 19 px gap now fails the contour-distance gate
    BitMask m(120, 40);
    fill_rect(m, 0, 0, 32, 32);    // main 1024, right edge x=31
    fill_rect(m, 50, 0, 10, 30);   // second 300 (>= 0.30*1024), gap 19
    RefineState st;
    st.prev_centroid = Point{15.5, 15.5};
    cases.push_back({"large regime drop at 19 px", m, full_pen(120, 40), st,
                     cfg, rect_mask(120, 40, 0, 0, 32, 32)});
  }
  {  // 5a. area-ratio boundary: second exactly 0.30*main is kept (inclusive)
    BitMask m(60, 20);
    fill_rect(m, 0, 0, 10, 10);   // main 100
    fill_rect(m, 12, 0, 6, 5);    // second 30 = 0.30*100, gap 2 (< 7.5*1.5)
    RefineState st;
    st.prev_centroid = Point{4.5, 4.5};
    cases.push_back({"area ratio boundary keep", m, full_pen(60, 20), st, cfg,
                     m});
  }
  {  // 5b. one pixel under the ratio boundary: dropped
    BitMask m(60, 20);
    fill_rect(m, 0, 0, 10, 10);
    fill_rect(m, 12, 0, 6, 5);
    m.set(17, 4, false);          // second now 29 < 30
    RefineState st;
    st.prev_centroid = Point{4.5, 4.5};
    BitMask exp = rect_mask(60, 20, 0, 0, 10, 10);
    cases.push_back({"area ratio boundary drop", m, full_pen(60, 20), st, cfg,
                     exp});
  }
  {  // 6a. previous-centroid distance boundary: exactly 200 px is kept
    BitMask m(240, 40);
    fill_rect(m, 170, 0, 30, 30);  // main 900, centroid (184.5, 14.5)
    fill_rect(m, 210, 0, 10, 30);  // second 300, centroid (214.5, 14.5), gap 11
    RefineState st;
    st.prev_centroid = Point{14.5, 14.5};  // 200.0 px from second centroid
    cases.push_back({"prev distance boundary keep", m, full_pen(240, 40), st,
                     cfg, m});
  }
  {  // 6b. one pixel beyond 200: dropped
    BitMask m(240, 40);
    fill_rect(m, 170, 0, 30, 30);
    fill_rect(m, 210, 0, 10, 30);
    RefineState st;
    st.prev_centroid = Point{13.5, 14.5};  // 201.0 px from second centroid
    cases.push_back({"prev distance boundary drop", m, full_pen(240, 40), st,
                     cfg, rect_mask(240, 40, 170, 0, 30, 30)});
  }
  {  // 7. main selection by previous centroid: the nearer (smaller) blob wins;
     //    the far large blob fails the contour-distance gate and is dropped
    BitMask m(150, 40);
    fill_rect(m, 0, 0, 10, 10);    // near blob 100, D_max = 1.5*5.64 ~ 8.46
    fill_rect(m, 60, 0, 30, 30);   // far blob 900, gap 50
    RefineState st;
    st.prev_centroid = Point{4.5, 4.5};
    cases.push_back({"main by prev centroid", m, full_pen(150, 40), st, cfg,
                     rect_mask(150, 40, 0, 0, 10, 10)});
  }
  {  // 8. pen clipping: straddling blob loses its outside half; a blob fully
     //    outside the pen vanishes
    int w = 40, h = 20;
    PenRegion pen;
    pen.polygon = {{-1, -1}, {20, -1}, {20, 21}, {-1, 21}};
    pen.rasterized = BitMask(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < 20; ++x) pen.rasterized.set(x, y);
    BitMask m(w, h);
    fill_rect(m, 10, 0, 20, 10);   // straddles x=20
    fill_rect(m, 30, 12, 8, 6);    // fully outside
    RefineState st;
    st.prev_centroid = Point{14.5, 4.5};
    cases.push_back({"pen clip", m, pen, st, cfg,
                     rect_mask(w, h, 10, 0, 10, 10)});
  }
  {  // 9. first frame, everything clipped away: original mask returned
    int w = 40, h = 20;
    PenRegion pen;
    pen.polygon = {{-1, -1}, {10, -1}, {10, 21}, {-1, 21}};
    pen.rasterized = BitMask(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < 10; ++x) pen.rasterized.set(x, y);
    BitMask m = rect_mask(w, h, 20, 0, 10, 10);  // fully outside the pen
    cases.push_back({"first frame fallback", m, pen, RefineState{}, cfg, m});
  }
  {  // 10. later frame, everything clipped away: empty mask
    int w = 40, h = 20;
    PenRegion pen;
    pen.polygon = {{-1, -1}, {10, -1}, {10, 21}, {-1, 21}};
    pen.rasterized = BitMask(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < 10; ++x) pen.rasterized.set(x, y);
    BitMask m = rect_mask(w, h, 20, 0, 10, 10);
    RefineState st;
    st.is_first_frame = false;
    st.prev_centroid = Point{5.0, 5.0};
    cases.push_back({"later frame empty", m, pen, st, cfg, BitMask(w, h)});
  }
  {  // 11. no previous centroid: satellite passing area and contour gates is
     //     kept (the previous-distance gate is vacuous)
    BitMask m(60, 20);
    fill_rect(m, 0, 0, 10, 10);
    fill_rect(m, 12, 0, 6, 6);    // 36 >= 30, gap 2
    cases.push_back({"no prev centroid keep", m, full_pen(60, 20),
                     RefineState{}, cfg, m});
  }
  return cases;
}

}  // namespace testutil
