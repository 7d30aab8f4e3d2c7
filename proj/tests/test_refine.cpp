#include <catch2/catch_amalgamated.hpp>

#include "herdtrack/refine.hpp"
#include "helpers.hpp"

using namespace herdtrack;
using testutil::fill_rect;
using testutil::full_pen;
using testutil::rect_mask;

TEST_CASE("refine conformance fixture suite") {
  for (auto& c : testutil::refine_conformance_cases()) {
    INFO(c.name);
    RefineResult r = refine_mask(c.mask, c.pen, c.state, c.cfg);
    REQUIRE(r.cleaned == c.expected);
  }
}

TEST_CASE("refine records the centroid of a kept mask") {
  BitMask m = rect_mask(40, 30, 10, 10, 10, 10);
  RefineResult r = refine_mask(m, full_pen(40, 30), RefineState{},
                               RefineConfig{});
  REQUIRE(r.state.prev_centroid.has_value());
  REQUIRE(r.state.prev_centroid->x == Catch::Approx(14.5));
  REQUIRE(r.state.prev_centroid->y == Catch::Approx(14.5));
  REQUIRE_FALSE(r.state.is_first_frame);
}

TEST_CASE("empty later-frame outcome leaves the previous centroid unchanged") {
  PenRegion pen;
  pen.polygon = {{-1, -1}, {5, -1}, {5, 21}, {-1, 21}};
  pen.rasterized = BitMask(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 5; ++x) pen.rasterized.set(x, y);
  RefineState st;
  st.is_first_frame = false;
  st.prev_centroid = Point{2.0, 3.0};
  RefineResult r = refine_mask(rect_mask(20, 20, 10, 0, 5, 5), pen, st,
                               RefineConfig{});
  REQUIRE(r.cleaned.area() == 0);
  REQUIRE(r.state.prev_centroid->x == 2.0);
  REQUIRE(r.state.prev_centroid->y == 3.0);
}

TEST_CASE("refine is deterministic and idempotent on its own output") {
  testutil::TestRng rng(99);
  PenRegion pen = full_pen(50, 40);
  for (int it = 0; it < 40; ++it) {
    BitMask m(50, 40);
    int nb = rng.uniform_int(1, 4);
    for (int b = 0; b < nb; ++b)
      fill_rect(m, rng.uniform_int(0, 38), rng.uniform_int(0, 28),
                rng.uniform_int(2, 10), rng.uniform_int(2, 10));
    RefineState st;
    if (rng.uniform() < 0.5)
      st.prev_centroid = Point{rng.uniform() * 50, rng.uniform() * 40};
    RefineResult r1 = refine_mask(m, pen, st, RefineConfig{});
    RefineResult r2 = refine_mask(m, pen, st, RefineConfig{});
    REQUIRE(r1.cleaned == r2.cleaned);
    // output is a subset of the clipped input (here: of the input)
    for (size_t i = 0; i < m.bits().size(); ++i)
      REQUIRE((r1.cleaned.bits()[i] == 0 || m.bits()[i] == 1));
    // refining the cleaned mask again with the updated state keeps it intact
    if (r1.cleaned.area() > 0) {
      RefineResult r3 = refine_mask(r1.cleaned, pen, r1.state, RefineConfig{});
      REQUIRE(r3.cleaned.area() > 0);
      REQUIRE(r3.cleaned.area() <= r1.cleaned.area());
    }
  }
}

TEST_CASE("refine rejects mismatched dimensions") {
  REQUIRE_THROWS_AS(refine_mask(BitMask(10, 10), full_pen(12, 12),
                                RefineState{}, RefineConfig{}),
                    std::invalid_argument);
}
