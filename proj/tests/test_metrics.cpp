#include <catch2/catch_amalgamated.hpp>

#include "herdtrack/metrics.hpp"
#include "helpers.hpp"

using namespace herdtrack;
using testutil::rect_mask;

namespace {

Instance box_inst(int x, int y, int w, int h, double conf = 1.0) {
  Instance i;
  i.bbox = {x, y, w, h};
  i.confidence = conf;
  return i;
}

TrackEntry entry_of(const BitMask& m) {
  TrackEntry e;
  e.visible = m.area() > 0;
  e.mask = rle_encode(m);
  return e;
}

}  // namespace

TEST_CASE("detection matching on the worked examples") {
  DetectionCounts none = match_detections({}, {box_inst(0, 0, 5, 5),
                                              box_inst(10, 0, 5, 5),
                                              box_inst(0, 10, 5, 5)});
  REQUIRE(none.tp == 0);
  REQUIRE(none.fp == 0);
  REQUIRE(none.fn_ == 3);

  // one pred, one gt, IoU 0.6: 10x10 gt vs 10x10 pred shifted 2 down
  // inter 10*8=80, union 120 -> 0.667 >= 0.5
  DetectionCounts hit =
      match_detections({box_inst(0, 2, 10, 10)}, {box_inst(0, 0, 10, 10)});
  REQUIRE(hit.tp == 1);
  REQUIRE(hit.fp == 0);
  REQUIRE(hit.fn_ == 0);

  // below threshold: shifted 6 -> inter 40, union 160 -> 0.25
  DetectionCounts miss =
      match_detections({box_inst(0, 6, 10, 10)}, {box_inst(0, 0, 10, 10)});
  REQUIRE(miss.tp == 0);
  REQUIRE(miss.fp == 1);
  REQUIRE(miss.fn_ == 1);
}

TEST_CASE("precision recall f1 from counts") {
  PrfScores s = precision_recall_f1({5867, 814, 2315});
  REQUIRE(s.precision == Catch::Approx(0.8782).margin(1e-4));
  REQUIRE(s.recall == Catch::Approx(0.7171).margin(1e-4));
  REQUIRE(s.f1 == Catch::Approx(0.7895).margin(1e-4));

  PrfScores zero = precision_recall_f1({0, 0, 0});
  REQUIRE(zero.precision == 0.0);
  REQUIRE(zero.recall == 0.0);
  REQUIRE(zero.f1 == 0.0);

  testutil::TestRng rng(1);
  for (int it = 0; it < 100; ++it) {
    PrfScores r = precision_recall_f1({rng.uniform_int(0, 50),
                                       rng.uniform_int(0, 50),
                                       rng.uniform_int(0, 50)});
    REQUIRE(r.precision >= 0.0);
    REQUIRE(r.precision <= 1.0);
    REQUIRE(r.recall >= 0.0);
    REQUIRE(r.recall <= 1.0);
    REQUIRE(r.f1 <= 1.0);
  }
}

TEST_CASE("threshold sweep finds the F1 peak") {
  // one image: two gts, preds at conf 0.9 (good), 0.25 (good), 0.23 (spurious)
  std::vector<Instance> gts{box_inst(0, 0, 10, 10), box_inst(40, 0, 10, 10)};
  std::vector<Instance> preds{box_inst(0, 0, 10, 10, 0.9),
                              box_inst(40, 0, 10, 10, 0.25),
                              box_inst(80, 40, 10, 10, 0.23)};
  std::vector<double> grid;
  for (int i = 1; i <= 60; ++i) grid.push_back(i / 100.0);
  SweepResult sw = sweep_thresholds({preds}, {gts}, grid);
  REQUIRE(sw.best_threshold == Catch::Approx(0.24));
  REQUIRE(sw.rows.size() == 60);
  // threshold 0 keeps every detection
  SweepResult all = sweep_thresholds({preds}, {gts}, {0.0});
  REQUIRE(all.rows[0].counts.tp == 2);
  REQUIRE(all.rows[0].counts.fp == 1);
}

TEST_CASE("boundary F measure") {
  BitMask sq = rect_mask(30, 30, 10, 10, 8, 8);
  REQUIRE(boundary_f(sq, sq, 2) == 1.0);

  BitMask shifted = rect_mask(30, 30, 11, 10, 8, 8);
  REQUIRE(boundary_f(shifted, sq, 2) == 1.0);

  BitMask far = rect_mask(30, 30, 0, 0, 4, 4);
  BitMask opposite = rect_mask(30, 30, 20, 20, 4, 4);
  REQUIRE(boundary_f(far, opposite, 2) == 0.0);

  REQUIRE(boundary_f(BitMask(30, 30), BitMask(30, 30), 2) == 1.0);
  REQUIRE(boundary_f(sq, BitMask(30, 30), 2) == 0.0);
  REQUIRE(default_boundary_tolerance(480, 360) == 5);  // ceil(0.008 * 600)
}

TEST_CASE("jf series scores identity-aligned tracks") {
  BitMask a0 = rect_mask(40, 30, 2, 2, 8, 6);
  BitMask a1 = rect_mask(40, 30, 4, 2, 8, 6);
  BitMask b0 = rect_mask(40, 30, 25, 20, 8, 6);
  BitMask b1 = rect_mask(40, 30, 27, 20, 8, 6);

  Track gt_a{0, {{0, entry_of(a0)}, {1, entry_of(a1)}}};
  Track gt_b{1, {{0, entry_of(b0)}, {1, entry_of(b1)}}};
  // predictions carry different identity labels
  Track pr_a{17, {{0, entry_of(a0)}, {1, entry_of(a1)}}};
  Track pr_b{4, {{0, entry_of(b0)}, {1, entry_of(b1)}}};

  SegScore perfect = jf_series({pr_b, pr_a}, {gt_a, gt_b});
  REQUIRE(perfect.j == Catch::Approx(1.0));
  REQUIRE(perfect.f == Catch::Approx(1.0));
  REQUIRE(perfect.jf == Catch::Approx(1.0));
  REQUIRE(perfect.per_id.size() == 2);
  REQUIRE(perfect.per_frame.size() == 2);

  // one of two identities entirely missed: its J is 0, the mean halves
  SegScore half = jf_series({pr_a}, {gt_a, gt_b});
  REQUIRE(half.j == Catch::Approx(perfect.j / 2.0));
  double jf_mean = (half.j + half.f) / 2.0;
  REQUIRE(half.jf == Catch::Approx(jf_mean));
}

TEST_CASE("mota arithmetic") {
  REQUIRE(mota_from_counts(13, 0, 0, 1306) == Catch::Approx(0.9900).margin(1e-4));
  REQUIRE(mota_from_counts(0, 0, 0, 100) == 1.0);
  REQUIRE(mota_from_counts(0, 0, 0, 0) == 1.0);
  REQUIRE(mota_from_counts(2, 0, 0, 6) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("mot evaluate on perfect tracks") {
  BitMask a = rect_mask(40, 30, 2, 2, 8, 6);
  BitMask b = rect_mask(40, 30, 25, 20, 8, 6);
  Track gt_a{0, {{0, entry_of(a)}, {1, entry_of(a)}}};
  Track gt_b{1, {{0, entry_of(b)}, {1, entry_of(b)}}};
  MotResult r = mot_evaluate({gt_a, gt_b}, {gt_a, gt_b});
  REQUIRE(r.mota == 1.0);
  REQUIRE(r.motp == Catch::Approx(1.0));
  REQUIRE(r.idsw == 0);
  REQUIRE(r.fn_ == 0);
  REQUIRE(r.fp == 0);
  REQUIRE(r.gt_total == 4);
}

TEST_CASE("mot evaluate counts the two-object swap as two switches") {
  BitMask left = rect_mask(60, 20, 2, 2, 10, 8);
  BitMask right = rect_mask(60, 20, 40, 2, 10, 8);
  Track gt0{0, {{0, entry_of(left)}, {1, entry_of(left)}, {2, entry_of(left)}}};
  Track gt1{1, {{0, entry_of(right)}, {1, entry_of(right)}, {2, entry_of(right)}}};
  // predictions swap identities from frame 2 onward
  Track p0{0, {{0, entry_of(left)}, {1, entry_of(left)}, {2, entry_of(right)}}};
  Track p1{1, {{0, entry_of(right)}, {1, entry_of(right)}, {2, entry_of(left)}}};
  MotResult r = mot_evaluate({p0, p1}, {gt0, gt1});
  REQUIRE(r.idsw == 2);
  REQUIRE(r.fn_ == 0);
  REQUIRE(r.fp == 0);
  REQUIRE(r.mota == Catch::Approx(1.0 - 2.0 / 6.0));
}

TEST_CASE("single-frame mot degenerates to detection counts") {
  BitMask a = rect_mask(40, 30, 2, 2, 8, 6);
  BitMask b = rect_mask(40, 30, 25, 20, 8, 6);
  BitMask c = rect_mask(40, 30, 2, 20, 6, 6);
  Track gt_a{0, {{0, entry_of(a)}}};
  Track gt_b{1, {{0, entry_of(b)}}};
  Track pred_a{5, {{0, entry_of(a)}}};
  Track pred_c{6, {{0, entry_of(c)}}};
  MotResult r = mot_evaluate({pred_a, pred_c}, {gt_a, gt_b});
  REQUIRE(r.matches == 1);
  REQUIRE(r.fn_ == 1);
  REQUIRE(r.fp == 1);
  REQUIRE(r.idsw == 0);
}
