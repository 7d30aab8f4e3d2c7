#include <catch2/catch_amalgamated.hpp>

#include "herdtrack/image.hpp"
#include "herdtrack/mask.hpp"
#include "helpers.hpp"

using namespace herdtrack;
using testutil::art;
using testutil::rect_mask;

TEST_CASE("rle encodes column-major with a leading zero run") {
  BitMask m(2, 2);
  m.set(1, 0);
  RleMask r = rle_encode(m);
  REQUIRE(r.width == 2);
  REQUIRE(r.height == 2);
  REQUIRE(r.counts == std::vector<uint32_t>{2, 1, 1});
}

TEST_CASE("rle round-trips random masks exactly") {
  testutil::TestRng rng(7);
  for (int it = 0; it < 1000; ++it) {
    int w = rng.uniform_int(1, 40), h = rng.uniform_int(1, 40);
    BitMask m = testutil::random_mask(rng, w, h, rng.uniform());
    BitMask back = rle_decode(rle_encode(m));
    REQUIRE(back == m);
    REQUIRE(rle_area(rle_encode(m)) == m.area());
  }
}

TEST_CASE("rle decode rejects malformed counts") {
  RleMask r;
  r.width = 2;
  r.height = 2;
  r.counts = {3, 2};  // sums to 5 != 4
  REQUIRE_THROWS_AS(rle_decode(r), std::runtime_error);
  r.width = 0;
  REQUIRE_THROWS_AS(rle_decode(r), std::invalid_argument);
}

TEST_CASE("mask iou on the worked examples") {
  BitMask a = rect_mask(4, 4, 0, 0, 2, 2);
  BitMask b = rect_mask(4, 4, 1, 0, 2, 2);
  REQUIRE(mask_iou(a, b) == Catch::Approx(2.0 / 6.0));

  BitMask c = rect_mask(4, 4, 0, 0, 1, 1);
  BitMask d = rect_mask(4, 4, 3, 3, 1, 1);
  REQUIRE(mask_iou(c, d) == 0.0);

  REQUIRE(mask_iou(BitMask(4, 4), BitMask(4, 4)) == 1.0);
  REQUIRE_THROWS_AS(mask_iou(a, BitMask(3, 3)), std::invalid_argument);
}

TEST_CASE("mask iou is symmetric and bounded") {
  testutil::TestRng rng(11);
  for (int it = 0; it < 200; ++it) {
    BitMask a = testutil::random_mask(rng, 16, 12, 0.3);
    BitMask b = testutil::random_mask(rng, 16, 12, 0.3);
    double ab = mask_iou(a, b), ba = mask_iou(b, a);
    REQUIRE(ab == ba);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab <= 1.0);
    REQUIRE(mask_iou(a, a) == 1.0);
  }
}

TEST_CASE("connected components basics") {
  REQUIRE(connected_components(BitMask(5, 5)).empty());

  BitMask solid = rect_mask(10, 8, 2, 1, 4, 3);
  auto blobs = connected_components(solid);
  REQUIRE(blobs.size() == 1);
  REQUIRE(blobs[0].area == 12);
  REQUIRE(blobs[0].bbox.x == 2);
  REQUIRE(blobs[0].bbox.w == 4);

  BitMask diag = art({"#.",
                      ".#"});
  REQUIRE(connected_components(diag, 8).size() == 1);
  REQUIRE(connected_components(diag, 4).size() == 2);
  REQUIRE_THROWS_AS(connected_components(diag, 6), std::invalid_argument);
}

TEST_CASE("connected components conserve area and sort by size") {
  testutil::TestRng rng(23);
  for (int it = 0; it < 100; ++it) {
    BitMask m = testutil::random_mask(rng, 24, 18, 0.35);
    auto blobs = connected_components(m);
    long long total = 0;
    for (size_t i = 0; i < blobs.size(); ++i) {
      total += blobs[i].area;
      if (i > 0) REQUIRE(blobs[i - 1].area >= blobs[i].area);
    }
    REQUIRE(total == m.area());
  }
}

TEST_CASE("centroid from moments") {
  BitMask one(8, 8);
  one.set(3, 5);
  Point c = centroid(one);
  REQUIRE(c.x == 3.0);
  REQUIRE(c.y == 5.0);

  BitMask block = rect_mask(8, 8, 0, 0, 2, 2);
  Point cb = centroid(block);
  REQUIRE(cb.x == Catch::Approx(0.5));
  REQUIRE(cb.y == Catch::Approx(0.5));

  REQUIRE_THROWS_AS(centroid(BitMask(4, 4)), std::runtime_error);
}

TEST_CASE("contour points") {
  BitMask one(5, 5);
  one.set(2, 2);
  auto c1 = contour_points(one);
  REQUIRE(c1.size() == 1);
  REQUIRE(c1[0].x == 2.0);

  BitMask solid = rect_mask(7, 7, 1, 1, 3, 3);
  REQUIRE(contour_points(solid).size() == 8);  // center excluded

  BitMask line = rect_mask(9, 3, 1, 1, 6, 1);
  REQUIRE(contour_points(line).size() == 6);
}

TEST_CASE("contour distance") {
  BitMask m(6, 6);
  m.set(0, 0);
  m.set(3, 4);
  auto blobs = connected_components(m, 4);
  REQUIRE(blobs.size() == 2);
  REQUIRE(contour_distance(blobs[0], blobs[1]) == 5.0);  // 3-4-5 triangle
  REQUIRE(contour_distance(blobs[0], blobs[0]) == 0.0);

  // contours one pixel apart (taken from different masks) snap to zero
  BitMask a1(6, 6), b1(6, 6);
  a1.set(1, 1);
  b1.set(2, 1);
  Blob ba = connected_components(a1, 4)[0];
  Blob bb = connected_components(b1, 4)[0];
  REQUIRE(contour_distance(ba, bb) == 0.0);
  // diagonal neighbours stay distinct under 4-connectivity: sqrt(2) gap
  BitMask touch = art({"##..",
                       "..##"});
  auto tb = connected_components(touch, 4);
  REQUIRE(tb.size() == 2);
  REQUIRE(contour_distance(tb[0], tb[1]) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("crop follows the padded bounding box") {
  GrayImage img(4, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) img.set(x, y, static_cast<uint8_t>(10 * y + x));

  BitMask full = rect_mask(4, 3, 0, 0, 4, 3);
  GrayImage whole = crop(img, full, 0);
  REQUIRE(whole.width == 4);
  REQUIRE(whole.height == 3);
  REQUIRE(whole.pixels == img.pixels);

  BitMask one(4, 3);
  one.set(2, 1);
  GrayImage single = crop(img, one, 0);
  REQUIRE(single.width == 1);
  REQUIRE(single.height == 1);
  REQUIRE(single.at(0, 0) == 12);

  // corner region with pad 2 is clipped at the image border
  BitMask corner = rect_mask(4, 3, 0, 0, 2, 2);
  GrayImage cc = crop(img, corner, 2);
  REQUIRE(cc.width == 4);   // 0..min(3, 1+2)
  REQUIRE(cc.height == 3);
  REQUIRE(cc.at(3, 2) == 0);  // outside the mask: zeroed

  REQUIRE_THROWS(crop(img, BitMask(4, 3), 0));  // empty mask
}
