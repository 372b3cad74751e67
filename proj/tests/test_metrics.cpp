#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "gridcrf/metrics.hpp"
#include "gridcrf/random.hpp"
#include "gridcrf/types.hpp"
#include "helpers.hpp"

using namespace gridcrf;

TEST_CASE("intersection over union", "[metrics]") {
  SECTION("a perfect prediction scores 1 in every class") {
    Rng rng(41);
    const Labeling gt = testutil::random_labeling(6, 5, 3, rng);
    const MiouResult r = miou(gt, gt);
    CHECK(r.mean == 1.0);
    for (int c = 0; c < 3; ++c)
      if (!std::isnan(r.per_class[c])) CHECK(r.per_class[c] == 1.0);
  }

  SECTION("a complemented binary prediction scores 0") {
    const Labeling gt(2, 2, 2, {0, 0, 1, 1});
    const Labeling pred(2, 2, 2, {1, 1, 0, 0});
    const MiouResult r = miou(pred, gt);
    CHECK(r.mean == 0.0);
    CHECK(r.per_class[0] == 0.0);
    CHECK(r.per_class[1] == 0.0);
  }

  SECTION("hand-computed case: classes at 1/2 and 2/3 average to 7/12") {
    const Labeling gt(2, 2, 2, {0, 0, 1, 1});
    const Labeling pred(2, 2, 2, {0, 1, 1, 1});
    const MiouResult r = miou(pred, gt);
    CHECK(r.per_class[0] == Catch::Approx(1.0 / 2.0).margin(1e-15));
    CHECK(r.per_class[1] == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(r.mean == Catch::Approx(7.0 / 12.0).margin(1e-15));
  }

  SECTION("the mean runs over ground-truth classes only") {
    // Class 2 appears in the prediction but never in the ground truth: it
    // gets a per-class score yet stays out of the mean.
    const Labeling gt(2, 2, 3, {0, 0, 1, 1});
    const Labeling pred(2, 2, 3, {0, 2, 1, 2});
    const MiouResult r = miou(pred, gt);
    CHECK(r.per_class[0] == 0.5);
    CHECK(r.per_class[1] == 0.5);
    CHECK(r.per_class[2] == 0.0);
    CHECK(r.mean == 0.5);
  }

  SECTION("classes absent everywhere score NaN, not zero") {
    const Labeling gt(2, 2, 3, {0, 0, 1, 1});
    const MiouResult r = miou(gt, gt);
    CHECK(std::isnan(r.per_class[2]));
    CHECK(r.mean == 1.0);
  }

  SECTION("invariant under a shared label permutation") {
    Rng rng(43);
    const Labeling gt = testutil::random_labeling(7, 4, 3, rng);
    const Labeling pred = testutil::random_labeling(7, 4, 3, rng);
    const int perm[3] = {1, 2, 0};
    std::vector<int> pg(gt.labels), pp(pred.labels);
    for (int& v : pg) v = perm[v];
    for (int& v : pp) v = perm[v];
    const double a = miou(pred, gt).mean;
    const double b = miou(Labeling(7, 4, 3, std::move(pp)),
                          Labeling(7, 4, 3, std::move(pg))).mean;
    CHECK(a == Catch::Approx(b).margin(1e-15));
  }

  SECTION("shape mismatches are rejected") {
    const Labeling gt(2, 2, 2, {0, 0, 1, 1});
    CHECK_THROWS_AS(miou(Labeling::constant(4, 1, 2, 0), gt), std::invalid_argument);
    CHECK_THROWS_AS(miou(Labeling::constant(2, 2, 3, 0), gt), std::invalid_argument);
  }
}

TEST_CASE("pixel accuracy", "[metrics]") {
  const Labeling gt(2, 2, 2, {0, 0, 1, 1});
  CHECK(pixel_accuracy(gt, gt) == 1.0);
  CHECK(pixel_accuracy(Labeling(2, 2, 2, {1, 1, 0, 0}), gt) == 0.0);
  CHECK(pixel_accuracy(Labeling(2, 2, 2, {0, 1, 0, 1}), gt) == 0.5);
}

TEST_CASE("boundary-band accuracy", "[metrics]") {
  SECTION("a constant ground truth has no band") {
    const Labeling flat = Labeling::constant(5, 5, 2, 1);
    CHECK_FALSE(trimap_accuracy(flat, flat, 8).has_value());
  }

  SECTION("1x6 step: the radius-1 band is the two boundary pixels") {
    const Labeling gt(6, 1, 2, {0, 0, 0, 1, 1, 1});
    const Labeling pred(6, 1, 2, {0, 0, 0, 0, 1, 1});
    // Band = pixels 2 and 3; the prediction hits pixel 2, misses pixel 3.
    const auto acc = trimap_accuracy(pred, gt, 1);
    REQUIRE(acc.has_value());
    CHECK(*acc == 0.5);
    // One step out the band also covers pixels 1 and 4, both correct.
    const auto acc2 = trimap_accuracy(pred, gt, 2);
    REQUIRE(acc2.has_value());
    CHECK(*acc2 == 0.75);
  }

  SECTION("2D band arithmetic on a vertical split") {
    Labeling gt(4, 4, 2, std::vector<int>(16, 0));
    for (int y = 0; y < 4; ++y)
      for (int x = 2; x < 4; ++x) gt.labels[y * 4 + x] = 1;
    Labeling pred = gt;
    pred.labels[1 * 4 + 1] = 1;  // inside the radius-1 band: a miss
    pred.labels[0 * 4 + 0] = 1;  // depth 2: outside the radius-1 band
    const auto r1 = trimap_accuracy(pred, gt, 1);
    REQUIRE(r1.has_value());
    CHECK(*r1 == Catch::Approx(7.0 / 8.0).margin(1e-15));
    const auto r2 = trimap_accuracy(pred, gt, 2);
    REQUIRE(r2.has_value());
    CHECK(*r2 == Catch::Approx(14.0 / 16.0).margin(1e-15));
  }

  SECTION("a perfect prediction scores 1 at any radius") {
    Rng rng(44);
    const Labeling gt = testutil::random_labeling(6, 6, 2, rng);
    for (int radius : {1, 3, 8}) {
      const auto acc = trimap_accuracy(gt, gt, radius);
      REQUIRE(acc.has_value());
      CHECK(*acc == 1.0);
    }
  }

  SECTION("a radius covering the raster reproduces pixel accuracy") {
    Rng rng(45);
    const Labeling gt = testutil::random_labeling(6, 5, 2, rng);
    const Labeling pred = testutil::random_labeling(6, 5, 2, rng);
    const auto acc = trimap_accuracy(pred, gt, 6 + 5);
    REQUIRE(acc.has_value());
    CHECK(*acc == pixel_accuracy(pred, gt));
  }

  SECTION("non-positive radii are rejected") {
    const Labeling gt(2, 2, 2, {0, 0, 1, 1});
    CHECK_THROWS_AS(trimap_accuracy(gt, gt, 0), std::invalid_argument);
  }
}

TEST_CASE("evaluation report", "[metrics]") {
  // 24x4 vertical split: depths reach 12, so the 8- and 16-pixel bands differ.
  Labeling gt(24, 4, 2, std::vector<int>(96, 0));
  for (int y = 0; y < 4; ++y)
    for (int x = 12; x < 24; ++x) gt.labels[y * 24 + x] = 1;
  Rng rng(46);
  Labeling pred = gt;
  for (int i = 0; i < 10; ++i) {
    const int p = rng.uniform_int(0, 95);
    pred.labels[p] = 1 - pred.labels[p];
  }

  const EvalReport report = evaluate(pred, gt);

  SECTION("agrees with the standalone metrics") {
    CHECK(report.miou == miou(pred, gt).mean);
    CHECK(report.pixel_accuracy == pixel_accuracy(pred, gt));
    REQUIRE(report.trimap_8.has_value());
    REQUIRE(report.trimap_16.has_value());
    CHECK(*report.trimap_8 == *trimap_accuracy(pred, gt, 8));
    CHECK(*report.trimap_16 == *trimap_accuracy(pred, gt, 16));
    CHECK(report.band_8_pixels == 64);
    CHECK(report.band_16_pixels == 96);
  }

  SECTION("serializes with stable keys and explicit nulls") {
    const nlohmann::json j = to_json(report);
    CHECK(j["miou"].get<double>() == report.miou);
    CHECK(j["pixel_accuracy"].get<double>() == report.pixel_accuracy);
    CHECK(j["trimap_8"].get<double>() == *report.trimap_8);
    CHECK(j["band_8_pixels"].get<long long>() == 64);
    REQUIRE(j["per_class_iou"].is_array());
    CHECK(j["per_class_iou"].size() == 2);

    // Constant ground truth: no band, and absent classes render as null.
    const Labeling flat = Labeling::constant(3, 3, 3, 0);
    const nlohmann::json jf = to_json(evaluate(flat, flat));
    CHECK(jf["trimap_8"].is_null());
    CHECK(jf["trimap_16"].is_null());
    CHECK(jf["band_8_pixels"].get<long long>() == 0);
    CHECK(jf["per_class_iou"][0].get<double>() == 1.0);
    CHECK(jf["per_class_iou"][1].is_null());
    CHECK(jf["per_class_iou"][2].is_null());
  }
}
