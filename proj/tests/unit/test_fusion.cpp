#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracle.hpp"
#include "ripdet/fusion.hpp"

using namespace ripdet;

namespace {

ProbMask blob_mask(int w, int h, int col0, int row0, int bw, int bh, double value) {
  ProbMask m(w, h);
  for (int r = row0; r < row0 + bh; ++r) {
    for (int c = col0; c < col0 + bw; ++c) m.set(r, c, value);
  }
  return m;
}

std::vector<ScoredBox> random_boxes(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0, 80), size(2, 30), score(0, 1);
  std::vector<ScoredBox> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({{std::round(pos(rng)), std::round(pos(rng)), std::round(size(rng)),
                    std::round(size(rng))},
                   std::round(score(rng) * 20) / 20});
  }
  return out;
}

PolygonSet rect_poly(double x, double y, double w, double h) {
  return PolygonSet{{fixtures::rect_ring(x, y, w, h)}};
}

}  // namespace

TEST_CASE("params defaults and overrides") {
  FusionParams p;
  CHECK(p.w_seg == 0.85);
  CHECK(p.w_det == 0.15);
  CHECK(p.iou_gate == 0.20);
  CHECK(p.penalty == 0.95);
  CHECK(p.wbf_iou == 0.45);
  CHECK(p.close_kernel == 5);
  CHECK(p.min_region_area == 24);
  CHECK(p.eps_ratio == 0.001);
  CHECK(p.ensemble_threshold == 0.5);
  CHECK(p.ensemble_min_area == 100);
  CHECK(p.seg_conf == 0.16);
  CHECK(p.det_conf == 0.18);
  CHECK_NOTHROW(p.validate());

  p.set("close_kernel", std::string_view("7"));
  p.set("seg_conf", std::string_view("0.3"));
  CHECK(p.close_kernel == 7);
  CHECK(p.seg_conf == 0.3);
  CHECK_THROWS_AS(p.set("nope", std::string_view("1")), Error);
  CHECK_THROWS_AS(p.set("close_kernel", std::string_view("2.5")), Error);

  const FusionParams round = params_from_json(params_to_json(p));
  CHECK(params_to_json(round) == params_to_json(p));

  p.w_seg = 0.9;
  CHECK_THROWS_AS(p.validate(), Error);
  p = FusionParams{};
  p.close_kernel = 4;
  CHECK_THROWS_AS(p.validate(), Error);
  p = FusionParams{};
  p.iou_gate = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("fusion config json") {
  const auto cfg = fusion_config_from_json(Json::parse(R"({"preset":"ntr","params":{"open_iterations":2}})"));
  CHECK(cfg.preset == Preset::kNtr);
  CHECK(cfg.params.open_iterations == 2);
  CHECK(cfg.params.w_seg == 0.85);
  try {
    fusion_config_from_json(Json::parse(R"({"preset":"bogus"})"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownPreset);
  }
  CHECK_THROWS_AS(fusion_config_from_json(Json::parse(R"({"presets":"uno"})")), Error);
  CHECK(fusion_config_from_json(fusion_config_to_json(cfg)).params.open_iterations == 2);
}

TEST_CASE("prob mask") {
  CHECK_THROWS_AS(ProbMask(2, 2, std::vector<double>{0, 0.5, 1.2, 0}), Error);
  CHECK_THROWS_AS(ProbMask(2, 2, std::vector<double>{0, 0.5}), Error);
  const ProbMask m(3, 2, std::vector<double>{0, 0.25, 0.5, 0.75, 1, 0.125});
  CHECK(read_prob_mask(write_prob_mask(m)) == m);
  CHECK(m.binarize(0.5).count() == 3);
  CHECK_THROWS_AS(read_prob_mask("PROBMASK 2 2\n0 1 x 0\n"), Error);
}

TEST_CASE("confidence_filter") {
  const std::vector<ScoredBox> boxes{{{0, 0, 1, 1}, 0.05}, {{0, 0, 1, 1}, 0.075},
                                     {{0, 0, 1, 1}, 0.9}};
  CHECK(confidence_filter(boxes, 0.0) == boxes);
  const auto kept = confidence_filter(boxes, 0.075);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == 0.075);
  CHECK(confidence_filter(kept, 0.075) == kept);
  CHECK(confidence_filter(boxes, 1.0).empty());
}

TEST_CASE("nms") {
  const std::vector<ScoredBox> same{{{0, 0, 10, 10}, 0.8}, {{0, 0, 10, 10}, 0.9}};
  const auto one = nms(same, 0.5);
  REQUIRE(one.size() == 1);
  CHECK(one[0].score == 0.9);
  const std::vector<ScoredBox> disjoint{{{0, 0, 5, 5}, 0.3}, {{10, 10, 5, 5}, 0.6}};
  CHECK(nms(disjoint, 0.5).size() == 2);

  // Chain A-B-C with IoU(A,B) = IoU(B,C) = 0.5 and A, C disjoint.
  const ScoredBox ca{{0, 0, 20, 10}, 0.9}, cb{{0, 0, 40, 10}, 0.8}, cc{{20, 0, 20, 10}, 0.7};
  CHECK(box_iou(ca.box, cb.box) == 0.5);
  CHECK(box_iou(cb.box, cc.box) == 0.5);
  CHECK(box_iou(ca.box, cc.box) == 0.0);
  const auto kept = nms({cc, cb, ca}, 0.45);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == ca);
  CHECK(kept[1] == cc);
}

TEST_CASE("nms survivors are pairwise below the threshold") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double thr = 0.1 + 0.1 * (trial % 8);
    const auto kept = nms(random_boxes(rng, 25), thr);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        CHECK(box_iou(kept[i].box, kept[j].box) < thr);
      }
    }
  }
}

TEST_CASE("weighted_box_fusion examples") {
  const std::vector<ScoredBox> single{{{0, 0, 10, 10}, 0.3}, {{50, 50, 10, 10}, 0.7}};
  const auto same = weighted_box_fusion({single}, 0.45);
  REQUIRE(same.size() == 2);
  CHECK(same[0] == single[1]);
  CHECK(same[1] == single[0]);

  const auto fused = weighted_box_fusion({{{{10, 10, 20, 20}, 0.6}}, {{{10, 10, 20, 20}, 0.8}}},
                                         0.45, {1.0, 1.0});
  REQUIRE(fused.size() == 1);
  CHECK(fused[0].box.x == doctest::Approx(10));
  CHECK(fused[0].box.w == doctest::Approx(20));
  CHECK(fused[0].score == doctest::Approx(0.7));

  const auto shifted =
      weighted_box_fusion({{{{0, 0, 10, 10}, 0.8}}, {{{2, 0, 10, 10}, 0.4}}}, 0.45);
  REQUIRE(shifted.size() == 1);
  CHECK(shifted[0].box.x == doctest::Approx(0.8 / 1.2));
  CHECK(shifted[0].box.y == 0.0);
  CHECK(shifted[0].score == doctest::Approx(0.6));

  CHECK_THROWS_AS(weighted_box_fusion({single, single}, 0.5, {1.0}), Error);
  CHECK_THROWS_AS(weighted_box_fusion({single}, 0.5, {0.0}), Error);
}

TEST_CASE("weighted_box_fusion properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<ScoredBox>> models;
    for (int m = 0; m < 3; ++m) models.push_back(random_boxes(rng, 6));
    const auto fused = weighted_box_fusion(models, 0.45);

    std::vector<std::vector<ScoredBox>> rotated{models[2], models[0], models[1]};
    const auto again = weighted_box_fusion(rotated, 0.45);
    REQUIRE(again.size() == fused.size());
    for (std::size_t i = 0; i < fused.size(); ++i) {
      CHECK(again[i].score == doctest::Approx(fused[i].score).epsilon(1e-12));
      CHECK(again[i].box.x == doctest::Approx(fused[i].box.x).epsilon(1e-12));
      CHECK(again[i].box.h == doctest::Approx(fused[i].box.h).epsilon(1e-12));
    }

    double lo = 1e9, hi = -1e9;
    for (const auto& m : models) {
      for (const auto& b : m) {
        lo = std::min(lo, b.box.x);
        hi = std::max(hi, b.box.x);
      }
    }
    for (const auto& b : fused) {
      CHECK(b.score >= 0.0);
      CHECK(b.score <= 1.0);
      CHECK(b.box.x >= lo - 1e-9);
      CHECK(b.box.x <= hi + 1e-9);
    }

    // Pairwise-separated single model: output is the input, reordered.
    const auto kept = nms(models[0], 0.45);
    auto solo = weighted_box_fusion({kept}, 0.45);
    auto ref = kept;
    auto key = [](const ScoredBox& a, const ScoredBox& b) {
      return std::tie(a.score, a.box.x, a.box.y, a.box.w, a.box.h) >
             std::tie(b.score, b.box.x, b.box.y, b.box.w, b.box.h);
    };
    std::sort(solo.begin(), solo.end(), key);
    std::sort(ref.begin(), ref.end(), key);
    CHECK(solo == ref);
  }
}

TEST_CASE("weighted_box_fusion cluster envelope") {
  // Every fused box of overlapping copies lies inside their envelope.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> jitter(-1.5, 1.5), score(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<ScoredBox>> models(4);
    double x0 = 1e9, x1 = -1e9, w0 = 1e9, w1 = -1e9;
    for (auto& m : models) {
      const ScoredBox b{{20 + jitter(rng), 20 + jitter(rng), 30 + jitter(rng), 30 + jitter(rng)},
                        score(rng)};
      x0 = std::min(x0, b.box.x);
      x1 = std::max(x1, b.box.x);
      w0 = std::min(w0, b.box.w);
      w1 = std::max(w1, b.box.w);
      m.push_back(b);
    }
    const auto fused = weighted_box_fusion(models, 0.45, {1.0, 2.0, 0.5, 1.0});
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].box.x >= x0 - 1e-9);
    CHECK(fused[0].box.x <= x1 + 1e-9);
    CHECK(fused[0].box.w >= w0 - 1e-9);
    CHECK(fused[0].box.w <= w1 + 1e-9);
  }
}

TEST_CASE("fuse_seg_det_scores") {
  const FusionParams p;
  // IoU([0,0,10,10], [0,0,10,3]) = 0.3
  auto out = fuse_seg_det_scores({scored_polygon(rect_poly(0, 0, 10, 10), 0.5)},
                                 {{{0, 0, 10, 3}, 0.9}, {{50, 50, 5, 5}, 0.1}}, p);
  CHECK(out[0].score == doctest::Approx(0.56).epsilon(1e-12));
  // IoU 0.1
  out = fuse_seg_det_scores({scored_polygon(rect_poly(0, 0, 10, 10), 0.4)},
                            {{{0, 0, 10, 1}, 0.9}}, p);
  CHECK(out[0].score == doctest::Approx(0.38).epsilon(1e-12));
  out = fuse_seg_det_scores({scored_polygon(rect_poly(0, 0, 10, 10), 1.0)},
                            {{{0, 0, 10, 10}, 1.0}}, p);
  CHECK(out[0].score == doctest::Approx(1.0));
  // Exactly at the gate is not enough.
  out = fuse_seg_det_scores({scored_polygon(rect_poly(0, 0, 10, 10), 0.4)},
                            {{{0, 0, 10, 2}, 0.9}}, p);
  CHECK(out[0].score == doctest::Approx(0.38));
  out = fuse_seg_det_scores({scored_polygon(rect_poly(0, 0, 10, 10), 0.4)}, {}, p);
  CHECK(out[0].score == doctest::Approx(0.38));
  CHECK(out[0].box.w == 10);
}

TEST_CASE("refine_segmentation examples") {
  const FusionParams p;
  const auto square = refine_segmentation(rect_poly(10, 10, 30, 30), 64, 64, p);
  REQUIRE(square);
  CHECK(square->size() == 4);
  CHECK(rasterize(*square, 64, 64) == rasterize(rect_poly(10, 10, 30, 30), 64, 64));

  // 23 px line far from a 600 px block.
  PolygonSet two{{fixtures::rect_ring(5, 5, 23, 1), fixtures::rect_ring(30, 30, 30, 20)}};
  const auto big = refine_segmentation(two, 64, 64, p);
  REQUIRE(big);
  CHECK(rasterize(*big, 64, 64) == rasterize(rect_poly(30, 30, 30, 20), 64, 64));

  CHECK_FALSE(refine_segmentation(rect_poly(5, 5, 10, 1), 64, 64, p));
  CHECK_FALSE(refine_segmentation(rect_poly(5, 5, 23, 1), 64, 64, p));
  const auto floor = refine_segmentation(rect_poly(5, 5, 24, 1), 64, 64, p);
  REQUIRE(floor);
  CHECK(rasterize(*floor, 64, 64).count() == 24);
  const auto rect = refine_segmentation(rect_poly(20, 20, 4, 6), 64, 64, p);
  REQUIRE(rect);
  CHECK(rasterize(*rect, 64, 64).count() == 24);
  // Erosion treats the outside as background, so closing erases an edge line.
  CHECK_FALSE(refine_segmentation(rect_poly(0, 0, 30, 1), 64, 64, p));
}

TEST_CASE("refine_segmentation is idempotent on its own output") {
  std::mt19937_64 rng(9);
  const FusionParams p;
  int refined = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const PolygonSet poly{{oracle::star_polygon(rng, 32, 32, 6, 26, 5 + trial % 12)}};
    const auto first = refine_segmentation(poly, 64, 64, p);
    if (!first) continue;
    ++refined;
    const auto second = refine_segmentation(PolygonSet{{*first}}, 64, 64, p);
    REQUIRE(second);
    CHECK(rasterize(*second, 64, 64) == rasterize(*first, 64, 64));
  }
  CHECK(refined > 100);
}

TEST_CASE("average_mask_ensemble") {
  const FusionParams p;
  const ProbMask blob = blob_mask(40, 40, 5, 5, 15, 10, 1.0);
  auto out = average_mask_ensemble({blob, blob, blob}, p);
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == 1.0);
  CHECK(rasterize(out[0].polygon, 40, 40) == blob.binarize(0.5));

  out = average_mask_ensemble({blob, ProbMask(40, 40)}, p);
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == 0.5);

  CHECK(average_mask_ensemble({blob_mask(40, 40, 0, 0, 9, 11, 1.0)}, p).empty());
  CHECK(average_mask_ensemble({blob_mask(40, 40, 0, 0, 10, 10, 1.0)}, p).size() == 1);
  CHECK_THROWS_AS(average_mask_ensemble({blob, ProbMask(40, 41)}, p), Error);
  CHECK_THROWS_AS(average_mask_ensemble({}, p), Error);
}

TEST_CASE("average_mask_ensemble of copies equals component extraction") {
  std::mt19937_64 rng(10);
  FusionParams p;
  p.ensemble_min_area = 6;
  for (int trial = 0; trial < 50; ++trial) {
    const Mask m = oracle::random_mask(rng, 30, 24, 0.45);
    std::vector<double> values;
    for (std::uint8_t bit : m.bits()) values.push_back(bit ? 1.0 : 0.0);
    const ProbMask pm(30, 24, values);
    const auto out = average_mask_ensemble({pm, pm, pm, pm}, p);
    std::vector<Mask> expected;
    for (const Mask& c : connected_components(m)) {
      if (c.count() >= 6) expected.push_back(fill_holes(c));
    }
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(rasterize(out[i].polygon, 30, 24) == expected[i]);
      CHECK(out[i].score == 1.0);
    }
  }
}

TEST_CASE("merge_boxes_iou_ioa") {
  const ScoredBox big{{0, 0, 100, 100}, 0.9}, small{{10, 10, 10, 10}, 0.5};
  auto out = merge_boxes_iou_ioa({small, big}, 0.5, 0.9);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == big);
  CHECK(merge_boxes_iou_ioa({{{0, 0, 5, 5}, 0.2}, {{20, 20, 5, 5}, 0.3}}, 0.5, 0.9).size() == 2);
  CHECK(merge_boxes_iou_ioa({big, big}, 0.5, 0.9).size() == 1);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_boxes(rng, 20);
    const auto kept = merge_boxes_iou_ioa(in, 0.5, 0.8);
    CHECK(kept.size() <= in.size());
    for (const ScoredBox& b : in) {
      if (std::find(kept.begin(), kept.end(), b) != kept.end()) continue;
      CHECK(std::any_of(kept.begin(), kept.end(), [&](const ScoredBox& k) {
        return box_iou(k.box, b.box) >= 0.5 || box_ioa(k.box, b.box) >= 0.8;
      }));
    }
  }
}

TEST_CASE("cross_model_merge") {
  const std::vector<ScoredBox> list{{{0, 0, 10, 10}, 0.9}, {{40, 40, 10, 10}, 0.6}};
  CHECK(cross_model_merge(list, list, 0.5, 0.5) == list);
  auto out = cross_model_merge({{{0, 0, 10, 10}, 0.6}}, {{{2, 0, 10, 10}, 0.8}}, 0.5, 0.5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].box == BBox{1, 0, 10, 10});
  CHECK(out[0].score == doctest::Approx(0.7));
  out = cross_model_merge({{{0, 0, 10, 10}, 0.1}}, {{{50, 50, 10, 10}, 0.4}}, 0.5, 0.3);
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == 0.4);
}

TEST_CASE("detection_guided_filter") {
  const auto seg = scored_polygon(rect_poly(0, 0, 10, 10), 0.7);
  CHECK(detection_guided_filter({seg}, {{{0, 0, 10, 10}, 0.2}}, 0.5).size() == 1);
  CHECK(detection_guided_filter({seg}, {}, 0.5).empty());
  // IoU([0,0,10,10], [0,0,10,1.9]) = 0.19
  CHECK(detection_guided_filter({seg}, {{{0, 0, 10, 1.9}, 0.9}}, 0.2).empty());
}

TEST_CASE("soft_mask_merge") {
  const ProbMask a = blob_mask(30, 30, 2, 2, 8, 8, 0.8);
  CHECK(soft_mask_merge({a}, 0.5) == a);
  CHECK(soft_mask_merge({a, a}, 0.5) == a);

  const ProbMask b = blob_mask(30, 30, 18, 18, 6, 6, 0.6);
  const ProbMask merged = soft_mask_merge({a, b}, 0.1);
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) CHECK(merged.at(r, c) == std::max(a.at(r, c), b.at(r, c)));
  }

  const ProbMask avg = soft_mask_merge({a, blob_mask(30, 30, 3, 2, 8, 8, 1.0)}, 0.5);
  CHECK(avg.at(5, 5) == doctest::Approx(0.9));
  CHECK(avg.at(5, 2) == doctest::Approx(0.4));
  CHECK_THROWS_AS(soft_mask_merge({a, ProbMask(31, 30)}, 0.5), Error);
}

TEST_CASE("score bounds under fusion") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  const FusionParams p;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredPolygon> segs;
    for (int i = 0; i < 5; ++i) {
      segs.push_back(scored_polygon(rect_poly(u(rng) * 50, u(rng) * 50, 5 + u(rng) * 20,
                                              5 + u(rng) * 20),
                                    u(rng)));
    }
    for (const auto& s : fuse_seg_det_scores(segs, random_boxes(rng, 5), p)) {
      CHECK(s.score >= 0.0);
      CHECK(s.score <= 1.0);
    }
  }
}

TEST_CASE("pipelines") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const auto det = fixtures::random_scene(rng, Task::kDetection, 3, 5, 64, 64);
    // A segmentation file over the same dataset.
    PredictionSet seg{Task::kSegmentation, {}};
    for (const auto& gt : det.dataset.annotations()) {
      seg.instances.push_back({gt.image_id, 1, 0.9, gt.segmentation, seg.instances.size()});
    }
    for (const char* name : {"identity", "uno", "sigmoid", "kmg", "ntr", "visionx"}) {
      FusionConfig cfg;
      cfg.preset = parse_preset(name);
      const FusionResult r = run_pipeline(cfg, det.dataset, {det.preds, seg}, 2);
      CAPTURE(name);
      for (const auto* out : {&r.detection, &r.segmentation}) {
        if (!*out) continue;
        CHECK(validate_predictions(**out, det.dataset).ok());
      }
      CHECK(r.segmentation.has_value());
      const FusionResult serial = run_pipeline(cfg, det.dataset, {det.preds, seg}, 1);
      if (r.segmentation) {
        CHECK(serialize_predictions(*r.segmentation) == serialize_predictions(*serial.segmentation));
      }
    }
    FusionConfig identity;
    const FusionResult id = run_pipeline(identity, det.dataset, {det.preds}, 1);
    REQUIRE(id.detection);
    CHECK(serialize_predictions(*id.detection) == serialize_predictions(det.preds));
  }
}

TEST_CASE("ntr pipeline boxes are WBF at 0.5 with equal weights") {
  const std::vector<ImageRecord> images{{1, 100, 100, "a.jpg"}};
  const Dataset ds(images, {}, {1, "rip"});
  PredictionSet a{Task::kDetection, {{1, 1, 0.8, BBox{10, 10, 20, 20}, 0}}};
  PredictionSet b{Task::kDetection, {{1, 1, 0.4, BBox{12, 10, 20, 20}, 0}}};
  FusionConfig cfg;
  cfg.preset = Preset::kNtr;
  const FusionResult r = run_pipeline(cfg, ds, {a, b});
  REQUIRE(r.detection);
  REQUIRE(r.detection->instances.size() == 1);
  const auto expected = weighted_box_fusion({{{{10, 10, 20, 20}, 0.8}}, {{{12, 10, 20, 20}, 0.4}}},
                                            0.5, {1.0, 1.0});
  CHECK(*r.detection->instances[0].box() == expected[0].box);
  CHECK(r.detection->instances[0].score == expected[0].score);
  CHECK_FALSE(r.segmentation);

  cfg.preset = Preset::kUno;
  CHECK_THROWS_AS(run_pipeline(cfg, ds, {a, b}), Error);
  // An empty file stands in for a segmenter that found nothing.
  const PredictionSet none{Task::kDetection, {}};
  for (Preset preset : {Preset::kUno, Preset::kVisionX}) {
    cfg.preset = preset;
    const FusionResult empty = run_pipeline(cfg, ds, {a, none});
    REQUIRE(empty.segmentation);
    CHECK(empty.segmentation->instances.empty());
  }
}
