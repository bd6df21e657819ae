#include <doctest.h>

#include <atomic>

#include "beamsel/errors.hpp"
#include "beamsel/eval.hpp"
#include "beamsel/stage2.hpp"
#include "fixtures.hpp"

using namespace beamsel;

namespace {

// IoU by counting cells in a bounding canvas.
double iou_oracle(const Rect& a, const Rect& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t r = 0; r < 40; ++r) {
    for (std::size_t c = 0; c < 40; ++c) {
      const bool ia = a.contains(r, c), ib = b.contains(r, c);
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Rect random_rect(Rng& rng) {
  return Rect{rng.below(20), rng.below(20), 1 + rng.below(15), 1 + rng.below(15)};
}

BitMap paint(std::size_t rows, std::size_t cols, const std::vector<Rect>& rects) {
  BitMap bm({rows, cols, 1});
  for (const Rect& r : rects)
    for (std::size_t y = r.top; y < r.top + r.height; ++y)
      for (std::size_t x = r.left; x < r.left + r.width; ++x) bm[y * cols + x] = 1.0;
  return bm;
}

}  // namespace

TEST_CASE("IoU examples") {
  CHECK(iou(Rect{0, 0, 2, 2}, Rect{0, 0, 2, 2}) == 1.0);
  CHECK(iou(Rect{0, 0, 2, 2}, Rect{0, 1, 2, 2}) == doctest::Approx(2.0 / 6.0));
  CHECK(iou(Rect{0, 0, 2, 2}, Rect{5, 5, 2, 2}) == 0.0);
  CHECK(iou(Rect{0, 0, 2, 2}, Rect{0, 2, 2, 2}) == 0.0);
  CHECK(iou(Rect{0, 0, 4, 4}, Rect{1, 1, 2, 2}) == doctest::Approx(0.25));
}

TEST_CASE("IoU agrees with cell counting and is symmetric") {
  Rng rng(14);
  for (int k = 0; k < 500; ++k) {
    const Rect a = random_rect(rng), b = random_rect(rng);
    const double v = iou(a, b);
    REQUIRE(v == doctest::Approx(iou_oracle(a, b)).epsilon(1e-12));
    REQUIRE(v == iou(b, a));
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(iou(a, a) == 1.0);
  }
}

TEST_CASE("box extraction on clean bitmaps") {
  // Two single cells.
  DeviceBoxes d = extract_boxes(paint(10, 20, {Rect{3, 2, 1, 1}, Rect{6, 15, 1, 1}}), TxSide::Left);
  CHECK(d.tx == Rect{3, 2, 1, 1});
  CHECK(d.rx == Rect{6, 15, 1, 1});
  d = extract_boxes(paint(10, 20, {Rect{3, 2, 1, 1}, Rect{6, 15, 1, 1}}), TxSide::Right);
  CHECK(d.tx == Rect{6, 15, 1, 1});

  // Two 3x3 blocks come back exactly.
  const Rect a{2, 3, 3, 3}, b{10, 25, 3, 3};
  d = extract_boxes(paint(20, 40, {a, b}), TxSide::Left);
  CHECK(d.tx == a);
  CHECK(d.rx == b);

  CHECK_THROWS_AS(extract_boxes(paint(10, 20, {Rect{3, 2, 1, 1}}), TxSide::Left), DetectionError);
  CHECK_THROWS_AS(extract_boxes(BitMap({10, 20, 1}), TxSide::Left), DetectionError);
  CHECK(tx_side_for_camera(1) == TxSide::Left);
  CHECK(tx_side_for_camera(2) == TxSide::Right);
}

TEST_CASE("extracted boxes contain their cluster centroid on random two-blob bitmaps") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Rect a{rng.below(20), rng.below(10), 1 + rng.below(4), 1 + rng.below(4)};
    const Rect b{rng.below(20), 25 + rng.below(10), 1 + rng.below(4), 1 + rng.below(4)};
    const DeviceBoxes d = extract_boxes(paint(25, 40, {a, b}), TxSide::Left);
    // Centroid of a solid block is its centre.
    const std::size_t ar = a.top + a.height / 2, ac = a.left + a.width / 2;
    const std::size_t br = b.top + b.height / 2, bc = b.left + b.width / 2;
    REQUIRE(d.tx.contains(ar, ac));
    REQUIRE(d.rx.contains(br, bc));
    REQUIRE(iou(d.tx, a) == 1.0);
    REQUIRE(iou(d.rx, b) == 1.0);
  }
}

TEST_CASE("ground-truth rectangles on the desk grid") {
  SceneConfig cfg;
  const CropGrid grid = CropGrid::for_image(cfg.rows, cfg.cols);
  for (const Case& c : all_cases()) {
    const Scene s = render_base(cfg, c);
    for (const MarkerBox& m : s.markers) {
      const Rect r = ground_truth_rect(m, grid);
      CHECK(r.area() == 4);
    }
  }
  const MarkerBox nowhere{Device::Tx, 140, 190, 2, 2, false};
  CHECK_THROWS_AS(ground_truth_rect(nowhere, grid), DetectionError);
}

TEST_CASE("trained detector boxes overlap the ground truth") {
  const nn::Network& cnn = testing::trained_detector();
  const Detector det{&cnn, nullptr, DetectMode::PerCrop};
  for (int camera : {1, 2}) {
    SceneConfig cfg;
    cfg.camera = camera;
    const CropGrid grid = CropGrid::for_image(cfg.rows, cfg.cols);
    for (const Case& c : {Case{1, 1}, Case{3, 3}, Case{5, 2}}) {
      const Scene s = render_scene(cfg, c, 1.0);
      const DeviceBoxes d = extract_boxes(det.bitmap(s.image), tx_side_for_camera(camera));
      CHECK(iou(d.tx, ground_truth_rect(s.markers[0], grid)) >= 0.5);
      CHECK(iou(d.rx, ground_truth_rect(s.markers[1], grid)) >= 0.5);
    }
  }
}

TEST_CASE("confusion matrix") {
  const auto m = confusion_matrix({0, 1, 1, 2, 0}, {0, 1, 2, 2, 1}, 3);
  CHECK(m[0][0] == 1);
  CHECK(m[1][1] == 1);
  CHECK(m[2][1] == 1);
  CHECK(m[2][2] == 1);
  CHECK(m[1][0] == 1);
  std::size_t total = 0;
  for (const auto& row : m)
    for (std::size_t v : row) total += v;
  CHECK(total == 5);
  CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 2), DimensionError);
  CHECK_THROWS_AS(confusion_matrix({3}, {0}, 2), RangeError);
}

TEST_CASE("benchmark runs warm-up plus timed repeats") {
  std::atomic<int> calls{0};
  const TimingStats t = bench_inference([&] { ++calls; }, 10);
  CHECK(calls == 13);
  CHECK(t.samples_ms.size() == 10);
  CHECK_THROWS_AS(bench_inference([] {}, 9), RangeError);

  const TimingStats s = summarize_timings({5, 1, 4, 2, 3, 6, 7, 8, 9, 10});
  CHECK(s.mean_ms == 5.5);
  CHECK(s.p50_ms == 5);
  CHECK(s.p95_ms == 10);
}

TEST_CASE("latency report") {
  LatencyReport r = latency_report(3.104, 0.275, 169);
  CHECK(r.sweep_ms == doctest::Approx(46.475));
  CHECK(r.reduction == doctest::Approx(0.9332).epsilon(1e-4));
  r = latency_report(3.104, 20.0, 169);
  CHECK(r.sweep_ms == doctest::Approx(3380.0));
  CHECK(latency_report(46.475, 0.275, 169).reduction == doctest::Approx(0.0));
  CHECK(latency_report(100, 0.275, 169).reduction < 0.0);
  CHECK_THROWS_AS(latency_report(0.0, 0.275, 169), RangeError);
  CHECK_THROWS_AS(latency_report(1.0, 0.275, 0), RangeError);
}
