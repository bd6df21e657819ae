#include <doctest.h>

#include <cmath>
#include <numeric>

#include "beamsel/errors.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/snr.hpp"

using namespace beamsel;

namespace {

double centre_col(const MarkerBox& m) { return static_cast<double>(m.left) + static_cast<double>(m.width) / 2.0; }

double valid_mean(const std::vector<double>& xs) {
  double s = 0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n == 0 ? std::nan("") : s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("middle stop renders centred over its slider") {
  for (int camera : {1, 2}) {
    SceneConfig cfg;
    cfg.camera = camera;
    const Scene first = render_base(cfg, Case{1, 1});
    const Scene last = render_base(cfg, Case{5, 5});
    const Scene mid = render_base(cfg, Case{3, 3});
    for (std::size_t d = 0; d < 2; ++d) {
      const double midline = (centre_col(first.markers[d]) + centre_col(last.markers[d])) / 2.0;
      CHECK(std::abs(centre_col(mid.markers[d]) - midline) <= 1.0);
    }
  }
}

TEST_CASE("rendering is deterministic and quantized to 8 bits") {
  SceneConfig cfg;
  cfg.obstacle = Obstacle::Wood;
  const Scene a = render_scene(cfg, Case{2, 4}, 0.7);
  const Scene b = render_scene(cfg, Case{2, 4}, 0.7);
  CHECK(a.image == b.image);
  CHECK(a.markers == b.markers);
  for (double v : a.image.values()) {
    const double bytes = v * 255.0;
    REQUIRE(std::abs(bytes - std::round(bytes)) < 1e-9);
  }
}

TEST_CASE("camera 2 with a cardbox hides the transmitter in exactly 5 cases") {
  SceneConfig cfg;
  cfg.camera = 2;
  cfg.obstacle = Obstacle::Cardbox;
  std::size_t occluded = 0, rx_occluded = 0;
  for (const Case& c : all_cases()) {
    const Scene s = render_base(cfg, c);
    occluded += s.markers[0].occluded;
    rx_occluded += s.markers[1].occluded;
  }
  CHECK(occluded == 5);
  CHECK(rx_occluded == 0);
  // 50 light levels per case.
  CHECK(occluded * kLightLevels == 250);

  cfg.camera = 1;
  for (const Case& c : all_cases()) {
    for (const MarkerBox& m : render_base(cfg, c).markers) CHECK_FALSE(m.occluded);
  }
}

TEST_CASE("marker column is strictly monotone in stop index") {
  for (int camera : {1, 2}) {
    SceneConfig cfg;
    cfg.camera = camera;
    for (int k = 1; k < kStops; ++k) {
      const Scene a = render_base(cfg, Case{k, k});
      const Scene b = render_base(cfg, Case{k + 1, k + 1});
      CHECK(b.markers[0].left > a.markers[0].left);
      CHECK(b.markers[1].left > a.markers[1].left);
    }
  }
}

TEST_CASE("scene scales to 750 x 1000") {
  SceneConfig cfg;
  cfg.rows = 750;
  cfg.cols = 1000;
  const Scene s = render_base(cfg, Case{1, 5});
  CHECK(s.image.shape() == nn::Shape{750, 1000, 3});
  CHECK(s.markers[0].height == 40);
  CHECK(s.markers[0].width == 40);
}

TEST_CASE("bad scene configs are rejected") {
  SceneConfig cfg;
  cfg.camera = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SceneConfig{};
  cfg.rows = 40;
  CHECK_THROWS_AS(render_base(cfg, Case{1, 1}), ConfigError);
  CHECK_THROWS_AS(render_base(SceneConfig{}, Case{0, 1}), RangeError);
}

TEST_CASE("light augmentation") {
  Image half({4, 5, 3}, 0.5);
  CHECK(augment_light(half, 1.0) == half);
  const Image dark = augment_light(half, 0.4);
  for (double v : dark.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(augment_light(half, 0.0), RangeError);
  CHECK_THROWS_AS(augment_light(half, 1.7), RangeError);
  const Image bright = augment_light(Image({1, 1, 3}, 0.9), 1.6);
  CHECK(bright[0] == 1.0);
}

TEST_CASE("light schedule is a 50-level linspace over [0.4, 1.6]") {
  CHECK(light_factor(1) == 0.4);
  CHECK(light_factor(50) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(light_factor(25) == doctest::Approx(0.4 + 24.0 * 1.2 / 49.0).epsilon(1e-15));
  CHECK(light_factor(25) == doctest::Approx(0.9878).epsilon(1e-4));
  CHECK_THROWS_AS(light_factor(0), RangeError);
  CHECK_THROWS_AS(light_factor(51), RangeError);
  CHECK_THROWS_AS(light_factor(1, 1), RangeError);
}

TEST_CASE("broadside beats the extreme misaligned pair at the middle case") {
  const SceneConfig cfg;
  const auto good = snr_oracle(cfg, Case{3, 3}, BeamPair{12, 12}, 50, 1);
  const auto bad = snr_oracle(cfg, Case{3, 3}, BeamPair{0, 24}, 50, 1);
  const double bad_mean = std::isnan(valid_mean(bad)) ? cfg.nan_threshold_db : valid_mean(bad);
  CHECK(valid_mean(good) - bad_mean > 10.0);
}

TEST_CASE("blocked line of sight without a usable bounce is all NaN") {
  SceneConfig cfg;
  cfg.obstacle = Obstacle::Wood;
  cfg.reflection_loss_db = 80.0;  // suppress the wall bounces
  const PathBreakdown path = path_snr_db(cfg, Case{3, 3}, BeamPair{0, 24});
  CHECK(path.los_blocked);
  const auto samples = snr_oracle(cfg, Case{3, 3}, BeamPair{0, 24}, 50, 9);
  REQUIRE(samples.size() == 50);
  for (double s : samples) CHECK(std::isnan(s));
}

TEST_CASE("50-sample means track 1000-sample means within 0.3 dB") {
  // Tx beam fixed at 12, Rx swept across the codebook.
  const SceneConfig cfg;
  double err = 0;
  std::size_t n = 0;
  for (int r : codebook_beams()) {
    const double m50 = valid_mean(snr_oracle(cfg, Case{3, 3}, BeamPair{12, r}, 50, 4));
    const double m1000 = valid_mean(snr_oracle(cfg, Case{3, 3}, BeamPair{12, r}, 1000, 4));
    if (std::isnan(m50) || std::isnan(m1000)) continue;
    err += std::abs(m50 - m1000);
    ++n;
  }
  REQUIRE(n > 0);
  CHECK(err / static_cast<double>(n) <= 0.3);
}

TEST_CASE("SNR model is mirror symmetric about the room midline") {
  for (Obstacle ob : {Obstacle::None, Obstacle::Wood, Obstacle::Cardbox}) {
    SceneConfig cfg;
    cfg.obstacle = ob;
    for (const Case& c : all_cases()) {
      for (int t : codebook_beams()) {
        for (int r : codebook_beams()) {
          const double a = mean_snr_db(cfg, c, BeamPair{t, r});
          const double b = mean_snr_db(cfg, Case{6 - c.i, 6 - c.j}, BeamPair{24 - t, 24 - r});
          REQUIRE(a == doctest::Approx(b).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("more obstacle attenuation never raises line-of-sight SNR") {
  SceneConfig cfg;
  cfg.obstacle = Obstacle::Wood;
  for (const Case& c : all_cases()) {
    for (int t : codebook_beams()) {
      double prev = std::numeric_limits<double>::infinity();
      for (double loss : {0.0, 4.0, 10.0, 30.0, 60.0}) {
        cfg.wood_loss_db = loss;
        const double los = path_snr_db(cfg, c, BeamPair{t, t}).los_db;
        REQUIRE(los <= prev);
        prev = los;
      }
    }
  }
}

TEST_CASE("SNR samples are a pure function of the seed") {
  const SceneConfig cfg;
  const auto a = snr_oracle(cfg, Case{2, 5}, BeamPair{6, 18}, 50, 77);
  const auto b = snr_oracle(cfg, Case{2, 5}, BeamPair{6, 18}, 50, 77);
  const auto c = snr_oracle(cfg, Case{2, 5}, BeamPair{6, 18}, 50, 78);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK((a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k]))));
  }
  CHECK(a != c);
}

TEST_CASE("geometry helpers") {
  const SceneConfig cfg;
  CHECK(tx_position(cfg, 3).x == doctest::Approx(155.0));
  CHECK(tx_position(cfg, 5).x - tx_position(cfg, 1).x == doctest::Approx(96.0));
  CHECK(rx_position(cfg, 1).y - tx_position(cfg, 1).y == doctest::Approx(350.0));
  CHECK(beam_pattern_db(cfg, 0.0) == 0.0);
  CHECK(beam_pattern_db(cfg, kBeamwidth3dBDeg / 2) == doctest::Approx(-3.0103).epsilon(1e-3));
  CHECK(beam_pattern_db(cfg, 90.0) == cfg.sidelobe_floor_db);
  CHECK(beam_angle_deg(0) == -60.0);
  CHECK(beam_angle_deg(24) == 60.0);
  CHECK_THROWS_AS(beam_angle_deg(1), RangeError);
  SceneConfig wood = cfg;
  wood.obstacle = Obstacle::Wood;
  CHECK(segment_blocked(wood, tx_position(wood, 3), rx_position(wood, 3)));
  CHECK_FALSE(segment_blocked(cfg, tx_position(cfg, 3), rx_position(cfg, 3)));
  CHECK_FALSE(segment_blocked(wood, tx_position(wood, 1), Point2{0.0, 255.0}));
}
