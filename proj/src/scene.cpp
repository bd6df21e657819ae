#include "beamsel/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "beamsel/errors.hpp"
#include "beamsel/rng.hpp"

namespace beamsel {

void SceneConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(room_width_cm > 0 && room_depth_cm > 0, "room extents must be positive");
  require(slider_length_cm > 0, "slider length must be positive");
  require(slider_length_cm < room_width_cm, "slider must fit in the room");
  require(slider_separation_cm > 0 && slider_separation_cm < room_depth_cm,
          "slider separation must lie inside the room depth");
  require(obstacle_width_cm > 0 && wood_thickness_cm > 0 && cardbox_thickness_cm > 0,
          "obstacle extents must be positive");
  require(pathloss_exponent > 0, "pathloss exponent must be positive");
  require(jitter_db >= 0, "jitter must be non-negative");
  require(wood_loss_db >= 0 && cardbox_loss_db >= 0 && reflection_loss_db >= 0,
          "losses must be non-negative");
  require(camera == 1 || camera == 2, "camera must be 1 or 2");
  require(crop_window >= 1, "crop window must be positive");
  require(rows >= 5 * crop_window && cols >= 5 * crop_window,
          "image extents must be at least five crop windows");
}

namespace {

// Layout in a 150 x 200 reference frame, scaled to the configured size.
constexpr double kRefRows = 150.0;
constexpr double kRefCols = 200.0;

struct RefRect {
  double top, left, height, width;
};

using Rgb = std::array<double, 3>;

constexpr Rgb kTxColor{0.85, 0.12, 0.10};
constexpr Rgb kRxColor{0.12, 0.75, 0.18};
constexpr Rgb kRailColor{0.16, 0.16, 0.17};
constexpr Rgb kWoodColor{0.50, 0.33, 0.18};
constexpr Rgb kCardboxColor{0.72, 0.58, 0.38};

struct Layout {
  RefRect tx_rail, rx_rail, obstacle;
  double tx_top, rx_top;
  double tx_left0, rx_left0;  // stop 1
  std::vector<std::pair<RefRect, Rgb>> furniture;
};

constexpr double kMarker = 8.0;
constexpr double kStopPixels = 10.0;

Layout layout_for(int camera) {
  Layout l;
  if (camera == 1) {
    l.tx_top = 50;
    l.tx_left0 = 20;
    l.tx_rail = {58, 19, 3, 50};
    l.rx_top = 90;
    l.rx_left0 = 130;
    l.rx_rail = {98, 129, 3, 50};
    l.obstacle = {40, 88, 70, 24};
    l.furniture = {{{0, 0, 18, 200}, {0.60, 0.60, 0.62}},
                   {{22, 150, 20, 40}, {0.36, 0.37, 0.42}},
                   {{115, 10, 30, 50}, {0.46, 0.43, 0.41}},
                   {{120, 140, 24, 45}, {0.30, 0.31, 0.30}}};
  } else {
    l.tx_top = 30;
    l.tx_left0 = 100;
    l.tx_rail = {38, 99, 3, 50};
    l.rx_top = 110;
    l.rx_left0 = 30;
    l.rx_rail = {118, 29, 3, 50};
    l.obstacle = {24, 108, 40, 12};
    l.furniture = {{{0, 0, 14, 200}, {0.58, 0.59, 0.60}},
                   {{60, 10, 30, 40}, {0.38, 0.38, 0.43}},
                   {{80, 150, 40, 35}, {0.44, 0.42, 0.40}},
                   {{130, 100, 15, 60}, {0.31, 0.30, 0.31}}};
  }
  return l;
}

struct PixelRect {
  std::size_t top, left, height, width;

  bool contains(const PixelRect& o) const {
    return o.top >= top && o.left >= left && o.top + o.height <= top + height &&
           o.left + o.width <= left + width;
  }
};

PixelRect to_pixels(const RefRect& r, const SceneConfig& cfg) {
  const double sr = static_cast<double>(cfg.rows) / kRefRows;
  const double sc = static_cast<double>(cfg.cols) / kRefCols;
  auto px = [](double v, double s, std::size_t limit) {
    return std::min(limit, static_cast<std::size_t>(std::lround(std::max(0.0, v * s))));
  };
  const std::size_t top = px(r.top, sr, cfg.rows), left = px(r.left, sc, cfg.cols);
  const std::size_t bottom = px(r.top + r.height, sr, cfg.rows);
  const std::size_t right = px(r.left + r.width, sc, cfg.cols);
  return {top, left, std::max<std::size_t>(1, bottom - top), std::max<std::size_t>(1, right - left)};
}

double hash_unit(std::uint64_t a, std::uint64_t b, std::uint64_t salt) {
  const std::uint64_t h = mix64(mix64(a * 0x9E3779B97F4A7C15ULL + b) ^ salt);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void fill_rect(Image& img, const PixelRect& r, const Rgb& color, double texture, std::uint64_t salt) {
  for (std::size_t y = r.top; y < r.top + r.height; ++y) {
    for (std::size_t x = r.left; x < r.left + r.width; ++x) {
      const double n = texture * (hash_unit(y, x, salt) - 0.5);
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = std::clamp(color[ch] + n, 0.0, 1.0);
    }
  }
}

}  // namespace

void quantize8(Image& img) {
  for (double& v : img.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

Scene render_base(const SceneConfig& cfg, const Case& c) {
  cfg.validate();
  validate(c);
  const Layout l = layout_for(cfg.camera);
  Image img({cfg.rows, cfg.cols, 3});

  // Textured backdrop: fine per-pixel grain over coarse blotches.
  const double sr = static_cast<double>(cfg.rows) / kRefRows;
  const double sc = static_cast<double>(cfg.cols) / kRefCols;
  for (std::size_t y = 0; y < cfg.rows; ++y) {
    for (std::size_t x = 0; x < cfg.cols; ++x) {
      const auto by = static_cast<std::uint64_t>(static_cast<double>(y) / (10.0 * sr));
      const auto bx = static_cast<std::uint64_t>(static_cast<double>(x) / (10.0 * sc));
      const double v = 0.40 + 0.10 * hash_unit(by, bx, 7 + cfg.camera) + 0.08 * (hash_unit(y, x, 11) - 0.5);
      img.at(y, x, 0) = v;
      img.at(y, x, 1) = v;
      img.at(y, x, 2) = v + 0.02;
    }
  }
  std::uint64_t salt = 100;
  for (const auto& [rect, color] : l.furniture) fill_rect(img, to_pixels(rect, cfg), color, 0.05, ++salt);
  fill_rect(img, to_pixels(l.tx_rail, cfg), kRailColor, 0.03, 201);
  fill_rect(img, to_pixels(l.rx_rail, cfg), kRailColor, 0.03, 202);

  const RefRect tx_ref{l.tx_top, l.tx_left0 + kStopPixels * (c.i - 1), kMarker, kMarker};
  const RefRect rx_ref{l.rx_top, l.rx_left0 + kStopPixels * (c.j - 1), kMarker, kMarker};
  const PixelRect tx = to_pixels(tx_ref, cfg), rx = to_pixels(rx_ref, cfg);
  fill_rect(img, tx, kTxColor, 0.06, 301);
  fill_rect(img, rx, kRxColor, 0.06, 302);

  // Camera 1 looks down between the sliders; camera 2 sees the obstacle in
  // front of the transmitter.
  bool tx_occluded = false, rx_occluded = false;
  if (cfg.obstacle != Obstacle::None) {
    const PixelRect ob = to_pixels(l.obstacle, cfg);
    fill_rect(img, ob, cfg.obstacle == Obstacle::Wood ? kWoodColor : kCardboxColor, 0.08, 401);
    tx_occluded = ob.contains(tx);
    rx_occluded = ob.contains(rx);
  }
  quantize8(img);

  Scene s;
  s.image = std::move(img);
  s.markers = {MarkerBox{Device::Tx, tx.top, tx.left, tx.height, tx.width, tx_occluded},
               MarkerBox{Device::Rx, rx.top, rx.left, rx.height, rx.width, rx_occluded}};
  return s;
}

Image augment_light(const Image& img, double factor) {
  if (!(factor >= kLightMin && factor <= kLightMax)) {
    throw RangeError("light factor " + std::to_string(factor) + " outside [0.4, 1.6]");
  }
  Image out = img;
  for (double& v : out.values()) v = std::clamp(v * factor, 0.0, 1.0);
  return out;
}

Image relight(const Image& img, double factor) {
  Image out = augment_light(img, factor);
  quantize8(out);
  return out;
}

Scene render_scene(const SceneConfig& cfg, const Case& c, double light_factor) {
  if (!(light_factor >= kLightMin && light_factor <= kLightMax)) {
    throw RangeError("light factor " + std::to_string(light_factor) + " outside [0.4, 1.6]");
  }
  Scene s = render_base(cfg, c);
  s.image = relight(s.image, light_factor);
  return s;
}

double light_factor(std::size_t level, std::size_t levels, double lo, double hi) {
  if (levels < 2) throw RangeError("light schedule needs at least two levels");
  if (level < 1 || level > levels) {
    throw RangeError("light level " + std::to_string(level) + " outside 1.." + std::to_string(levels));
  }
  return lo + static_cast<double>(level - 1) * (hi - lo) / static_cast<double>(levels - 1);
}

}  // namespace beamsel
