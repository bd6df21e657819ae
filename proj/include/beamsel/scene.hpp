#pragma once

#include <cstddef>
#include <vector>

#include "beamsel/tensor.hpp"
#include "beamsel/types.hpp"

namespace beamsel {

/// (rows, cols, 3) RGB tensor with values in [0, 1].
using Image = nn::Tensor;

struct SceneConfig {
  // Room geometry, top view, cm. x runs across the room, y from Tx to Rx.
  double room_width_cm = 310.0;
  double room_depth_cm = 510.0;
  double slider_length_cm = 120.0;
  double slider_separation_cm = 350.0;
  double device_height_cm = 100.0;
  double camera_height_cm = 169.0;
  double camera_fov_deg = 125.0;

  Obstacle obstacle = Obstacle::None;
  double obstacle_width_cm = 33.0;
  double wood_thickness_cm = 3.0;
  double cardbox_thickness_cm = 10.0;

  // Radio model.
  double tx_power_dbm = 12.0;
  double peak_gain_dbi = 17.0;
  double sidelobe_floor_db = -20.0;
  double pathloss_ref_db = 20.0;  // at 1 m
  double pathloss_exponent = 2.0;
  double reflection_loss_db = 6.0;
  double wood_loss_db = 30.0;
  double cardbox_loss_db = 4.0;
  double jitter_db = 0.5;
  double nan_threshold_db = -48.0;

  // Camera.
  std::size_t rows = 150;
  std::size_t cols = 200;
  int camera = 1;
  std::size_t crop_window = 12;

  double stop_spacing_cm() const { return slider_length_cm / kStops; }
  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

enum class Device { Tx, Rx };

/// Pixel rectangle of a device marker. Occluded markers are not visible in
/// the image but still report where they would be.
struct MarkerBox {
  Device device = Device::Tx;
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  bool occluded = false;

  friend bool operator==(const MarkerBox&, const MarkerBox&) = default;
};

struct Scene {
  Image image;
  std::vector<MarkerBox> markers;  // Tx first, then Rx
};

/// Scene at light factor 1.0, quantized to 8 bits per channel.
Scene render_base(const SceneConfig& cfg, const Case& c);

/// relight(render_base(cfg, c), light).
Scene render_scene(const SceneConfig& cfg, const Case& c, double light_factor);

/// Per-pixel multiply and clamp to [0, 1]. Factor must lie in [0.4, 1.6].
Image augment_light(const Image& img, double factor);

/// augment_light followed by 8-bit quantization, so that rendered images
/// survive a PPM round trip unchanged.
Image relight(const Image& img, double factor);

/// Rounds every value to the nearest k/255.
void quantize8(Image& img);

inline constexpr double kLightMin = 0.4;
inline constexpr double kLightMax = 1.6;
inline constexpr std::size_t kLightLevels = 50;

/// Factor of light level `level` (1-based) out of `levels` spaced linearly
/// over [lo, hi].
double light_factor(std::size_t level, std::size_t levels = kLightLevels, double lo = kLightMin,
                    double hi = kLightMax);

}  // namespace beamsel
