#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "beamsel/scene.hpp"
#include "beamsel/stage2.hpp"
#include "beamsel/trainer.hpp"

namespace beamsel {

/// One run of the pipeline. Loaded from a single JSON document; every key is
/// optional and unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 7;
  /// Switches the image to 750x1000 and K to 60.
  bool full_scale = false;
  std::size_t rows = 150;
  std::size_t cols = 200;
  std::size_t window = 12;
  std::size_t stride = 5;
  /// 0 selects default_topk for the grid.
  std::size_t topk = 0;
  std::size_t light_levels = kLightLevels;
  double light_min = kLightMin;
  double light_max = kLightMax;
  Obstacle obstacle = Obstacle::None;
  /// Camera ids stacked as Stage-2 channels, in order.
  std::vector<int> cameras{1};
  std::size_t snr_samples = 50;
  std::size_t images_per_case = 2;
  std::size_t stage1_epochs = 20;
  std::size_t stage1_patience = 3;
  std::size_t stage2_epochs = 10;
  std::size_t batch = 256;
  double lr = 0.001;
  DetectMode mode = DetectMode::PerCrop;
  std::string out_dir = "out";
  /// 0 means BEAMSEL_THREADS or the hardware concurrency.
  std::size_t threads = 0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  SceneConfig scene(int camera) const;
  nn::TrainOptions stage1_options() const;
  nn::TrainOptions stage2_options() const;
  std::size_t effective_threads() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError on malformed JSON, wrong types, unknown keys or a
/// failed validation.
RunConfig parse_config(const std::string& json_text);
/// Pretty-printed JSON with every key, so parse_config(to_json(c)) == c.
std::string config_to_json(const RunConfig& cfg);
/// BEAMSEL_OUT replaces out_dir, BEAMSEL_THREADS replaces threads.
void apply_env_overrides(RunConfig& cfg);

}  // namespace beamsel
