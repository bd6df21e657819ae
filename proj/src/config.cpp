#include "beamsel/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "beamsel/crops.hpp"
#include "beamsel/errors.hpp"
#include "beamsel/parallel.hpp"

namespace beamsel {

using nlohmann::json;

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(window >= 1, "window: must be positive");
  require(stride >= 1, "stride: must be positive");
  require(rows >= 5 * window && cols >= 5 * window, "rows/cols: image must span at least five windows");
  require(light_levels >= 2, "light_levels: need at least two levels");
  require(light_min >= kLightMin && light_max <= kLightMax && light_min <= light_max,
          "light_min/light_max: must satisfy 0.4 <= light_min <= light_max <= 1.6");
  require(!cameras.empty() && cameras.size() <= 8, "cameras: need 1 to 8 entries");
  for (int c : cameras) require(c == 1 || c == 2, "cameras: ids must be 1 or 2");
  require(snr_samples >= 1, "snr_samples: must be positive");
  require(images_per_case >= 1, "images_per_case: must be positive");
  require(stage1_epochs >= 1 && stage2_epochs >= 1, "epochs: must be positive");
  require(batch >= 1, "batch: must be positive");
  require(lr > 0 && lr < 1, "lr: must be in (0,1)");
  require(!out_dir.empty(), "out_dir: must not be empty");
  const CropCount grid = crop_count(rows, cols, window, stride);
  require(topk <= grid.total, "topk: exceeds the number of grid cells");
  scene(cameras.front()).validate();
}

SceneConfig RunConfig::scene(int camera) const {
  SceneConfig s;
  s.rows = rows;
  s.cols = cols;
  s.crop_window = window;
  s.obstacle = obstacle;
  s.camera = camera;
  return s;
}

nn::TrainOptions RunConfig::stage1_options() const {
  nn::TrainOptions o;
  o.batch_size = batch;
  o.max_epochs = stage1_epochs;
  o.patience = stage1_patience;
  o.adam.learning_rate = lr;
  o.seed = seed;
  return o;
}

nn::TrainOptions RunConfig::stage2_options() const {
  nn::TrainOptions o = stage2_train_options(seed);
  o.batch_size = batch;
  o.max_epochs = stage2_epochs;
  o.adam.learning_rate = lr;
  return o;
}

std::size_t RunConfig::effective_threads() const { return threads > 0 ? threads : default_threads(); }

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "seed",          "full_scale",   "rows",           "cols",     "window",     "stride",
      "topk",          "light_levels",  "light_min",      "light_max", "obstacle",  "cameras",
      "snr_samples",   "images_per_case", "stage1_epochs", "stage1_patience", "stage2_epochs",
      "batch",         "lr",            "mode",           "out_dir",  "threads"};
  return keys;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known_keys().count(item.key())) throw ConfigError("unknown key '" + item.key() + "'");
  }
  RunConfig c;
  read_key(j, "seed", c.seed);
  read_key(j, "full_scale", c.full_scale);
  read_key(j, "rows", c.rows);
  read_key(j, "cols", c.cols);
  read_key(j, "window", c.window);
  read_key(j, "stride", c.stride);
  read_key(j, "topk", c.topk);
  read_key(j, "light_levels", c.light_levels);
  read_key(j, "light_min", c.light_min);
  read_key(j, "light_max", c.light_max);
  read_key(j, "cameras", c.cameras);
  read_key(j, "snr_samples", c.snr_samples);
  read_key(j, "images_per_case", c.images_per_case);
  read_key(j, "stage1_epochs", c.stage1_epochs);
  read_key(j, "stage1_patience", c.stage1_patience);
  read_key(j, "stage2_epochs", c.stage2_epochs);
  read_key(j, "batch", c.batch);
  read_key(j, "lr", c.lr);
  read_key(j, "out_dir", c.out_dir);
  read_key(j, "threads", c.threads);
  std::string name;
  try {
    if (j.contains("obstacle")) {
      read_key(j, "obstacle", name);
      c.obstacle = parse_obstacle(name);
    }
    if (j.contains("mode")) {
      read_key(j, "mode", name);
      c.mode = parse_mode(name);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.full_scale) {
    c.rows = 750;
    c.cols = 1000;
    c.topk = 60;
  }
  c.validate();
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j = {{"seed", c.seed},
            {"full_scale", c.full_scale},
            {"rows", c.rows},
            {"cols", c.cols},
            {"window", c.window},
            {"stride", c.stride},
            {"topk", c.topk},
            {"light_levels", c.light_levels},
            {"light_min", c.light_min},
            {"light_max", c.light_max},
            {"obstacle", to_string(c.obstacle)},
            {"cameras", c.cameras},
            {"snr_samples", c.snr_samples},
            {"images_per_case", c.images_per_case},
            {"stage1_epochs", c.stage1_epochs},
            {"stage1_patience", c.stage1_patience},
            {"stage2_epochs", c.stage2_epochs},
            {"batch", c.batch},
            {"lr", c.lr},
            {"mode", to_string(c.mode)},
            {"out_dir", c.out_dir},
            {"threads", c.threads}};
  return j.dump(2) + "\n";
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* out = std::getenv("BEAMSEL_OUT"); out != nullptr && *out != '\0') cfg.out_dir = out;
  if (const char* t = std::getenv("BEAMSEL_THREADS"); t != nullptr && *t != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(t, &end, 10);
    if (end == t || *end != '\0' || v == 0) throw ConfigError("BEAMSEL_THREADS must be a positive integer");
    cfg.threads = v;
  }
}

}  // namespace beamsel
