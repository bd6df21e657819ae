#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "beamsel/crops.hpp"
#include "beamsel/labeler.hpp"
#include "beamsel/network.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/stage1.hpp"
#include "beamsel/trainer.hpp"

namespace beamsel {

enum class DetectMode { PerCrop, Fcn };

std::string to_string(DetectMode m);
/// Accepts "per-crop" and "fcn".
DetectMode parse_mode(std::string_view name);

/// Image -> heat map -> top-K bitmap, in either detection mode.
struct Detector {
  const nn::Network* cnn = nullptr;  // per-crop mode
  const nn::Network* fcn = nullptr;  // fcn mode
  DetectMode mode = DetectMode::PerCrop;
  std::size_t stride = 5;
  /// K on the stride-S crop grid; 0 selects default_topk. In unaligned fcn
  /// mode it is scaled by the grid-area ratio (see fcn_topk).
  std::size_t topk = 0;
  std::size_t threads = 1;
  /// fcn mode normally keeps the FCN output grid (stride 2). When set, the
  /// dense map is resampled onto the stride-S crop grid instead, so a
  /// per-crop Stage-2 network can consume it.
  bool align_fcn = false;

  HeatMap heat(const Image& img) const;
  BitMap bitmap(const Image& img) const;
  /// Grid shape (rows, cols) produced for an image of the given extents.
  std::pair<std::size_t, std::size_t> grid_shape(std::size_t rows, std::size_t cols) const;
};

/// K for an FCN grid of `fcn_cells` given K on a crop grid of `crop_cells`:
/// round(K * fcn_cells / crop_cells), at least 1.
std::size_t fcn_topk(std::size_t crop_k, std::size_t crop_cells, std::size_t fcn_cells);

/// Channel k of the result is maps[k]. Throws DimensionError on a grid
/// mismatch and RangeError for fewer than 1 or more than 8 maps.
BitMap stack_bitmaps(const std::vector<BitMap>& maps);

nn::Network make_stage2(std::size_t rows, std::size_t cols, std::size_t channels, std::uint64_t seed);

struct Stage2Sample {
  Case c;
  std::size_t light_level = 1;  // 1-based
  BitMap bitmap;
  std::size_t label = 0;  // encode_pair of the case's best pair
};

/// One sample per (case, light level); channel k comes from cameras[k].
/// Throws EncodingError when the label table lacks a case.
std::vector<Stage2Sample> build_stage2_dataset(const std::vector<SceneConfig>& cameras,
                                               const LabelTable& labels, const Detector& detector,
                                               std::size_t levels = kLightLevels);

class Stage2Set final : public nn::ClassificationSet {
 public:
  Stage2Set(const std::vector<Stage2Sample>& samples, std::vector<std::size_t> indices)
      : samples_(&samples), indices_(std::move(indices)) {}
  std::size_t size() const override { return indices_.size(); }
  nn::Tensor input(std::size_t i) const override { return (*samples_)[indices_[i]].bitmap; }
  std::size_t label(std::size_t i) const override { return (*samples_)[indices_[i]].label; }
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  const std::vector<Stage2Sample>* samples_;
  std::vector<std::size_t> indices_;
};

struct IndexSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded 70/15/15 split of n items.
IndexSplit split_indices(std::size_t n, std::uint64_t seed);

struct Stage2Result {
  nn::Network net;
  nn::TrainHistory history;
  IndexSplit split;
  double test_accuracy = 0.0;
};

/// Defaults for the pair classifier: 10 epochs, no early stopping.
nn::TrainOptions stage2_train_options(std::uint64_t seed);

Stage2Result train_stage2(const std::vector<Stage2Sample>& samples, const nn::TrainOptions& options,
                          std::uint64_t split_seed, std::uint64_t init_seed,
                          const nn::EpochCallback& on_epoch = {});

struct PairPrediction {
  BeamPair pair;
  double confidence = 0.0;
  std::size_t cls = 0;
};

/// Argmax class (first on ties) decoded to a pair, with its probability.
PairPrediction predict_pair(const nn::Network& net, const BitMap& bitmap);
PairPrediction decode_prediction(const nn::Tensor& probabilities);

}  // namespace beamsel
