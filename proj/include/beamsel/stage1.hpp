#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beamsel/crops.hpp"
#include "beamsel/network.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/trainer.hpp"

namespace beamsel {

/// Conv(12, 5x5)+ReLU, Dropout .25, MaxPool 2, Flatten, Dense 128+ReLU,
/// Dropout .5, Dense `classes`, Softmax.
std::vector<nn::LayerSpec> detector_specs(std::size_t classes);

nn::Network make_stage1(std::size_t window, std::uint64_t seed);

struct Stage1DataOptions {
  /// Scene variants cycled through when choosing source images.
  std::vector<SceneConfig> scenes;
  std::size_t images_per_case = 2;
  std::uint64_t seed = 0;
  std::size_t stride = 5;
};

/// The default scene mix: both cameras with every obstacle kind.
std::vector<SceneConfig> default_stage1_scenes(const SceneConfig& base);

/// Renders images_per_case images per case at seeded light levels, labels
/// every crop, balances and splits.
CropSplits build_stage1_dataset(const Stage1DataOptions& options);

struct Stage1Result {
  nn::Network net;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
};

/// Trains with early stopping (patience 3, at most 20 epochs by default).
/// Throws ArgumentError for an empty training split.
Stage1Result train_stage1(const CropSplits& data, const nn::TrainOptions& options,
                          std::uint64_t init_seed, const nn::EpochCallback& on_epoch = {});

/// (rows, cols) tensor of antenna probabilities.
using HeatMap = nn::Tensor;
/// (rows, cols, channels) tensor of 0/1 cells.
using BitMap = nn::Tensor;

/// Per-crop antenna probability over the stride grid, on `threads` workers.
/// Throws RangeError if the image is smaller than the window.
HeatMap heatmap(const Image& img, const nn::Network& net, const CropGrid& grid,
                std::size_t threads = 1);

/// Exactly K ones at the K largest entries; ties go to the earlier cell in
/// row-major order. Throws RangeError for K outside [1, cells].
BitMap bitmap_topk(const HeatMap& hm, std::size_t K);

/// max(8, round(60 * cells / 29304)).
std::size_t default_topk(std::size_t cells);

}  // namespace beamsel
