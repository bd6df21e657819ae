#include "beamsel/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "beamsel/errors.hpp"
#include "beamsel/parallel.hpp"

namespace beamsel {

std::vector<nn::LayerSpec> detector_specs(std::size_t classes) {
  using nn::LayerSpec;
  return {LayerSpec::conv2d(12, 5),  LayerSpec::dropout(0.25),    LayerSpec::max_pool(2),
          LayerSpec::flatten(),      LayerSpec::dense(128, true), LayerSpec::dropout(0.5),
          LayerSpec::dense(classes), LayerSpec::softmax()};
}

nn::Network make_stage1(std::size_t window, std::uint64_t seed) {
  return nn::Network({window, window, 3}, detector_specs(2), Rng(seed));
}

std::vector<SceneConfig> default_stage1_scenes(const SceneConfig& base) {
  std::vector<SceneConfig> out;
  for (int camera : {1, 2}) {
    for (Obstacle ob : {Obstacle::None, Obstacle::Wood, Obstacle::Cardbox}) {
      SceneConfig s = base;
      s.camera = camera;
      s.obstacle = ob;
      out.push_back(s);
    }
  }
  return out;
}

CropSplits build_stage1_dataset(const Stage1DataOptions& options) {
  if (options.scenes.empty()) throw ArgumentError("stage 1 dataset needs at least one scene");
  if (options.images_per_case == 0) throw ArgumentError("images_per_case must be positive");
  const Rng root(options.seed);
  Rng light_rng = root.split(1);
  std::vector<LabeledCrop> crops;
  std::size_t image = 0;
  for (const Case& c : all_cases()) {
    for (std::size_t m = 0; m < options.images_per_case; ++m, ++image) {
      const SceneConfig& cfg = options.scenes[image % options.scenes.size()];
      const CropGrid grid = CropGrid::for_image(cfg.rows, cfg.cols, cfg.crop_window, options.stride);
      const double light = light_factor(1 + light_rng.below(kLightLevels));
      auto part = label_image_crops(render_base(cfg, c), grid, light, image);
      crops.insert(crops.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
  }
  return balance_and_split(std::move(crops), root.split(2).next_u64());
}

Stage1Result train_stage1(const CropSplits& data, const nn::TrainOptions& options,
                          std::uint64_t init_seed, const nn::EpochCallback& on_epoch) {
  if (data.train.empty()) throw ArgumentError("stage 1 training split is empty");
  const std::size_t W = data.train.front().window;
  Stage1Result out{make_stage1(W, init_seed), {}, 0.0};
  const CropSet train(data.train), val(data.val), test(data.test);
  out.history = nn::train_classifier(out.net, train, val, options, on_epoch);
  out.test_accuracy = nn::accuracy(out.net, test);
  return out;
}

HeatMap heatmap(const Image& img, const nn::Network& net, const CropGrid& grid, std::size_t threads) {
  if (img.rank() != 3 || img.dim(0) < grid.window || img.dim(1) < grid.window) {
    throw RangeError("image " + nn::shape_string(img.shape()) + " is smaller than the " +
                     std::to_string(grid.window) + "-pixel window");
  }
  const CropGrid g = CropGrid::for_image(img.dim(0), img.dim(1), grid.window, grid.stride);
  HeatMap hm({g.rows, g.cols});
  parallel_for(g.size(), threads, [&](std::size_t k) {
    const GridPos pos{k / g.cols, k % g.cols};
    hm[k] = net.infer(extract_crop(img, g, pos))[1];
  });
  return hm;
}

BitMap bitmap_topk(const HeatMap& hm, std::size_t K) {
  const std::size_t n = hm.size();
  if (K == 0 || K > n) {
    throw RangeError("top-K " + std::to_string(K) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(K), idx.end(),
                    [&](std::size_t a, std::size_t b) { return hm[a] > hm[b] || (hm[a] == hm[b] && a < b); });
  BitMap bm({hm.dim(0), hm.dim(1), 1});
  for (std::size_t k = 0; k < K; ++k) bm[idx[k]] = 1.0;
  return bm;
}

std::size_t default_topk(std::size_t cells) {
  const auto scaled = static_cast<std::size_t>(std::llround(60.0 * static_cast<double>(cells) / 29304.0));
  return std::max<std::size_t>(8, scaled);
}

}  // namespace beamsel
