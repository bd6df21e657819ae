#include "beamsel/stage2.hpp"

#include <algorithm>
#include <cmath>

#include "beamsel/errors.hpp"
#include "beamsel/fcn.hpp"

namespace beamsel {

std::string to_string(DetectMode m) { return m == DetectMode::Fcn ? "fcn" : "per-crop"; }

DetectMode parse_mode(std::string_view name) {
  if (name == "per-crop") return DetectMode::PerCrop;
  if (name == "fcn") return DetectMode::Fcn;
  throw ArgumentError("unknown mode '" + std::string(name) + "' (expected per-crop or fcn)");
}

HeatMap Detector::heat(const Image& img) const {
  if (mode == DetectMode::Fcn) {
    if (fcn == nullptr) throw StateError("fcn mode needs a converted network");
    HeatMap hm = fcn_heatmap(*fcn, img);
    if (!align_fcn) return hm;
    const std::size_t W = fcn->input_shape()[0];
    return resample_heatmap(hm, fcn_stride(*fcn), CropGrid::for_image(img.dim(0), img.dim(1), W, stride));
  }
  if (cnn == nullptr) throw StateError("per-crop mode needs a stage 1 network");
  const std::size_t W = cnn->input_shape()[0];
  if (img.rank() != 3 || img.dim(0) < W || img.dim(1) < W) {
    throw RangeError("image is smaller than the " + std::to_string(W) + "-pixel window");
  }
  return heatmap(img, *cnn, CropGrid::for_image(img.dim(0), img.dim(1), W, stride), threads);
}

BitMap Detector::bitmap(const Image& img) const {
  const HeatMap hm = heat(img);
  if (mode == DetectMode::Fcn && !align_fcn) {
    const CropCount crop = crop_count(img.dim(0), img.dim(1), fcn->input_shape()[0], stride);
    const std::size_t k = topk == 0 ? default_topk(crop.total) : topk;
    return bitmap_topk(hm, fcn_topk(k, crop.total, hm.size()));
  }
  return bitmap_topk(hm, topk == 0 ? default_topk(hm.size()) : topk);
}

std::size_t fcn_topk(std::size_t crop_k, std::size_t crop_cells, std::size_t fcn_cells) {
  if (crop_cells == 0) throw RangeError("crop grid has no cells");
  const double k = static_cast<double>(crop_k) * static_cast<double>(fcn_cells) / static_cast<double>(crop_cells);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(k)), 1, fcn_cells);
}

std::pair<std::size_t, std::size_t> Detector::grid_shape(std::size_t rows, std::size_t cols) const {
  if (mode == DetectMode::Fcn && !align_fcn) {
    if (fcn == nullptr) throw StateError("fcn mode needs a converted network");
    const nn::Shape out = fcn->output_shape({rows, cols, fcn->input_shape()[2]});
    return {out[0], out[1]};
  }
  const nn::Network* net = mode == DetectMode::Fcn ? fcn : cnn;
  if (net == nullptr) throw StateError(to_string(mode) + " mode needs a network");
  const CropCount c = crop_count(rows, cols, net->input_shape()[0], stride);
  return {c.rows, c.cols};
}

BitMap stack_bitmaps(const std::vector<BitMap>& maps) {
  if (maps.empty() || maps.size() > 8) {
    throw RangeError("can stack 1 to 8 bitmaps, got " + std::to_string(maps.size()));
  }
  const std::size_t rows = maps[0].dim(0), cols = maps[0].dim(1);
  std::size_t channels = 0;
  for (const BitMap& m : maps) {
    if (m.rank() != 3 || m.dim(0) != rows || m.dim(1) != cols) {
      throw DimensionError("bitmap " + nn::shape_string(m.shape()) + " does not match grid (" +
                           std::to_string(rows) + "," + std::to_string(cols) + ")");
    }
    channels += m.dim(2);
  }
  if (channels > 8) throw RangeError("stacked bitmap would have more than 8 channels");
  BitMap out({rows, cols, channels});
  std::size_t ch0 = 0;
  for (const BitMap& m : maps) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t k = 0; k < m.dim(2); ++k) out.at(r, c, ch0 + k) = m.at(r, c, k);
    ch0 += m.dim(2);
  }
  return out;
}

nn::Network make_stage2(std::size_t rows, std::size_t cols, std::size_t channels, std::uint64_t seed) {
  return nn::Network({rows, cols, channels}, detector_specs(kPairCount), Rng(seed));
}

std::vector<Stage2Sample> build_stage2_dataset(const std::vector<SceneConfig>& cameras,
                                               const LabelTable& labels, const Detector& detector,
                                               std::size_t levels) {
  if (cameras.empty()) throw ArgumentError("stage 2 dataset needs at least one camera");
  std::vector<Stage2Sample> out;
  out.reserve(kCaseCount * levels);
  for (const Case& c : all_cases()) {
    if (!labels.has(c)) {
      throw EncodingError("label table has no pair for case (" + std::to_string(c.i) + "," +
                          std::to_string(c.j) + ")");
    }
    const std::size_t label = encode_pair(labels.at(c));
    std::vector<Scene> bases;
    for (const SceneConfig& cam : cameras) bases.push_back(render_base(cam, c));
    for (std::size_t level = 1; level <= levels; ++level) {
      const double f = light_factor(level, levels);
      std::vector<BitMap> maps;
      for (const Scene& s : bases) maps.push_back(detector.bitmap(relight(s.image, f)));
      out.push_back(Stage2Sample{c, level, stack_bitmaps(maps), label});
    }
  }
  return out;
}

IndexSplit split_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint64_t> groups(n);
  for (std::size_t k = 0; k < n; ++k) groups[k] = k;
  const std::vector<int> split = split_groups(groups, Rng(seed));
  IndexSplit out;
  for (std::size_t k = 0; k < n; ++k) {
    (split[k] == 0 ? out.train : split[k] == 1 ? out.val : out.test).push_back(k);
  }
  return out;
}

nn::TrainOptions stage2_train_options(std::uint64_t seed) {
  nn::TrainOptions o;
  o.max_epochs = 10;
  o.patience = 0;
  o.restore_best = false;
  o.seed = seed;
  return o;
}

Stage2Result train_stage2(const std::vector<Stage2Sample>& samples, const nn::TrainOptions& options,
                          std::uint64_t split_seed, std::uint64_t init_seed,
                          const nn::EpochCallback& on_epoch) {
  if (samples.empty()) throw ArgumentError("stage 2 dataset is empty");
  for (const Stage2Sample& s : samples) {
    if (s.label >= kPairCount) throw EncodingError("label class " + std::to_string(s.label) + " outside [0,168]");
  }
  const nn::Shape& shape = samples.front().bitmap.shape();
  Stage2Result out{make_stage2(shape[0], shape[1], shape[2], init_seed), {}, split_indices(samples.size(), split_seed), 0.0};
  const Stage2Set train(samples, out.split.train), val(samples, out.split.val),
      test(samples, out.split.test);
  out.history = nn::train_classifier(out.net, train, val, options, on_epoch);
  out.test_accuracy = nn::accuracy(out.net, test);
  return out;
}

PairPrediction decode_prediction(const nn::Tensor& probabilities) {
  if (probabilities.size() != kPairCount) {
    throw DimensionError("expected 169 class probabilities, got " + std::to_string(probabilities.size()));
  }
  const std::size_t cls = nn::argmax(probabilities);
  return PairPrediction{decode_class(cls), probabilities[cls], cls};
}

PairPrediction predict_pair(const nn::Network& net, const BitMap& bitmap) {
  const nn::Shape& in = net.input_shape();
  if (bitmap.rank() != 3 || bitmap.dim(2) != in[2]) {
    throw DimensionError("network expects " + std::to_string(in[2]) + " bitmap channels, got " +
                         nn::shape_string(bitmap.shape()));
  }
  return decode_prediction(net.infer(bitmap));
}

}  // namespace beamsel
