#include "fixtures.hpp"

#include "beamsel/stage1.hpp"

namespace beamsel::testing {

const nn::Network& trained_detector() {
  static const nn::Network net = [] {
    Stage1DataOptions opt;
    opt.scenes = default_stage1_scenes(SceneConfig{});
    opt.images_per_case = 1;
    opt.seed = 101;
    const CropSplits data = build_stage1_dataset(opt);
    nn::TrainOptions o;
    o.max_epochs = 2;
    o.seed = 102;
    return train_stage1(data, o, 103).net;
  }();
  return net;
}

}  // namespace beamsel::testing
