#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "beamsel/errors.hpp"
#include "beamsel/stage1.hpp"
#include "fixtures.hpp"

using namespace beamsel;

namespace {

// Indices of the K largest entries by full sort (value desc, index asc).
std::vector<std::size_t> topk_oracle(const HeatMap& hm, std::size_t K) {
  std::vector<std::size_t> idx(hm.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return hm[a] > hm[b] || (hm[a] == hm[b] && a < b);
  });
  idx.resize(K);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> ones(const BitMap& bm) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < bm.size(); ++k)
    if (bm[k] == 1.0) out.push_back(k);
  return out;
}

HeatMap random_heatmap(std::size_t rows, std::size_t cols, Rng& rng, bool coarse) {
  HeatMap hm({rows, cols});
  for (double& v : hm.values()) v = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
  return hm;
}

}  // namespace

TEST_CASE("top-K bitmap matches a sort oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const HeatMap hm = random_heatmap(28, 38, rng, trial % 2 == 0);
    const BitMap bm = bitmap_topk(hm, 60);
    CHECK(bm.shape() == nn::Shape{28, 38, 1});
    REQUIRE(ones(bm) == topk_oracle(hm, 60));
    for (double v : bm.values()) REQUIRE((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("top-K edge cases and nesting") {
  Rng rng(2);
  const HeatMap hm = random_heatmap(10, 12, rng, true);
  CHECK(ones(bitmap_topk(hm, hm.size())).size() == hm.size());
  const auto single = ones(bitmap_topk(hm, 1));
  REQUIRE(single.size() == 1);
  CHECK(single[0] == static_cast<std::size_t>(std::max_element(hm.values().begin(), hm.values().end()) -
                                              hm.values().begin()));
  std::vector<std::size_t> prev;
  for (std::size_t K = 1; K <= hm.size(); ++K) {
    const auto cur = ones(bitmap_topk(hm, K));
    REQUIRE(cur.size() == K);
    REQUIRE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    prev = cur;
  }
  CHECK_THROWS_AS(bitmap_topk(hm, 0), RangeError);
  CHECK_THROWS_AS(bitmap_topk(hm, hm.size() + 1), RangeError);
}

TEST_CASE("default K scales with grid area") {
  CHECK(default_topk(29304) == 60);
  CHECK(default_topk(1064) == 8);
  CHECK(default_topk(2 * 29304) == 120);
}

TEST_CASE("heat map equals per-crop inference composed with crop generation") {
  const nn::Network net = make_stage1(12, 9);
  Rng rng(8);
  Image img({40, 53, 3});
  for (double& v : img.values()) v = rng.uniform();
  const CropGrid grid = CropGrid::for_image(40, 53, 12, 5);
  const HeatMap hm = heatmap(img, net, grid);
  REQUIRE(hm.shape() == nn::Shape{grid.rows, grid.cols});
  for (const auto& item : generate_crops(img, grid)) {
    REQUIRE(hm[item.pos.row * grid.cols + item.pos.col] == net.infer(item.pixels)[1]);
  }
  CHECK(heatmap(img, net, grid, 3) == hm);
  CHECK_THROWS_AS(heatmap(Image({8, 8, 3}), net, grid), RangeError);
}

TEST_CASE("full-scale heat map is 148 x 198") {
  const nn::Network net = make_stage1(12, 1);
  SceneConfig cfg;
  cfg.rows = 750;
  cfg.cols = 1000;
  const Image img = render_base(cfg, Case{3, 3}).image;
  const HeatMap hm = heatmap(img, net, CropGrid::for_image(750, 1000), 1);
  CHECK(hm.shape() == nn::Shape{148, 198});
}

TEST_CASE("separable crops are learned perfectly within two epochs") {
  nn::TensorSet train, test;
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    nn::Tensor red({12, 12, 3}), gray({12, 12, 3});
    for (std::size_t p = 0; p < 144; ++p) {
      red[3 * p] = 0.8 + 0.1 * rng.uniform();
      red[3 * p + 1] = red[3 * p + 2] = 0.1 * rng.uniform();
      gray[3 * p] = gray[3 * p + 1] = gray[3 * p + 2] = 0.4 + 0.1 * rng.uniform();
    }
    (k < 160 ? train : test).add(red, 1);
    (k < 160 ? train : test).add(gray, 0);
  }
  nn::Network net = make_stage1(12, 4);
  nn::TrainOptions o;
  o.max_epochs = 2;
  o.batch_size = 32;
  o.patience = 0;
  nn::train_classifier(net, train, test, o);
  CHECK(nn::accuracy(net, test) == 1.0);
}

TEST_CASE("stage 1 training is deterministic for a seed") {
  Stage1DataOptions opt;
  opt.scenes = {SceneConfig{}};
  opt.images_per_case = 1;
  opt.seed = 3;
  CropSplits data = build_stage1_dataset(opt);
  data.train.resize(std::min<std::size_t>(data.train.size(), 1500));
  data.val.resize(std::min<std::size_t>(data.val.size(), 300));
  data.test.resize(std::min<std::size_t>(data.test.size(), 300));
  nn::TrainOptions o;
  o.max_epochs = 2;
  o.seed = 12;
  const Stage1Result a = train_stage1(data, o, 5);
  const Stage1Result b = train_stage1(data, o, 5);
  CHECK(a.history == b.history);
  CHECK(a.test_accuracy == b.test_accuracy);
  for (std::size_t k = 0; k < a.net.parameters().size(); ++k) {
    CHECK(*a.net.parameters()[k] == *b.net.parameters()[k]);
  }
}

TEST_CASE("trained detector: background stays below 0.5 and lighting barely matters") {
  const nn::Network& net = testing::trained_detector();
  const Image blank({150, 200, 3}, 0.45);
  const HeatMap hm = heatmap(blank, net, CropGrid::for_image(150, 200));
  CHECK(*std::max_element(hm.values().begin(), hm.values().end()) < 0.5);

  // Held-out accuracy at the darkest and brightest factors.
  auto acc_at = [&](double light) {
    std::size_t hit = 0, n = 0;
    for (int camera : {1, 2}) {
      SceneConfig cfg;
      cfg.camera = camera;
      cfg.obstacle = Obstacle::Cardbox;
      for (const Case& c : {Case{1, 5}, Case{4, 2}}) {
        const auto crops = label_image_crops(render_base(cfg, c), CropGrid::for_image(150, 200), light, 0);
        for (const LabeledCrop& crop : crops) {
          hit += nn::argmax(net.infer(crop.pixels())) == static_cast<std::size_t>(crop.label);
          ++n;
        }
      }
    }
    return static_cast<double>(hit) / static_cast<double>(n);
  };
  const double dark = acc_at(0.4), bright = acc_at(1.6);
  CHECK(std::abs(dark - bright) <= 0.02);
  CHECK(dark > 0.97);
}
