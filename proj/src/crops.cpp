#include "beamsel/crops.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "beamsel/binio.hpp"
#include "beamsel/errors.hpp"

namespace beamsel {

CropCount crop_count(std::size_t H, std::size_t L, std::size_t W, std::size_t S) {
  if (W == 0 || S == 0) throw RangeError("crop window and stride must be positive");
  if (W > H || W > L) {
    throw RangeError("crop window " + std::to_string(W) + " exceeds image " + std::to_string(H) +
                     "x" + std::to_string(L));
  }
  CropCount c;
  c.rows = (H - W) / S + 1;
  c.cols = (L - W) / S + 1;
  c.total = c.rows * c.cols;
  return c;
}

CropGrid CropGrid::for_image(std::size_t H, std::size_t L, std::size_t W, std::size_t S) {
  const CropCount c = crop_count(H, L, W, S);
  return CropGrid{W, S, c.rows, c.cols};
}

nn::Tensor extract_crop(const Image& img, const CropGrid& grid, GridPos pos) {
  const std::size_t W = grid.window, ch = img.dim(2);
  const std::size_t top = grid.top(pos.row), left = grid.left(pos.col);
  if (top + W > img.dim(0) || left + W > img.dim(1)) {
    throw RangeError("crop at grid (" + std::to_string(pos.row) + "," + std::to_string(pos.col) +
                     ") leaves the image");
  }
  nn::Tensor out({W, W, ch});
  for (std::size_t r = 0; r < W; ++r) {
    const double* src = img.data() + ((top + r) * img.dim(1) + left) * ch;
    std::copy(src, src + W * ch, out.data() + r * W * ch);
  }
  return out;
}

CropSequence::CropSequence(const Image& img, CropGrid grid) : img_(&img), grid_(grid) {}

CropSequence::iterator::iterator(const CropSequence* seq, std::size_t index)
    : seq_(seq), index_(index) {
  load();
}

void CropSequence::iterator::load() {
  if (index_ >= seq_->grid_.size()) return;
  item_.pos = GridPos{index_ / seq_->grid_.cols, index_ % seq_->grid_.cols};
  item_.pixels = extract_crop(*seq_->img_, seq_->grid_, item_.pos);
}

CropSequence::iterator& CropSequence::iterator::operator++() {
  ++index_;
  load();
  return *this;
}

CropSequence generate_crops(const Image& img, const CropGrid& grid) {
  const CropGrid expected = CropGrid::for_image(img.dim(0), img.dim(1), grid.window, grid.stride);
  if (!(expected == grid)) throw DimensionError("crop grid does not match the image extents");
  return CropSequence(img, grid);
}

std::size_t overlap_area(GridPos pos, const CropGrid& grid, const MarkerBox& box) {
  const std::size_t top = grid.top(pos.row), left = grid.left(pos.col);
  const std::size_t r0 = std::max(top, box.top), r1 = std::min(top + grid.window, box.top + box.height);
  const std::size_t c0 = std::max(left, box.left), c1 = std::min(left + grid.window, box.left + box.width);
  if (r1 <= r0 || c1 <= c0) return 0;
  return (r1 - r0) * (c1 - c0);
}

bool crop_hits_marker(GridPos pos, const CropGrid& grid, const MarkerBox& box) {
  // overlap / W^2 >= 0.3 in integers.
  return 10 * overlap_area(pos, grid, box) >= 3 * grid.window * grid.window;
}

CropLabel label_crop(GridPos pos, const CropGrid& grid, const std::vector<MarkerBox>& markers) {
  for (const MarkerBox& m : markers) {
    if (!m.occluded && crop_hits_marker(pos, grid, m)) return CropLabel::Antenna;
  }
  return CropLabel::Background;
}

nn::Tensor LabeledCrop::pixels() const {
  nn::Tensor out({window, window, 3});
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double v = std::clamp(static_cast<double>((*base)[k]) / 255.0 * light, 0.0, 1.0);
    out[k] = std::round(v * 255.0) / 255.0;
  }
  return out;
}

std::uint64_t LabeledCrop::group() const noexcept {
  return (static_cast<std::uint64_t>(image) << 32) | (static_cast<std::uint64_t>(pos.row) << 16) |
         static_cast<std::uint64_t>(pos.col);
}

std::vector<LabeledCrop> label_image_crops(const Scene& base, const CropGrid& grid, double light,
                                           std::size_t image_index) {
  std::vector<LabeledCrop> out;
  out.reserve(grid.size());
  for (const auto& item : generate_crops(base.image, grid)) {
    auto bytes = std::make_shared<std::vector<std::uint8_t>>(item.pixels.size());
    for (std::size_t k = 0; k < item.pixels.size(); ++k) {
      (*bytes)[k] = static_cast<std::uint8_t>(std::lround(item.pixels[k] * 255.0));
    }
    LabeledCrop c;
    c.base = std::move(bytes);
    c.window = grid.window;
    c.light = light;
    c.label = label_crop(item.pos, grid, base.markers);
    c.pos = item.pos;
    c.image = image_index;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<int> split_groups(const std::vector<std::uint64_t>& groups, Rng rng,
                              SplitFractions fractions) {
  if (fractions.train < 0 || fractions.val < 0 || fractions.train + fractions.val > 1.0) {
    throw RangeError("split fractions must be non-negative and sum to at most 1");
  }
  std::unordered_map<std::uint64_t, std::size_t> index;
  std::vector<std::uint64_t> order;
  std::vector<std::size_t> sizes;
  for (std::uint64_t g : groups) {
    auto [it, fresh] = index.emplace(g, order.size());
    if (fresh) {
      order.push_back(g);
      sizes.push_back(0);
    }
    ++sizes[it->second];
  }
  std::vector<std::size_t> perm(order.size());
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
  rng.shuffle(std::span<std::size_t>(perm));

  const double n = static_cast<double>(groups.size());
  const auto target_train = static_cast<std::size_t>(std::llround(fractions.train * n));
  const auto target_val = static_cast<std::size_t>(std::llround(fractions.val * n));
  std::vector<int> group_split(order.size());
  std::size_t n_train = 0, n_val = 0;
  for (std::size_t k : perm) {
    if (n_train < target_train) {
      group_split[k] = 0;
      n_train += sizes[k];
    } else if (n_val < target_val) {
      group_split[k] = 1;
      n_val += sizes[k];
    } else {
      group_split[k] = 2;
    }
  }
  std::vector<int> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = group_split[index.at(groups[i])];
  return out;
}

CropSplits balance_and_split(std::vector<LabeledCrop> crops, std::uint64_t seed,
                             SplitFractions fractions) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t k = 0; k < crops.size(); ++k) {
    (crops[k].label == CropLabel::Antenna ? pos : neg).push_back(k);
  }
  if (pos.empty() || neg.empty()) {
    throw BalanceError("balancing needs both classes (antenna " + std::to_string(pos.size()) +
                       ", background " + std::to_string(neg.size()) + ")");
  }
  const Rng root(seed);
  Rng light_rng = root.split(1);
  const std::vector<std::size_t>& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
  crops.reserve(crops.size() + deficit);
  for (std::size_t k = 0; k < deficit; ++k) {
    LabeledCrop copy = crops[minority[k % minority.size()]];
    copy.light = light_factor(1 + light_rng.below(kLightLevels));
    crops.push_back(std::move(copy));
  }

  std::vector<std::uint64_t> groups(crops.size());
  for (std::size_t k = 0; k < crops.size(); ++k) groups[k] = crops[k].group();
  const std::vector<int> split = split_groups(groups, root.split(2), fractions);

  CropSplits out;
  for (std::size_t k = 0; k < crops.size(); ++k) {
    auto& dst = split[k] == 0 ? out.train : split[k] == 1 ? out.val : out.test;
    dst.push_back(std::move(crops[k]));
  }
  return out;
}

void write_crops(std::ostream& out, const std::vector<LabeledCrop>& crops, std::size_t stride) {
  const std::size_t W = crops.empty() ? 0 : crops.front().window;
  out.write("BSC1", 4);
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(W));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(stride));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(crops.size()));
  for (const LabeledCrop& c : crops) {
    if (c.window != W) throw DimensionError("crops in one file must share a window size");
    out.put(static_cast<char>(c.label));
    const nn::Tensor px = c.pixels();
    for (double v : px.values()) binio::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("failed writing crop file");
}

CropFile read_crops(std::istream& in) {
  binio::expect_magic(in, "BSC1");
  CropFile f;
  f.window = binio::get_uint<std::uint32_t>(in, "crop header");
  f.stride = binio::get_uint<std::uint32_t>(in, "crop header");
  const std::uint32_t count = binio::get_uint<std::uint32_t>(in, "crop header");
  if (count > 0 && f.window == 0) throw FormatError("crop file declares zero window");
  for (std::uint32_t k = 0; k < count; ++k) {
    const int label = in.get();
    if (label == std::char_traits<char>::eof()) throw TruncationError("crop file ends inside a record");
    if (label > 1) throw FormatError("crop label byte must be 0 or 1");
    nn::Tensor px({f.window, f.window, 3});
    for (double& v : px.values()) v = binio::get_f32(in, "crop pixels");
    f.set.add(std::move(px), static_cast<std::size_t>(label));
  }
  return f;
}

}  // namespace beamsel
