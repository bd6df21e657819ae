#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <iterator>
#include <memory>
#include <vector>

#include "beamsel/rng.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/tensor.hpp"
#include "beamsel/trainer.hpp"

namespace beamsel {

struct CropCount {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t total = 0;

  friend bool operator==(const CropCount&, const CropCount&) = default;
};

/// rows = floor((H - W) / S) + 1, cols = floor((L - W) / S) + 1. Throws
/// RangeError when W exceeds either extent or when W or S is zero.
CropCount crop_count(std::size_t H, std::size_t L, std::size_t W, std::size_t S);

struct GridPos {
  std::size_t row = 0;
  std::size_t col = 0;

  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

struct CropGrid {
  std::size_t window = 12;
  std::size_t stride = 5;
  std::size_t rows = 0;
  std::size_t cols = 0;

  static CropGrid for_image(std::size_t H, std::size_t L, std::size_t W = 12, std::size_t S = 5);
  std::size_t size() const noexcept { return rows * cols; }
  /// Pixel offset of a grid cell's window.
  std::size_t top(std::size_t row) const noexcept { return row * stride; }
  std::size_t left(std::size_t col) const noexcept { return col * stride; }

  friend bool operator==(const CropGrid&, const CropGrid&) = default;
};

/// Exact pixel copy of the W x W window at grid cell `pos`.
nn::Tensor extract_crop(const Image& img, const CropGrid& grid, GridPos pos);

/// Lazily yields (position, crop) in row-major order starting top-left.
class CropSequence {
 public:
  struct Item {
    GridPos pos;
    nn::Tensor pixels;
  };

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Item;
    using difference_type = std::ptrdiff_t;
    using pointer = const Item*;
    using reference = const Item&;

    iterator() = default;
    reference operator*() const { return item_; }
    pointer operator->() const { return &item_; }
    iterator& operator++();
    iterator operator++(int) {
      iterator old = *this;
      ++*this;
      return old;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.index_ == b.index_; }

   private:
    friend class CropSequence;
    iterator(const CropSequence* seq, std::size_t index);
    void load();

    const CropSequence* seq_ = nullptr;
    std::size_t index_ = 0;
    Item item_;
  };

  CropSequence(const Image& img, CropGrid grid);

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, grid_.size()); }
  std::size_t size() const noexcept { return grid_.size(); }
  const CropGrid& grid() const noexcept { return grid_; }

 private:
  const Image* img_;
  CropGrid grid_;
};

/// Throws RangeError if the image is smaller than the window.
CropSequence generate_crops(const Image& img, const CropGrid& grid);

enum class CropLabel : std::uint8_t { Background = 0, Antenna = 1 };

/// Pixel overlap between a grid cell's window and a marker box.
std::size_t overlap_area(GridPos pos, const CropGrid& grid, const MarkerBox& box);

/// Antenna iff at least 30% of the window lies inside one non-occluded marker.
CropLabel label_crop(GridPos pos, const CropGrid& grid, const std::vector<MarkerBox>& markers);

/// Labels a crop relative to one marker only (used for ground-truth boxes).
bool crop_hits_marker(GridPos pos, const CropGrid& grid, const MarkerBox& box);

/// A crop stored as 8-bit base pixels (light 1.0) plus a light factor, so
/// duplicated positives share their source pixels.
struct LabeledCrop {
  std::shared_ptr<const std::vector<std::uint8_t>> base;
  std::size_t window = 0;
  double light = 1.0;
  CropLabel label = CropLabel::Background;
  GridPos pos;
  std::size_t image = 0;

  /// relight(base, light) as a (W, W, 3) tensor.
  nn::Tensor pixels() const;
  /// Source identity: duplicates of one crop share it.
  std::uint64_t group() const noexcept;
};

/// Every grid crop of one base scene, labelled from its markers and
/// relit by `light`.
std::vector<LabeledCrop> label_image_crops(const Scene& base, const CropGrid& grid, double light,
                                           std::size_t image_index);

struct CropSplits {
  std::vector<LabeledCrop> train;
  std::vector<LabeledCrop> val;
  std::vector<LabeledCrop> test;
};

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
};

/// Duplicates antenna crops (each copy gets a fresh light factor from the
/// 50-level schedule) until the classes are equal in size within one, then
/// splits whole duplicate groups 70/15/15 after a seeded shuffle. Throws
/// BalanceError if either class is absent.
CropSplits balance_and_split(std::vector<LabeledCrop> crops, std::uint64_t seed,
                             SplitFractions fractions = {});

/// Shuffles groups and assigns them by cumulative size to round(f.train*n),
/// round(f.val*n) and the rest. Returns the split index per item.
std::vector<int> split_groups(const std::vector<std::uint64_t>& groups, Rng rng,
                              SplitFractions fractions = {});

/// Adapts a crop list for training.
class CropSet final : public nn::ClassificationSet {
 public:
  explicit CropSet(const std::vector<LabeledCrop>& crops) : crops_(&crops) {}
  std::size_t size() const override { return crops_->size(); }
  nn::Tensor input(std::size_t i) const override { return (*crops_)[i].pixels(); }
  std::size_t label(std::size_t i) const override {
    return static_cast<std::size_t>((*crops_)[i].label);
  }

 private:
  const std::vector<LabeledCrop>* crops_;
};

/// Packed crop file: "BSC1", u32 W, u32 S, u32 count, then per crop a label
/// byte and W*W*3 float32 pixels, little-endian.
void write_crops(std::ostream& out, const std::vector<LabeledCrop>& crops, std::size_t stride);

struct CropFile {
  std::size_t window = 0;
  std::size_t stride = 0;
  nn::TensorSet set;
};
CropFile read_crops(std::istream& in);

}  // namespace beamsel
