#include "beamsel/fcn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "beamsel/crops.hpp"
#include "beamsel/errors.hpp"

namespace beamsel {

using nn::LayerKind;

nn::Network convert_cnn_to_fcn(const nn::Network& cnn) {
  std::size_t flatten_at = cnn.layer_count();
  for (std::size_t i = 0; i < cnn.layer_count(); ++i) {
    if (cnn.layer(i).kind() != LayerKind::Flatten) continue;
    if (flatten_at != cnn.layer_count()) throw ConversionError("network has more than one Flatten");
    flatten_at = i;
  }
  if (flatten_at == cnn.layer_count()) throw ConversionError("network has no Flatten layer");

  std::vector<std::unique_ptr<nn::Layer>> layers;
  nn::Shape shape = cnn.input_shape();
  for (std::size_t i = 0; i < flatten_at; ++i) {
    const nn::Layer& l = cnn.layer(i);
    if (l.kind() == LayerKind::Dense || l.kind() == LayerKind::Softmax) {
      throw ConversionError(to_string(l.kind()) + " before Flatten is not supported");
    }
    shape = l.output_shape(shape);
    if (l.kind() != LayerKind::Dropout) layers.push_back(l.clone());
  }
  if (shape.size() != 3) throw ConversionError("Flatten input must be (rows, cols, channels)");

  bool first_dense = true;
  for (std::size_t i = flatten_at + 1; i < cnn.layer_count(); ++i) {
    const nn::Layer& l = cnn.layer(i);
    switch (l.kind()) {
      case LayerKind::Dropout:
        break;
      case LayerKind::Softmax:
        layers.push_back(l.clone());
        break;
      case LayerKind::Dense: {
        const auto& d = dynamic_cast<const nn::Dense&>(l);
        nn::Tensor w = d.weight();
        const std::size_t units = w.dim(1);
        // Flatten order (row, col, channel) matches the kernel layout, so
        // the reshape is a pure view.
        if (first_dense) {
          w.reshape({shape[0], shape[1], shape[2], units});
        } else {
          w.reshape({1, 1, w.dim(0), units});
        }
        layers.push_back(std::make_unique<nn::Conv2D>(std::move(w), d.bias(), d.relu()));
        first_dense = false;
        break;
      }
      default:
        throw ConversionError(to_string(l.kind()) + " after Flatten is not supported");
    }
    if (first_dense && l.kind() == LayerKind::Softmax) {
      throw ConversionError("Softmax directly after Flatten is not supported");
    }
  }
  if (first_dense) throw ConversionError("Flatten is not followed by a Dense layer");
  return nn::Network(cnn.input_shape(), std::move(layers), nn::Topology::Fcn);
}

std::size_t fcn_stride(const nn::Network& fcn) {
  std::size_t s = 1;
  for (std::size_t i = 0; i < fcn.layer_count(); ++i) {
    if (const auto* p = dynamic_cast<const nn::MaxPool2D*>(&fcn.layer(i))) s *= p->pool();
  }
  return s;
}

nn::Tensor fcn_infer(const nn::Network& fcn, const Image& img) {
  const nn::Shape& in = fcn.input_shape();
  if (img.rank() != 3 || img.dim(0) < in[0] || img.dim(1) < in[1]) {
    throw RangeError("image " + nn::shape_string(img.shape()) + " is smaller than the " +
                     nn::shape_string(in) + " window");
  }
  return fcn.infer(img);
}

HeatMap fcn_heatmap(const nn::Network& fcn, const Image& img) {
  const nn::Tensor out = fcn_infer(fcn, img);
  const std::size_t rows = out.dim(0), cols = out.dim(1), classes = out.dim(2);
  if (classes < 2) throw DimensionError("FCN heat map needs at least two classes");
  HeatMap hm({rows, cols});
  for (std::size_t k = 0; k < rows * cols; ++k) hm[k] = out[k * classes + 1];
  return hm;
}

HeatMap resample_heatmap(const HeatMap& hm, std::size_t src_stride, const CropGrid& dst) {
  if (src_stride == 0) throw RangeError("source stride must be positive");
  const std::size_t rows = hm.dim(0), cols = hm.dim(1);
  auto nearest = [&](std::size_t px, std::size_t limit) {
    if (px / src_stride >= limit) throw RangeError("target grid reaches past the source heat map");
    return std::min((2 * px + src_stride) / (2 * src_stride), limit - 1);  // round half up
  };
  HeatMap out({dst.rows, dst.cols});
  for (std::size_t r = 0; r < dst.rows; ++r) {
    const std::size_t sr = nearest(r * dst.stride, rows);
    for (std::size_t c = 0; c < dst.cols; ++c) out[r * dst.cols + c] = hm[sr * cols + nearest(c * dst.stride, cols)];
  }
  return out;
}

double equivalence_check(const nn::Network& cnn, const nn::Network& fcn, const Image& img,
                         std::size_t trials, std::uint64_t seed) {
  const nn::Tensor dense = fcn_infer(fcn, img);
  const std::size_t s = fcn_stride(fcn);
  const std::size_t W = cnn.input_shape()[0];
  const CropGrid grid{W, s, dense.dim(0), dense.dim(1)};
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const GridPos pos{rng.below(dense.dim(0)), rng.below(dense.dim(1))};
    const nn::Tensor ref = cnn.infer(extract_crop(img, grid, pos));
    for (std::size_t k = 0; k < ref.size(); ++k) {
      worst = std::max(worst, std::abs(dense.at(pos.row, pos.col, k) - ref[k]));
    }
  }
  return worst;
}

}  // namespace beamsel
