#pragma once

#include <cstddef>
#include <cstdint>

#include "beamsel/network.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/stage1.hpp"

namespace beamsel {

/// Replaces the first Dense after Flatten with a Conv2D whose kernel spans
/// the whole pre-flatten map (same weights, reshaped (rows, cols, channels,
/// units)), turns later Dense layers into 1x1 convolutions and drops Flatten
/// and Dropout. The source network is left untouched.
/// Throws ConversionError for anything but one Flatten followed only by
/// Dense, Dropout and Softmax layers with a Dense first.
nn::Network convert_cnn_to_fcn(const nn::Network& cnn);

/// Product of the pooling extents: FCN output cell (a, b) corresponds to the
/// source window at pixel offset (stride*a, stride*b).
std::size_t fcn_stride(const nn::Network& fcn);

/// Dense prediction map (rows, cols, classes). Throws RangeError when the
/// image is smaller than the network's window.
nn::Tensor fcn_infer(const nn::Network& fcn, const Image& img);

/// Antenna-probability channel of fcn_infer as a (rows, cols) heat map.
HeatMap fcn_heatmap(const nn::Network& fcn, const Image& img);

/// Samples a dense map (cell pitch `src_stride` pixels) at the window
/// offsets of `dst`: cell (r, c) takes the source cell nearest to pixel
/// (r*dst.stride, c*dst.stride). Lets FCN output feed a network trained on
/// stride-S grids. Throws RangeError if `dst` reaches past the source map.
HeatMap resample_heatmap(const HeatMap& hm, std::size_t src_stride, const CropGrid& dst);

/// Max |fcn(a, b) - cnn(window at (s*a, s*b))| over `trials` random cells
/// and every class.
double equivalence_check(const nn::Network& cnn, const nn::Network& fcn, const Image& img,
                         std::size_t trials, std::uint64_t seed);

}  // namespace beamsel
