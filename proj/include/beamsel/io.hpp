#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "beamsel/network.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/stage1.hpp"

namespace beamsel {

/// Writes through a sibling temp file and renames it over `path`, so a
/// reader never sees a half-written artifact.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& writer);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
/// Throws MissingInputError if the file cannot be opened.
std::string read_text(const std::filesystem::path& path);

// Netpbm. Pixel values are stored as [0,1] doubles; a channel value v maps
// to the byte round(v * maxval).

void write_ppm(std::ostream& out, const Image& img);
/// P6, maxval 255 only. Result shape (rows, cols, 3).
Image read_ppm(std::istream& in);
/// Single-channel map as P5 with the given maxval (1 for bitmaps, 255 for
/// heat maps). Values are clamped to [0,1] first.
void write_pgm(std::ostream& out, const nn::Tensor& map, unsigned maxval = 255);
/// P5 with maxval in [1,255]. Result shape (rows, cols, 1).
nn::Tensor read_pgm(std::istream& in);

void save_ppm(const std::filesystem::path& path, const Image& img);
Image load_ppm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const nn::Tensor& map, unsigned maxval = 255);
nn::Tensor load_pgm(const std::filesystem::path& path);

// Weights file "BSW1": little-endian, u16 version, u8 topology, u32 layer
// count, input shape (u8 rank, u32 dims), then per layer a u16-prefixed name
// such as "conv2d+relu:12:5x5" followed by u8 tensor count and per tensor
// u8 dtype tag, u8 rank, u32 dims and f64 payload (weight, then bias).

inline constexpr std::uint16_t kWeightsVersion = 1;

void write_weights(std::ostream& out, const nn::Network& net);
/// Throws FormatError on a bad magic or malformed record, TruncationError on
/// a short file and VersionError on an unknown version.
nn::Network read_weights(std::istream& in);
void save_weights(const std::filesystem::path& path, const nn::Network& net);
nn::Network load_weights(const std::filesystem::path& path);

/// Layer record name, e.g. "maxpool:2" or "dropout:0.25".
std::string layer_name(const nn::Layer& layer);

}  // namespace beamsel
