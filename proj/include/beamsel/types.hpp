#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>

namespace beamsel {

inline constexpr int kStops = 5;
inline constexpr std::size_t kCaseCount = 25;
inline constexpr int kBeamCount = 13;
inline constexpr std::size_t kPairCount = 169;
inline constexpr int kMaxBeam = 24;

/// Transmitter stop i and receiver stop j, both 1..5.
struct Case {
  int i = 1;
  int j = 1;

  friend auto operator<=>(const Case&, const Case&) = default;
};

/// Throws RangeError unless both stops are in 1..5.
void validate(const Case& c);
/// Row-major index (i-1)*5 + (j-1).
std::size_t case_index(const Case& c);
Case case_from_index(std::size_t index);
std::array<Case, kCaseCount> all_cases();

/// Ordered (transmit, receive) codebook beam indices.
struct BeamPair {
  int t = 0;
  int r = 0;

  friend auto operator<=>(const BeamPair&, const BeamPair&) = default;
};

/// Beams 0, 2, ..., 24.
std::array<int, kBeamCount> codebook_beams();
bool is_codebook_beam(int beam) noexcept;
/// Boresight azimuth of a beam index: -60 + 5*beam degrees. Throws
/// RangeError for beams outside the codebook.
double beam_angle_deg(int beam);
inline constexpr double kBeamwidth3dBDeg = 25.0;

/// Pair <-> class index (t/2)*13 + r/2.
std::size_t encode_pair(const BeamPair& p);
BeamPair decode_class(std::size_t cls);

enum class Obstacle { None, Wood, Cardbox };

std::string to_string(Obstacle o);
/// Accepts "none", "wood" and "cardbox".
Obstacle parse_obstacle(std::string_view name);

}  // namespace beamsel
