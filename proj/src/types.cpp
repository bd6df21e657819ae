#include "beamsel/types.hpp"

#include "beamsel/errors.hpp"

namespace beamsel {

void validate(const Case& c) {
  if (c.i < 1 || c.i > kStops || c.j < 1 || c.j > kStops) {
    throw RangeError("case (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                     ") outside stops 1..5");
  }
}

std::size_t case_index(const Case& c) {
  validate(c);
  return static_cast<std::size_t>((c.i - 1) * kStops + (c.j - 1));
}

Case case_from_index(std::size_t index) {
  if (index >= kCaseCount) throw RangeError("case index " + std::to_string(index) + " >= 25");
  return Case{static_cast<int>(index / kStops) + 1, static_cast<int>(index % kStops) + 1};
}

std::array<Case, kCaseCount> all_cases() {
  std::array<Case, kCaseCount> out{};
  for (std::size_t k = 0; k < kCaseCount; ++k) out[k] = case_from_index(k);
  return out;
}

std::array<int, kBeamCount> codebook_beams() {
  std::array<int, kBeamCount> out{};
  for (int k = 0; k < kBeamCount; ++k) out[k] = 2 * k;
  return out;
}

bool is_codebook_beam(int beam) noexcept { return beam >= 0 && beam <= kMaxBeam && beam % 2 == 0; }

double beam_angle_deg(int beam) {
  if (!is_codebook_beam(beam)) throw RangeError("beam " + std::to_string(beam) + " not in codebook");
  return -60.0 + 5.0 * beam;
}

std::size_t encode_pair(const BeamPair& p) {
  if (!is_codebook_beam(p.t) || !is_codebook_beam(p.r)) {
    throw EncodingError("pair (" + std::to_string(p.t) + "," + std::to_string(p.r) +
                        ") not in codebook");
  }
  return static_cast<std::size_t>((p.t / 2) * kBeamCount + p.r / 2);
}

BeamPair decode_class(std::size_t cls) {
  if (cls >= kPairCount) throw EncodingError("class " + std::to_string(cls) + " outside [0,168]");
  return BeamPair{static_cast<int>(cls / kBeamCount) * 2, static_cast<int>(cls % kBeamCount) * 2};
}

std::string to_string(Obstacle o) {
  switch (o) {
    case Obstacle::None: return "none";
    case Obstacle::Wood: return "wood";
    case Obstacle::Cardbox: return "cardbox";
  }
  return "none";
}

Obstacle parse_obstacle(std::string_view name) {
  if (name == "none") return Obstacle::None;
  if (name == "wood") return Obstacle::Wood;
  if (name == "cardbox") return Obstacle::Cardbox;
  throw ArgumentError("unknown obstacle '" + std::string(name) + "'");
}

}  // namespace beamsel
