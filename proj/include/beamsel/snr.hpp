#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beamsel/labeler.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/types.hpp"

namespace beamsel {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Top-view device positions (cm).
Point2 tx_position(const SceneConfig& cfg, int stop);
Point2 rx_position(const SceneConfig& cfg, int stop);

/// Raised-cosine mainlobe with half power at half the 3 dB beamwidth,
/// floored at cfg.sidelobe_floor_db. `offset_deg` is the angle off boresight.
double beam_pattern_db(const SceneConfig& cfg, double offset_deg);
/// Peak gain plus pattern for a codebook beam steered at `angle_deg`.
double beam_gain_db(const SceneConfig& cfg, int beam, double angle_deg);

/// True when segment a-b crosses the obstacle footprint (none: never).
bool segment_blocked(const SceneConfig& cfg, Point2 a, Point2 b);

struct PathBreakdown {
  double los_db = 0.0;
  double left_wall_db = 0.0;   // reflection off x = 0
  double right_wall_db = 0.0;  // reflection off x = room width
  bool los_blocked = false;
};

PathBreakdown path_snr_db(const SceneConfig& cfg, const Case& c, const BeamPair& p);

/// Strongest of the line-of-sight and single-bounce paths.
double mean_snr_db(const SceneConfig& cfg, const Case& c, const BeamPair& p);

/// n noisy samples around mean_snr_db; samples below the reporting floor
/// come back as NaN. Deterministic in (cfg, c, p, seed).
std::vector<double> snr_oracle(const SceneConfig& cfg, const Case& c, const BeamPair& p,
                               std::size_t n, std::uint64_t seed);

/// All 25 x 169 entries.
SnrTable generate_snr_table(const SceneConfig& cfg, std::size_t n, std::uint64_t seed);

}  // namespace beamsel
