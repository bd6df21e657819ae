#include "beamsel/snr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "beamsel/errors.hpp"
#include "beamsel/rng.hpp"

namespace beamsel {

Point2 tx_position(const SceneConfig& cfg, int stop) {
  validate(Case{stop, 1});
  const double x = cfg.room_width_cm / 2 + (stop - 3) * cfg.stop_spacing_cm();
  return {x, (cfg.room_depth_cm - cfg.slider_separation_cm) / 2};
}

Point2 rx_position(const SceneConfig& cfg, int stop) {
  validate(Case{1, stop});
  const double x = cfg.room_width_cm / 2 + (stop - 3) * cfg.stop_spacing_cm();
  return {x, (cfg.room_depth_cm + cfg.slider_separation_cm) / 2};
}

double beam_pattern_db(const SceneConfig& cfg, double offset_deg) {
  const double off = std::abs(offset_deg);
  if (off >= kBeamwidth3dBDeg) return cfg.sidelobe_floor_db;
  const double lin = 0.5 * (1.0 + std::cos(std::numbers::pi * off / kBeamwidth3dBDeg));
  return std::max(10.0 * std::log10(std::max(lin, 1e-300)), cfg.sidelobe_floor_db);
}

double beam_gain_db(const SceneConfig& cfg, int beam, double angle_deg) {
  return cfg.peak_gain_dbi + beam_pattern_db(cfg, angle_deg - beam_angle_deg(beam));
}

bool segment_blocked(const SceneConfig& cfg, Point2 a, Point2 b) {
  if (cfg.obstacle == Obstacle::None) return false;
  const double thick =
      cfg.obstacle == Obstacle::Wood ? cfg.wood_thickness_cm : cfg.cardbox_thickness_cm;
  const double cx = cfg.room_width_cm / 2, cy = cfg.room_depth_cm / 2;
  const double xmin = cx - cfg.obstacle_width_cm / 2, xmax = cx + cfg.obstacle_width_cm / 2;
  const double ymin = cy - thick / 2, ymax = cy + thick / 2;

  // Liang-Barsky clipping of the parametric segment a + t (b - a), t in [0, 1].
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - xmin, xmax - a.x, a.y - ymin, ymax - a.y};
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

namespace {

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double pathloss_db(const SceneConfig& cfg, double distance_cm) {
  return cfg.pathloss_ref_db + 10.0 * cfg.pathloss_exponent * std::log10(distance_cm / 100.0);
}

double obstacle_loss_db(const SceneConfig& cfg) {
  switch (cfg.obstacle) {
    case Obstacle::Wood: return cfg.wood_loss_db;
    case Obstacle::Cardbox: return cfg.cardbox_loss_db;
    case Obstacle::None: break;
  }
  return 0.0;
}

// Both angles follow the same sign rule: positive when the far end lies at
// larger x, seen from the transmitter looking toward +y and from the
// receiver looking toward -y with its own frame mirrored. Line-of-sight
// pairs are therefore (b, b).
double link_db(const SceneConfig& cfg, const BeamPair& p, Point2 tx, Point2 rx_image,
               Point2 tx_image, Point2 rx) {
  const double theta_tx = deg(std::atan2(rx_image.x - tx.x, rx_image.y - tx.y));
  const double theta_rx = deg(std::atan2(rx.x - tx_image.x, rx.y - tx_image.y));
  const double d = std::hypot(rx_image.x - tx.x, rx_image.y - tx.y);
  return cfg.tx_power_dbm - pathloss_db(cfg, d) + beam_gain_db(cfg, p.t, theta_tx) +
         beam_gain_db(cfg, p.r, theta_rx);
}

}  // namespace

PathBreakdown path_snr_db(const SceneConfig& cfg, const Case& c, const BeamPair& p) {
  (void)encode_pair(p);
  const Point2 tx = tx_position(cfg, c.i), rx = rx_position(cfg, c.j);
  const double block = obstacle_loss_db(cfg);
  PathBreakdown out;

  out.los_db = link_db(cfg, p, tx, rx, tx, rx);
  out.los_blocked = segment_blocked(cfg, tx, rx);
  if (out.los_blocked) out.los_db -= block;

  auto bounce = [&](double wall_x) {
    const Point2 rx_img{2 * wall_x - rx.x, rx.y};
    const Point2 tx_img{2 * wall_x - tx.x, tx.y};
    double v = link_db(cfg, p, tx, rx_img, tx_img, rx) - cfg.reflection_loss_db;
    // Reflection point where the unfolded ray meets the wall.
    const double t = (wall_x - tx.x) / (rx_img.x - tx.x);
    const Point2 hit{wall_x, tx.y + t * (rx_img.y - tx.y)};
    if (segment_blocked(cfg, tx, hit) || segment_blocked(cfg, hit, rx)) v -= block;
    return v;
  };
  out.left_wall_db = bounce(0.0);
  out.right_wall_db = bounce(cfg.room_width_cm);
  return out;
}

double mean_snr_db(const SceneConfig& cfg, const Case& c, const BeamPair& p) {
  const PathBreakdown b = path_snr_db(cfg, c, p);
  return std::max({b.los_db, b.left_wall_db, b.right_wall_db});
}

std::vector<double> snr_oracle(const SceneConfig& cfg, const Case& c, const BeamPair& p,
                               std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("snr_oracle needs n >= 1");
  const double mean = mean_snr_db(cfg, c, p);
  Rng rng = Rng(seed).split(case_index(c) * kPairCount + encode_pair(p));
  std::vector<double> out(n);
  for (double& v : out) {
    v = mean + cfg.jitter_db * rng.normal();
    if (v < cfg.nan_threshold_db) v = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

SnrTable generate_snr_table(const SceneConfig& cfg, std::size_t n, std::uint64_t seed) {
  cfg.validate();
  SnrTable table(n);
  for (const Case& c : all_cases()) {
    for (std::size_t k = 0; k < kPairCount; ++k) {
      const BeamPair p = decode_class(k);
      table.set(c, p, snr_oracle(cfg, c, p, n, seed));
    }
  }
  return table;
}

}  // namespace beamsel
