#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "beamsel/crops.hpp"
#include "beamsel/scene.hpp"
#include "beamsel/stage1.hpp"

namespace beamsel {

/// Rectangle in grid cells.
struct Rect {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t area() const noexcept { return height * width; }
  bool contains(std::size_t row, std::size_t col) const noexcept {
    return row >= top && row < top + height && col >= left && col < left + width;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Intersection area over union area.
double iou(const Rect& a, const Rect& b);

enum class TxSide { Left, Right };

/// The transmitter slider's side of the image for a camera: left for
/// camera 1, right for camera 2.
TxSide tx_side_for_camera(int camera);

struct DeviceBoxes {
  Rect tx;
  Rect rx;
};

/// Splits the set cells of channel 0 into two clusters (2-means on cell
/// coordinates seeded at the leftmost and rightmost set cells), then grows
/// a rectangle from each rounded centroid one cell per side until a round
/// captures no new cell of that cluster. The cluster on `tx_side` is the
/// transmitter. Throws DetectionError with fewer than two set cells.
DeviceBoxes extract_boxes(const BitMap& bm, TxSide tx_side);

/// Bounding box of the grid cells whose windows label positive against
/// `box`. Throws DetectionError if no cell qualifies.
Rect ground_truth_rect(const MarkerBox& box, const CropGrid& grid);

/// Entry (i, j) counts samples of class i predicted as j.
std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<std::size_t>& predictions,
                                                       const std::vector<std::size_t>& labels,
                                                       std::size_t classes);

struct TimingStats {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

/// Three warm-up calls, then `repeats` timed calls. Throws RangeError for
/// repeats below 10.
TimingStats bench_inference(const std::function<void()>& pass, std::size_t repeats);

/// Summary statistics of raw samples (nearest-rank percentiles).
TimingStats summarize_timings(std::vector<double> samples_ms);

struct LatencyReport {
  double predicted_ms = 0.0;
  double dwell_ms = 0.0;
  std::size_t pairs = 0;
  double sweep_ms = 0.0;
  double reduction = 0.0;
};

/// sweep = dwell * pairs, reduction = 1 - predicted / sweep. Throws
/// RangeError for non-positive inputs.
LatencyReport latency_report(double predicted_ms, double dwell_ms, std::size_t pairs);

}  // namespace beamsel
