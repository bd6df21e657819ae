#include "beamsel/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "beamsel/errors.hpp"

namespace beamsel {

double iou(const Rect& a, const Rect& b) {
  const std::size_t r0 = std::max(a.top, b.top), r1 = std::min(a.top + a.height, b.top + b.height);
  const std::size_t c0 = std::max(a.left, b.left), c1 = std::min(a.left + a.width, b.left + b.width);
  const std::size_t inter = (r1 > r0 && c1 > c0) ? (r1 - r0) * (c1 - c0) : 0;
  const std::size_t uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TxSide tx_side_for_camera(int camera) { return camera == 2 ? TxSide::Right : TxSide::Left; }

namespace {

struct Cell {
  double row, col;
};

Rect grow_from(const std::vector<Cell>& cluster, std::size_t seed_row, std::size_t seed_col,
               std::size_t rows, std::size_t cols) {
  std::size_t r0 = seed_row, r1 = seed_row, c0 = seed_col, c1 = seed_col;  // inclusive
  auto captured = [&] {
    std::size_t n = 0;
    for (const Cell& c : cluster) {
      n += c.row >= static_cast<double>(r0) && c.row <= static_cast<double>(r1) &&
           c.col >= static_cast<double>(c0) && c.col <= static_cast<double>(c1);
    }
    return n;
  };
  std::size_t have = captured();
  while (true) {
    const std::size_t nr0 = r0 > 0 ? r0 - 1 : 0, nc0 = c0 > 0 ? c0 - 1 : 0;
    const std::size_t nr1 = std::min(rows - 1, r1 + 1), nc1 = std::min(cols - 1, c1 + 1);
    if (nr0 == r0 && nr1 == r1 && nc0 == c0 && nc1 == c1) break;
    const std::size_t pr0 = r0, pr1 = r1, pc0 = c0, pc1 = c1;
    r0 = nr0, r1 = nr1, c0 = nc0, c1 = nc1;
    const std::size_t now = captured();
    if (now == have) {
      r0 = pr0, r1 = pr1, c0 = pc0, c1 = pc1;
      break;
    }
    have = now;
  }
  // Tighten to the captured cells plus the seed.
  std::size_t br0 = seed_row, br1 = seed_row, bc0 = seed_col, bc1 = seed_col;
  for (const Cell& c : cluster) {
    const auto r = static_cast<std::size_t>(c.row), k = static_cast<std::size_t>(c.col);
    if (r < r0 || r > r1 || k < c0 || k > c1) continue;
    br0 = std::min(br0, r), br1 = std::max(br1, r), bc0 = std::min(bc0, k), bc1 = std::max(bc1, k);
  }
  return Rect{br0, bc0, br1 - br0 + 1, bc1 - bc0 + 1};
}

}  // namespace

DeviceBoxes extract_boxes(const BitMap& bm, TxSide tx_side) {
  if (bm.rank() != 3 && bm.rank() != 2) throw DimensionError("bitmap must be (rows, cols[, channels])");
  const std::size_t rows = bm.dim(0), cols = bm.dim(1);
  const std::size_t stride = bm.rank() == 3 ? bm.dim(2) : 1;
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (bm[(r * cols + c) * stride] > 0.5) cells.push_back({static_cast<double>(r), static_cast<double>(c)});
  if (cells.size() < 2) {
    throw DetectionError("bitmap has " + std::to_string(cells.size()) + " set cells, need at least 2");
  }

  // Leftmost / rightmost seeds; row-major first/last if all share a column.
  auto left = std::min_element(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.col < b.col || (a.col == b.col && a.row < b.row);
  });
  auto right = std::max_element(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.col < b.col || (a.col == b.col && a.row < b.row);
  });
  std::array<Cell, 2> centre{*left, *right};
  std::vector<int> assign(cells.size(), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto d = [&](const Cell& m) {
        return (cells[k].row - m.row) * (cells[k].row - m.row) + (cells[k].col - m.col) * (cells[k].col - m.col);
      };
      const int a = d(centre[1]) < d(centre[0]) ? 1 : 0;
      if (a != assign[k]) {
        assign[k] = a;
        changed = true;
      }
    }
    if (!changed) break;
    for (int m = 0; m < 2; ++m) {
      double sr = 0, sc = 0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (assign[k] != m) continue;
        sr += cells[k].row, sc += cells[k].col, ++n;
      }
      if (n > 0) centre[m] = {sr / static_cast<double>(n), sc / static_cast<double>(n)};
    }
  }

  std::array<Rect, 2> boxes;
  for (int m = 0; m < 2; ++m) {
    std::vector<Cell> cluster;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (assign[k] == m) cluster.push_back(cells[k]);
    }
    if (cluster.empty()) throw DetectionError("bitmap cells form a single cluster");
    const auto seed_r = static_cast<std::size_t>(std::lround(centre[m].row));
    const auto seed_c = static_cast<std::size_t>(std::lround(centre[m].col));
    boxes[m] = grow_from(cluster, seed_r, seed_c, rows, cols);
  }
  // Cluster 0 started at the leftmost cell, but compare centroids anyway.
  const int left_cluster = centre[0].col <= centre[1].col ? 0 : 1;
  const int tx = tx_side == TxSide::Left ? left_cluster : 1 - left_cluster;
  return DeviceBoxes{boxes[tx], boxes[1 - tx]};
}

Rect ground_truth_rect(const MarkerBox& box, const CropGrid& grid) {
  std::size_t r0 = grid.rows, r1 = 0, c0 = grid.cols, c1 = 0;
  bool any = false;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      if (!crop_hits_marker(GridPos{r, c}, grid, box)) continue;
      any = true;
      r0 = std::min(r0, r), r1 = std::max(r1, r), c0 = std::min(c0, c), c1 = std::max(c1, c);
    }
  }
  if (!any) throw DetectionError("marker covers no grid cell");
  return Rect{r0, c0, r1 - r0 + 1, c1 - c0 + 1};
}

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<std::size_t>& predictions,
                                                       const std::vector<std::size_t>& labels,
                                                       std::size_t classes) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("confusion matrix needs equal-length prediction and label lists");
  }
  std::vector<std::vector<std::size_t>> m(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= classes || predictions[k] >= classes) {
      throw RangeError("class index outside [0," + std::to_string(classes) + ")");
    }
    ++m[labels[k]][predictions[k]];
  }
  return m;
}

TimingStats summarize_timings(std::vector<double> samples_ms) {
  TimingStats s;
  s.samples_ms = samples_ms;
  if (samples_ms.empty()) return s;
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples_ms.size())));
    return samples_ms[std::clamp<std::size_t>(k, 1, samples_ms.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p95_ms = rank(0.95);
  return s;
}

TimingStats bench_inference(const std::function<void()>& pass, std::size_t repeats) {
  if (repeats < 10) throw RangeError("benchmark needs at least 10 repeats");
  for (int k = 0; k < 3; ++k) pass();
  std::vector<double> samples;
  samples.reserve(repeats);
  for (std::size_t k = 0; k < repeats; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    pass();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize_timings(std::move(samples));
}

LatencyReport latency_report(double predicted_ms, double dwell_ms, std::size_t pairs) {
  if (!(predicted_ms > 0) || !(dwell_ms > 0) || pairs == 0) {
    throw RangeError("latency report inputs must be positive");
  }
  LatencyReport r;
  r.predicted_ms = predicted_ms;
  r.dwell_ms = dwell_ms;
  r.pairs = pairs;
  r.sweep_ms = dwell_ms * static_cast<double>(pairs);
  r.reduction = 1.0 - predicted_ms / r.sweep_ms;
  return r;
}

}  // namespace beamsel
