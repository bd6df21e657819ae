#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "beamsel/types.hpp"

namespace beamsel {

/// N SNR samples (dB, NaN for dropouts) for every (case, pair).
class SnrTable {
 public:
  explicit SnrTable(std::size_t samples_per_pair = 50);

  std::size_t samples_per_pair() const noexcept { return n_; }
  /// Throws DimensionError unless `samples` has samples_per_pair() entries.
  void set(const Case& c, const BeamPair& p, std::vector<double> samples);
  bool has(const Case& c, const BeamPair& p) const;
  /// Throws IncompleteTableError for a missing entry.
  const std::vector<double>& get(const Case& c, const BeamPair& p) const;
  std::size_t entry_count() const noexcept;
  bool complete() const noexcept { return entry_count() == kCaseCount * kPairCount; }

  friend bool operator==(const SnrTable& a, const SnrTable& b);

 private:
  static std::size_t slot(const Case& c, const BeamPair& p);

  std::size_t n_;
  std::vector<std::optional<std::vector<double>>> entries_;
};

struct Quality {
  double q = -std::numeric_limits<double>::infinity();
  std::size_t valid = 0;
  std::size_t nulls = 0;
};

/// Q = mean(valid samples) / (nulls + 1); -infinity when no sample is valid.
/// Throws ArgumentError for an empty list.
Quality quality(const std::vector<double>& samples);

class QualityTable {
 public:
  void set(const Case& c, const BeamPair& p, Quality q);
  bool has(const Case& c, const BeamPair& p) const;
  /// Throws IncompleteTableError for a missing entry.
  const Quality& get(const Case& c, const BeamPair& p) const;

 private:
  std::array<std::optional<Quality>, kCaseCount * kPairCount> entries_{};
};

QualityTable quality_table(const SnrTable& snr);

/// Argmax of Q over all 169 pairs of `c`; ties go to the smallest t, then r.
BeamPair best_pair(const QualityTable& q, const Case& c);

class LabelTable {
 public:
  void set(const Case& c, const BeamPair& p);
  bool has(const Case& c) const;
  /// Throws IncompleteTableError for a missing case.
  const BeamPair& at(const Case& c) const;
  bool complete() const;

  friend bool operator==(const LabelTable&, const LabelTable&) = default;

 private:
  std::array<std::optional<BeamPair>, kCaseCount> pairs_{};
};

/// Best pair per case. Throws IncompleteTableError when the SNR table is
/// incomplete or when every pair of some case has no valid sample.
LabelTable build_label_table(const SnrTable& snr);

/// `i,j,t,r,sample_index,snr` with NaN spelled out.
void write_snr_csv(std::ostream& out, const SnrTable& table);
SnrTable read_snr_csv(std::istream& in);

/// `i,j,t,r`, one row per case.
void write_label_csv(std::ostream& out, const LabelTable& table);
/// Accepts a full or partial table; rows must be distinct, valid cases.
LabelTable read_label_csv(std::istream& in);

}  // namespace beamsel
