#include "beamsel/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "beamsel/csv.hpp"
#include "beamsel/errors.hpp"

namespace beamsel {

namespace {

std::string describe(const Case& c, const BeamPair& p) {
  return "case (" + std::to_string(c.i) + "," + std::to_string(c.j) + ") pair (" +
         std::to_string(p.t) + "," + std::to_string(p.r) + ")";
}

// Equal when both are NaN or bitwise-equal values.
bool same_samples(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::isnan(a[k]) != std::isnan(b[k])) return false;
    if (!std::isnan(a[k]) && a[k] != b[k]) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- SnrTable

SnrTable::SnrTable(std::size_t samples_per_pair)
    : n_(samples_per_pair), entries_(kCaseCount * kPairCount) {
  if (n_ == 0) throw ArgumentError("SNR table needs at least one sample per pair");
}

std::size_t SnrTable::slot(const Case& c, const BeamPair& p) {
  return case_index(c) * kPairCount + encode_pair(p);
}

void SnrTable::set(const Case& c, const BeamPair& p, std::vector<double> samples) {
  if (samples.size() != n_) {
    throw DimensionError(describe(c, p) + ": expected " + std::to_string(n_) + " samples, got " +
                         std::to_string(samples.size()));
  }
  entries_[slot(c, p)] = std::move(samples);
}

bool SnrTable::has(const Case& c, const BeamPair& p) const { return entries_[slot(c, p)].has_value(); }

const std::vector<double>& SnrTable::get(const Case& c, const BeamPair& p) const {
  const auto& e = entries_[slot(c, p)];
  if (!e) throw IncompleteTableError("SNR table has no entry for " + describe(c, p));
  return *e;
}

std::size_t SnrTable::entry_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.has_value();
  return n;
}

bool operator==(const SnrTable& a, const SnrTable& b) {
  if (a.n_ != b.n_) return false;
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    const auto &x = a.entries_[k], &y = b.entries_[k];
    if (x.has_value() != y.has_value()) return false;
    if (x && !same_samples(*x, *y)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- quality

Quality quality(const std::vector<double>& samples) {
  if (samples.empty()) throw ArgumentError("quality needs at least one sample");
  Quality out;
  double sum = 0.0;
  for (double v : samples) {
    if (std::isnan(v)) {
      ++out.nulls;
    } else {
      ++out.valid;
      sum += v;
    }
  }
  if (out.valid > 0) {
    out.q = (sum / static_cast<double>(out.valid)) / static_cast<double>(out.nulls + 1);
  }
  return out;
}

void QualityTable::set(const Case& c, const BeamPair& p, Quality q) {
  entries_[case_index(c) * kPairCount + encode_pair(p)] = q;
}

bool QualityTable::has(const Case& c, const BeamPair& p) const {
  return entries_[case_index(c) * kPairCount + encode_pair(p)].has_value();
}

const Quality& QualityTable::get(const Case& c, const BeamPair& p) const {
  const auto& e = entries_[case_index(c) * kPairCount + encode_pair(p)];
  if (!e) throw IncompleteTableError("quality table has no entry for " + describe(c, p));
  return *e;
}

QualityTable quality_table(const SnrTable& snr) {
  QualityTable out;
  for (const Case& c : all_cases()) {
    for (std::size_t k = 0; k < kPairCount; ++k) {
      const BeamPair p = decode_class(k);
      if (snr.has(c, p)) out.set(c, p, quality(snr.get(c, p)));
    }
  }
  return out;
}

BeamPair best_pair(const QualityTable& q, const Case& c) {
  // Class order is t-major then r, so a strict comparison keeps the
  // smallest (t, r) among equal maxima.
  BeamPair best = decode_class(0);
  double best_q = q.get(c, best).q;
  for (std::size_t k = 1; k < kPairCount; ++k) {
    const BeamPair p = decode_class(k);
    const double v = q.get(c, p).q;
    if (v > best_q) {
      best_q = v;
      best = p;
    }
  }
  return best;
}

// ---------------------------------------------------------------- labels

void LabelTable::set(const Case& c, const BeamPair& p) {
  (void)encode_pair(p);
  pairs_[case_index(c)] = p;
}

bool LabelTable::has(const Case& c) const { return pairs_[case_index(c)].has_value(); }

const BeamPair& LabelTable::at(const Case& c) const {
  const auto& e = pairs_[case_index(c)];
  if (!e) {
    throw IncompleteTableError("label table has no entry for case (" + std::to_string(c.i) + "," +
                               std::to_string(c.j) + ")");
  }
  return *e;
}

bool LabelTable::complete() const {
  for (const auto& e : pairs_) {
    if (!e) return false;
  }
  return true;
}

LabelTable build_label_table(const SnrTable& snr) {
  const QualityTable q = quality_table(snr);
  LabelTable out;
  for (const Case& c : all_cases()) {
    const BeamPair p = best_pair(q, c);
    if (q.get(c, p).valid == 0) {
      throw IncompleteTableError("every beam pair of case (" + std::to_string(c.i) + "," +
                                 std::to_string(c.j) + ") has only NaN samples");
    }
    out.set(c, p);
  }
  return out;
}

// ---------------------------------------------------------------- CSV

void write_snr_csv(std::ostream& out, const SnrTable& table) {
  out << "i,j,t,r,sample_index,snr\n";
  for (const Case& c : all_cases()) {
    for (std::size_t k = 0; k < kPairCount; ++k) {
      const BeamPair p = decode_class(k);
      if (!table.has(c, p)) continue;
      const auto& s = table.get(c, p);
      for (std::size_t n = 0; n < s.size(); ++n) {
        out << c.i << ',' << c.j << ',' << p.t << ',' << p.r << ',' << n << ','
            << csv::format_double(s[n]) << '\n';
      }
    }
  }
}

SnrTable read_snr_csv(std::istream& in) {
  csv::expect_header(in, "i,j,t,r,sample_index,snr");
  struct Row {
    Case c;
    BeamPair p;
    std::size_t index;
    double value;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 1;
  std::size_t n = 0;
  while (csv::next_row(in, line, line_no)) {
    const auto f = csv::split(line);
    csv::expect_fields(f, 6, line_no);
    Row r{Case{static_cast<int>(csv::parse_int(f[0], line_no)),
               static_cast<int>(csv::parse_int(f[1], line_no))},
          BeamPair{static_cast<int>(csv::parse_int(f[2], line_no)),
                   static_cast<int>(csv::parse_int(f[3], line_no))},
          static_cast<std::size_t>(csv::parse_int(f[4], line_no)), csv::parse_double(f[5], line_no)};
    try {
      validate(r.c);
      (void)encode_pair(r.p);
    } catch (const Error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    n = std::max(n, r.index + 1);
    rows.push_back(r);
  }
  if (rows.empty()) throw FormatError("SNR CSV has no rows");

  std::vector<std::vector<double>> grouped(kCaseCount * kPairCount);
  std::vector<std::vector<bool>> seen(kCaseCount * kPairCount);
  for (const Row& r : rows) {
    const std::size_t s = case_index(r.c) * kPairCount + encode_pair(r.p);
    if (grouped[s].empty()) {
      grouped[s].assign(n, 0.0);
      seen[s].assign(n, false);
    }
    if (seen[s][r.index]) throw FormatError("duplicate SNR sample for " + describe(r.c, r.p));
    seen[s][r.index] = true;
    grouped[s][r.index] = r.value;
  }
  SnrTable table(n);
  for (std::size_t s = 0; s < grouped.size(); ++s) {
    if (grouped[s].empty()) continue;
    for (bool b : seen[s]) {
      if (!b) throw FormatError("SNR CSV has gaps in sample indices");
    }
    table.set(case_from_index(s / kPairCount), decode_class(s % kPairCount), std::move(grouped[s]));
  }
  return table;
}

void write_label_csv(std::ostream& out, const LabelTable& table) {
  out << "i,j,t,r\n";
  for (const Case& c : all_cases()) {
    if (!table.has(c)) continue;
    const BeamPair& p = table.at(c);
    out << c.i << ',' << c.j << ',' << p.t << ',' << p.r << '\n';
  }
}

LabelTable read_label_csv(std::istream& in) {
  csv::expect_header(in, "i,j,t,r");
  LabelTable table;
  std::string line;
  std::size_t line_no = 1;
  while (csv::next_row(in, line, line_no)) {
    const auto f = csv::split(line);
    csv::expect_fields(f, 4, line_no);
    const Case c{static_cast<int>(csv::parse_int(f[0], line_no)),
                 static_cast<int>(csv::parse_int(f[1], line_no))};
    const BeamPair p{static_cast<int>(csv::parse_int(f[2], line_no)),
                     static_cast<int>(csv::parse_int(f[3], line_no))};
    try {
      if (table.has(c)) throw FormatError("duplicate case");
      table.set(c, p);
    } catch (const Error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace beamsel
