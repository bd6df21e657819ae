#include "beamsel/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>

#include "beamsel/errors.hpp"

namespace beamsel::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

namespace {

[[noreturn]] void bad_field(std::string_view field, std::size_t line_no, const char* what) {
  throw FormatError("line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not " + what);
}

}  // namespace

long long parse_int(std::string_view field, std::size_t line_no) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    bad_field(field, line_no, "an integer");
  }
  return v;
}

double parse_double(std::string_view field, std::size_t line_no) {
  if (field == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || std::isnan(v)) {
    bad_field(field, line_no, "a number");
  }
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

bool next_row(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

void expect_header(std::istream& in, std::string_view expected) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_row(in, line, line_no)) throw FormatError("missing CSV header '" + std::string(expected) + "'");
  if (line != expected) {
    throw FormatError("CSV header '" + line + "' does not match '" + std::string(expected) + "'");
  }
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t count, std::size_t line_no) {
  if (fields.size() != count) {
    throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(count) +
                      " fields, got " + std::to_string(fields.size()));
  }
}

}  // namespace beamsel::csv
