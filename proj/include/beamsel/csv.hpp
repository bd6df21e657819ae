#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace beamsel::csv {

/// Splits on ','; no quoting.
std::vector<std::string_view> split(std::string_view line);

/// Throws FormatError with the line number on malformed input.
long long parse_int(std::string_view field, std::size_t line_no);
/// Accepts "NaN" in addition to ordinary decimal notation.
double parse_double(std::string_view field, std::size_t line_no);

/// Shortest representation that parses back to the same double; NaN as "NaN".
std::string format_double(double v);

/// Reads the header line and checks it equals `expected`.
void expect_header(std::istream& in, std::string_view expected);
/// Next non-empty line, or false at end of input. Increments `line_no`.
bool next_row(std::istream& in, std::string& line, std::size_t& line_no);
/// Throws FormatError unless `fields` has `count` entries.
void expect_fields(const std::vector<std::string_view>& fields, std::size_t count,
                   std::size_t line_no);

}  // namespace beamsel::csv
