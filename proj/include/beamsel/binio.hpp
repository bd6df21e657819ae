#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "beamsel/errors.hpp"

// Little-endian primitives for the packed file formats.
namespace beamsel::binio {

template <typename U>
void put_uint(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
  out.write(buf, sizeof(U));
}

template <typename U>
U get_uint(std::istream& in, const char* what) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw TruncationError(std::string("file ends inside ") + what);
  }
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(buf[k]) << (8 * k);
  return v;
}

inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

inline float get_f32(std::istream& in, const char* what) {
  return std::bit_cast<float>(get_uint<std::uint32_t>(in, what));
}
inline double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_uint<std::uint64_t>(in, what));
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  if (!in.read(buf, 4)) throw TruncationError("file too short for magic");
  if (std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace beamsel::binio
