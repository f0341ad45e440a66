// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Explicit little-endian encoding, independent of host byte order.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace sylva::byte_io {

template <typename U>
void write_le(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, sizeof(U));
}

template <typename U>
bool read_le(std::istream& in, U& v) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return true;
}

inline void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
inline void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

inline bool read_u8(std::istream& in, std::uint8_t& v) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) return false;
  v = static_cast<std::uint8_t>(c);
  return true;
}
inline bool read_u32(std::istream& in, std::uint32_t& v) { return read_le(in, v); }
inline bool read_u64(std::istream& in, std::uint64_t& v) { return read_le(in, v); }
inline bool read_f32(std::istream& in, float& v) {
  std::uint32_t u;
  if (!read_le(in, u)) return false;
  v = std::bit_cast<float>(u);
  return true;
}
inline bool read_f64(std::istream& in, double& v) {
  std::uint64_t u;
  if (!read_le(in, u)) return false;
  v = std::bit_cast<double>(u);
  return true;
}

}  // namespace sylva::byte_io
