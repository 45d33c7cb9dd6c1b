#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/field.hpp"

namespace phi43::io {

// Layout: 8-byte magic "PHI43FLD", u32 version, u32 kind (0 spectral, 1 lattice),
// i32 N or M, i32 band (-1 for lattice data), then little-endian float64 values.
// Spectral payload is (re, im) per k in row-major order over {-B..B}^3.
inline constexpr char kMagic[8] = {'P', 'H', 'I', '4', '3', 'F', 'L', 'D'};
inline constexpr std::uint32_t kFieldVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  require(static_cast<bool>(is), Errc::io_failure, "truncated field file");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void header(std::ostream& os, std::uint32_t kind, std::int32_t n, std::int32_t band) {
  os.write(kMagic, sizeof(kMagic));
  put(os, kFieldVersion);
  put(os, kind);
  put(os, n);
  put(os, band);
}

inline void check_header(std::istream& is, std::uint32_t kind) {
  char magic[8];
  is.read(magic, sizeof(magic));
  require(static_cast<bool>(is) && std::memcmp(magic, kMagic, 8) == 0, Errc::io_failure,
          "not a field file");
  require(get<std::uint32_t>(is) == kFieldVersion, Errc::io_failure, "unsupported field file version");
  require(get<std::uint32_t>(is) == kind, Errc::io_failure, "field kind mismatch");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), Errc::io_failure, "cannot open " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), Errc::io_failure, "cannot open " + path);
  return is;
}

}  // namespace detail

/// N is informational (the lattice cut the field belongs to); band fixes the payload size.
inline void write_spectral(std::ostream& os, const SpectralField& f, int N) {
  detail::header(os, 0, N, f.band());
  for (const auto& c : f.coeffs()) {
    detail::put(os, c.real());
    detail::put(os, c.imag());
  }
  require(static_cast<bool>(os), Errc::io_failure, "write failed");
}

inline SpectralField read_spectral(std::istream& is, int* N = nullptr) {
  detail::check_header(is, 0);
  const auto n = detail::get<std::int32_t>(is);
  const auto band = detail::get<std::int32_t>(is);
  require(band >= 0 && band < 4096, Errc::io_failure, "bad band in field file");
  SpectralField f(band);
  for (auto& c : f.coeffs()) {
    const double re = detail::get<double>(is);
    const double im = detail::get<double>(is);
    c = {re, im};
  }
  if (N) *N = n;
  return f;
}

inline void write_lattice(std::ostream& os, const LatticeField& v) {
  detail::header(os, 1, v.side(), -1);
  for (double x : v.values()) detail::put(os, x);
  require(static_cast<bool>(os), Errc::io_failure, "write failed");
}

inline LatticeField read_lattice(std::istream& is) {
  detail::check_header(is, 1);
  const auto M = detail::get<std::int32_t>(is);
  detail::get<std::int32_t>(is);
  require(M >= 1 && M < 4096, Errc::io_failure, "bad side in field file");
  LatticeField v(M);
  for (auto& x : v.storage()) x = detail::get<double>(is);
  return v;
}

inline void save_spectral(const std::string& path, const SpectralField& f, int N) {
  auto os = detail::open_out(path);
  write_spectral(os, f, N);
}

inline SpectralField load_spectral(const std::string& path, int* N = nullptr) {
  auto is = detail::open_in(path);
  return read_spectral(is, N);
}

inline void save_lattice(const std::string& path, const LatticeField& v) {
  auto os = detail::open_out(path);
  write_lattice(os, v);
}

inline LatticeField load_lattice(const std::string& path) {
  auto is = detail::open_in(path);
  return read_lattice(is);
}

}  // namespace phi43::io
