#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "phi43/grid.hpp"

namespace phi43::rng {

inline constexpr const char* kSchemeId = "philox4x32-10";

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC11).
inline Counter philox4x32_10(Counter ctr, Key key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform in (0,1) from 53 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals from one block (Box-Muller).
inline std::pair<double, double> normal_pair(const Counter& block) {
  const double u1 = to_unit(block[0], block[1]);
  const double u2 = to_unit(block[2], block[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

/// Purposes of independent streams.
enum class Stream : std::uint32_t {
  noise = 1,       // Brownian increments of the shared noise
  stationary = 2,  // stationary draws of the stochastic convolution
  initial = 3,     // initial data
  test = 4,        // random test fields
};

/// Orbit label of a frequency; independent of N for |k_j| < 512.
inline std::uint32_t orbit_code(const Frequency& k) {
  return static_cast<std::uint32_t>(((k[0] + 512) * 1024 + (k[1] + 512)) * 1024 + (k[2] + 512));
}

/// Representative of {k, -k}: the first nonzero component is positive.
inline bool is_canonical(const Frequency& k) {
  for (int v : k)
    if (v != 0) return v > 0;
  return false;
}

/// Complex Gaussian pair (Z1, Z2) attached to a key, orbit, step and replica.
/// Each component is standard normal; Z1 and Z2 are independent.
struct OrbitNormals {
  double z1_re, z1_im, z2_re, z2_im;
};

inline OrbitNormals orbit_normals(std::uint64_t seed, Stream stream, const Frequency& k,
                                  std::uint32_t step, std::uint32_t replica) {
  const Key key = key_from_seed(seed);
  const std::uint32_t code = orbit_code(k);
  const auto a = normal_pair(philox4x32_10({code, step, replica, static_cast<std::uint32_t>(stream)}, key));
  const auto b = normal_pair(
      philox4x32_10({code | 0x80000000u, step, replica, static_cast<std::uint32_t>(stream)}, key));
  return {a.first, a.second, b.first, b.second};
}

/// Sequential normal generator for plumbing (test fields, initial data).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, Stream stream, std::uint32_t replica = 0, std::uint32_t sub = 0)
      : key_(key_from_seed(seed)), stream_(static_cast<std::uint32_t>(stream)), replica_(replica),
        sub_(sub) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    const auto p = normal_pair(philox4x32_10({counter_++, sub_, replica_, stream_ | 0x100u}, key_));
    spare_ = p.second;
    have_ = true;
    return p.first;
  }

  double uniform() {
    const auto b = philox4x32_10({counter_++, sub_, replica_, stream_ | 0x200u}, key_);
    return to_unit(b[0], b[1]);
  }

 private:
  Key key_;
  std::uint32_t stream_, replica_, sub_;
  std::uint32_t counter_ = 0;
  bool have_ = false;
  double spare_ = 0.0;
};

}  // namespace phi43::rng
