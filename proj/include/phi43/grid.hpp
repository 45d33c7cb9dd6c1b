#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>

#include "phi43/error.hpp"

namespace phi43 {

/// Lattice resolution. Sites are x = eps * m with m in {-N..N}^3 on the torus [-1,1]^3.
/// eps is kept implicit as the rational 2/(2N+1) and evaluated on demand.
struct GridSpec {
  int N = 1;

  int side() const noexcept { return 2 * N + 1; }
  double eps() const noexcept { return 2.0 / (2.0 * N + 1.0); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec make_grid(int N) {
  require(N >= 1, Errc::invalid_parameter, "lattice cut N must be >= 1");
  return GridSpec{N};
}

using Frequency = std::array<int, 3>;

inline int norm_inf(const Frequency& k) noexcept {
  return std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
}

inline long norm2(const Frequency& k) noexcept {
  return static_cast<long>(k[0]) * k[0] + static_cast<long>(k[1]) * k[1] +
         static_cast<long>(k[2]) * k[2];
}

inline Frequency operator-(const Frequency& k) noexcept { return {-k[0], -k[1], -k[2]}; }

inline Frequency operator+(const Frequency& a, const Frequency& b) noexcept {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline bool is_zero(const Frequency& k) noexcept { return k[0] == 0 && k[1] == 0 && k[2] == 0; }

/// Index triples (i1,i2,i3) in {-1,0,1}^3 without the origin, in lexicographic order.
/// These label the 26 aliasing blocks of the lattice cube.
using AliasTriple = std::array<int, 3>;

inline const std::array<AliasTriple, 26>& alias_triples() {
  static const std::array<AliasTriple, 26> triples = [] {
    std::array<AliasTriple, 26> out{};
    int n = 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a != 0 || b != 0 || c != 0) out[n++] = {a, b, c};
    return out;
  }();
  return triples;
}

inline int alias_index(const AliasTriple& t) {
  int idx = (t[0] + 1) * 9 + (t[1] + 1) * 3 + (t[2] + 1);
  return idx > 13 ? idx - 1 : idx;
}

}  // namespace phi43
