#pragma once

#include <cmath>
#include <cstdint>

#include "phi43/field.hpp"
#include "phi43/rng.hpp"

namespace phi43 {

/// Hermitian, mean-zero Gaussian field on band B with coefficient std (1 + |k|^2)^(-decay/2).
/// Real and imaginary parts of each orbit are independent; draws are keyed by (seed, replica).
inline SpectralField gaussian_field(int band, std::uint64_t seed, std::uint32_t replica = 0,
                                    double decay = 0.0, rng::Stream stream = rng::Stream::test) {
  SpectralField f(band);
  for (int a = -band; a <= band; ++a)
    for (int b = -band; b <= band; ++b)
      for (int c = -band; c <= band; ++c) {
        const Frequency k{a, b, c};
        if (!rng::is_canonical(k)) continue;
        const auto z = rng::orbit_normals(seed, stream, k, 0xFFFFFFF0u, replica);
        const double s = std::pow(1.0 + static_cast<double>(norm2(k)), -0.5 * decay) / std::sqrt(2.0);
        const cplx v{s * z.z1_re, s * z.z1_im};
        f[k] = v;
        f[-k] = std::conj(v);
      }
  return f;
}

}  // namespace phi43
