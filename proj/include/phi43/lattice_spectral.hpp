#pragma once

#include <cmath>

#include "phi43/error.hpp"
#include "phi43/fft.hpp"
#include "phi43/field.hpp"
#include "phi43/grid.hpp"

namespace phi43 {

/// Analyses a lattice field with side 2N+1 into band-N coefficients.
/// The mean (coefficient at k = 0) is projected away; its value goes to *removed_mean.
inline SpectralField dft_forward(const LatticeField& field, double* removed_mean = nullptr) {
  const int side = field.side();
  require(side >= 3 && side % 2 == 1, Errc::invalid_parameter, "lattice side must be odd and >= 3");
  require(field.all_finite(), Errc::invalid_data, "non-finite lattice value");
  auto out = fft::analyze(field, (side - 1) / 2);
  if (removed_mean) *removed_mean = out(0, 0, 0).real();
  out(0, 0, 0) = 0.0;
  return out;
}

inline void require_hermitian(const SpectralField& spec) {
  require(spec.all_finite(), Errc::invalid_data, "non-finite coefficient");
  require(spec.is_hermitian(1e-12), Errc::symmetry_violation,
          "coefficients are not Hermitian-symmetric");
}

/// Evaluates a band <= N field at the sites of the lattice with cut N.
inline LatticeField dft_inverse(const SpectralField& spec, const GridSpec& grid) {
  require(spec.band() <= grid.N, Errc::invalid_parameter, "band exceeds lattice cut");
  require_hermitian(spec);
  return fft::synthesize(spec, grid.side());
}

/// Trigonometric interpolant sampled on a uniform M^3 torus grid.
inline LatticeField ext_sample(const SpectralField& spec, int M) {
  require(M >= 2 * spec.band() + 1, Errc::invalid_parameter,
          "oversample grid would alias the band");
  require_hermitian(spec);
  return fft::synthesize(spec, M);
}

/// Representative of k modulo 2N+1 in {-N..N}.
inline int fold_component(int k, int N) {
  const int P = 2 * N + 1;
  int r = ((k % P) + P) % P;
  return r > N ? r - P : r;
}

inline Frequency fold_frequency(const Frequency& k, int N) {
  return {fold_component(k[0], N), fold_component(k[1], N), fold_component(k[2], N)};
}

/// Aliasing map onto the band N: the spectral form of Ext(u restricted to the lattice).
inline SpectralField fold_to_band(const SpectralField& spec, int N) {
  require(N >= 1, Errc::invalid_parameter, "lattice cut N must be >= 1");
  require(spec.band() <= 3 * N, Errc::unsupported_band, "band exceeds 3N; one fold is not enough");
  SpectralField out(N);
  spec.for_each([&](const Frequency& k, const cplx& c) { out[fold_frequency(k, N)] += c; });
  return out;
}

/// Averages each coefficient with the conjugate of its mirror and clears the mean.
inline SpectralField hermitian_project(const SpectralField& spec) {
  SpectralField out(spec.band());
  spec.for_each([&](const Frequency& k, const cplx& c) {
    out[k] = 0.5 * (c + std::conj(spec[-k]));
  });
  out(0, 0, 0) = 0.0;
  return out;
}

/// Paper-style transform value of a lattice function: 8 times the coefficient.
inline cplx dft_value(const SpectralField& spec, const Frequency& k) { return spec.hat(k); }

}  // namespace phi43
