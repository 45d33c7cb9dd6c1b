#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/fft.hpp"
#include "phi43/field.hpp"
#include "phi43/lattice_spectral.hpp"
#include "phi43/operators.hpp"
#include "phi43/paracontrolled.hpp"
#include "phi43/renorm.hpp"
#include "phi43/rng.hpp"

namespace phi43 {

/// Normalization of the stochastic convolution: u(x) = 2^{-3/2} sum_k a_k exp(i pi k.x).
inline constexpr double kModeToCoeff = 0.35355339059327373;  // 2^{-3/2}

enum class Variant { lattice, galerkin };

/// Per-component increment of a pair of OU processes dX = -rate X dt + dB / sqrt(2) driven by the
/// same Brownian motion over a step h (h = inf gives the stationary joint law).
/// The anchor (rate b) uses Z1 only, so it does not depend on the partner rate a.
struct CoupledLaw {
  double sigma_a = 0.0, sigma_b = 0.0, rho = 0.0;

  CoupledLaw(double a, double b, double h) {
    const bool stat = std::isinf(h);
    auto var = [&](double r) { return stat ? 1.0 / (4.0 * r) : -std::expm1(-2.0 * r * h) / (4.0 * r); };
    const double cov = stat ? 1.0 / (2.0 * (a + b)) : -std::expm1(-(a + b) * h) / (2.0 * (a + b));
    sigma_a = std::sqrt(var(a));
    sigma_b = std::sqrt(var(b));
    rho = std::clamp(cov / (sigma_a * sigma_b), -1.0, 1.0);
  }

  double partner(double z1, double z2) const { return sigma_a * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2); }
  double anchor(double z1) const { return sigma_b * z1; }
};

/// Rates of the two processes attached to a frequency.
struct NoiseRates {
  int N = 1;                                // lattice cut of the lattice symbol
  double anchor_scale = kLaplacianScale;    // anchor rate = scale |k|^2

  double lattice(const Frequency& k) const { return lattice_lambda(k, N); }
  double anchor(const Frequency& k) const { return continuum_lambda(k, anchor_scale); }
};

/// Identifies one replica's noise: every draw is a pure function of (seed, replica, orbit, step).
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
};

/// Finest noise step and the number of fine steps per integrator step.
struct NoiseClock {
  double h_fine = 1e-3;
  int substeps = 1;
  double step() const { return h_fine * substeps; }
};

/// Exact increment of mode k over integrator step n (in mode units, complex),
/// aggregated from the fine steps n*m .. n*m+m-1. rate_self is the integrating process's rate;
/// when it is the anchor, only Z1 is used.
inline cplx mode_increment(const NoiseKey& key, const Frequency& k, double rate_self, double rate_anchor,
                           bool is_anchor, const NoiseClock& clock, std::uint32_t n) {
  const CoupledLaw law(rate_self, rate_anchor, clock.h_fine);
  const double decay = std::exp(-rate_self * clock.h_fine);
  cplx x{};
  for (int i = 0; i < clock.substeps; ++i) {
    const auto z = rng::orbit_normals(key.seed, rng::Stream::noise, k,
                                      n * static_cast<std::uint32_t>(clock.substeps) + i, key.replica);
    const cplx inc = is_anchor ? cplx{law.anchor(z.z1_re), law.anchor(z.z1_im)}
                               : cplx{law.partner(z.z1_re, z.z2_re), law.partner(z.z1_im, z.z2_im)};
    x = decay * x + inc;
  }
  return x;
}

/// Stationary draw of mode k coupled to the anchor.
inline cplx mode_stationary(const NoiseKey& key, const Frequency& k, double rate_self, double rate_anchor,
                            bool is_anchor) {
  const CoupledLaw law(rate_self, rate_anchor, std::numeric_limits<double>::infinity());
  const auto z = rng::orbit_normals(key.seed, rng::Stream::stationary, k, 0, key.replica);
  return is_anchor ? cplx{law.anchor(z.z1_re), law.anchor(z.z1_im)}
                   : cplx{law.partner(z.z1_re, z.z2_re), law.partner(z.z1_im, z.z2_im)};
}

/// Per-mode coefficients a_k of the stochastic convolution on |k|_inf <= N, plus the stream position.
/// The galerkin variant uses the heat symbol scale |k|^2 and is the anchor process.
struct OUState {
  int N = 1;
  Variant variant = Variant::lattice;
  double anchor_scale = kLaplacianScale;
  NoiseKey key;
  double t = 0.0;
  std::uint32_t step = 0;
  SpectralField a;

  double rate(const Frequency& k) const {
    NoiseRates r{N, anchor_scale};
    return variant == Variant::lattice ? r.lattice(k) : r.anchor(k);
  }

  /// Field coefficients c_k = 2^{-3/2} a_k.
  SpectralField field() const {
    SpectralField c = a;
    c *= kModeToCoeff;
    return c;
  }
};

/// Visits canonical frequencies (one per {k,-k} orbit) of the band.
template <class Fn>
void for_each_orbit(int band, Fn&& fn) {
  for (int k1 = 0; k1 <= band; ++k1)
    for (int k2 = -band; k2 <= band; ++k2)
      for (int k3 = -band; k3 <= band; ++k3) {
        const Frequency k{k1, k2, k3};
        if (rng::is_canonical(k)) fn(k);
      }
}

inline OUState ou_sample_stationary(const GridSpec& grid, Variant variant, std::uint64_t seed,
                                    std::uint32_t replica = 0, double anchor_scale = kLaplacianScale) {
  OUState s;
  s.N = grid.N;
  s.variant = variant;
  s.anchor_scale = anchor_scale;
  s.key = {seed, replica};
  s.a = SpectralField(grid.N);
  const NoiseRates r{grid.N, anchor_scale};
  const bool anchor = variant == Variant::galerkin;
  for_each_orbit(grid.N, [&](const Frequency& k) {
    const cplx v = mode_stationary(s.key, k, anchor ? r.anchor(k) : r.lattice(k), r.anchor(k), anchor);
    s.a[k] = v;
    s.a[-k] = std::conj(v);
  });
  return s;
}

/// Exact transition over one integrator step of length clock.step().
inline void ou_advance(OUState& s, const NoiseClock& clock) {
  require(clock.h_fine > 0.0 && clock.substeps >= 1, Errc::invalid_parameter, "step must be > 0");
  const NoiseRates r{s.N, s.anchor_scale};
  const bool anchor = s.variant == Variant::galerkin;
  const double h = clock.step();
  for_each_orbit(s.N, [&](const Frequency& k) {
    const double rate = anchor ? r.anchor(k) : r.lattice(k);
    const cplx v = std::exp(-rate * h) * s.a[k] + mode_increment(s.key, k, rate, r.anchor(k), anchor, clock, s.step);
    s.a[k] = v;
    s.a[-k] = std::conj(v);
  });
  s.t += h;
  ++s.step;
}

inline OUState ou_transition(OUState s, double h) {
  require(h > 0.0, Errc::invalid_parameter, "transition step must be > 0");
  ou_advance(s, NoiseClock{h, 1});
  return s;
}

/// Pointwise Wick powers: n = 2 gives u^2 - C0, n = 3 gives u^3 - 3 C0 u.
inline LatticeField wick_power(LatticeField u, int n, double C0) {
  require(n == 2 || n == 3, Errc::invalid_parameter, "Wick power must be 2 or 3");
  for (auto& v : u.storage()) v = n == 2 ? v * v - C0 : v * v * v - 3.0 * C0 * v;
  return u;
}

/// Dealiased Wick square of a band-N field: band 2N, k = 0 kept (out_band caps the result).
inline SpectralField wick_square(const SpectralField& u, double C0, int out_band = -1) {
  auto w = fft::multiply(u, u, out_band);
  w(0, 0, 0) -= C0;
  return w;
}

/// Values at t0 + m dt, m = 0..size-1.
struct FieldPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<SpectralField> values;

  double time(std::size_t m) const { return t0 + dt * static_cast<double>(m); }
  double end_time() const { return values.empty() ? t0 : time(values.size() - 1); }
};

/// Stationary start plus exact transitions; values are field coefficients (2^{-3/2} a).
inline FieldPath simulate_u1(const GridSpec& grid, Variant variant, const NoiseKey& key, double T,
                             const NoiseClock& clock, double anchor_scale = kLaplacianScale) {
  const double dt = clock.step();
  require(dt > 0.0 && T >= 0.0, Errc::invalid_parameter, "need dt > 0 and T >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  require(std::abs(steps * dt - T) <= 1e-9 * std::max(1.0, T), Errc::invalid_parameter, "T must be a multiple of dt");
  auto s = ou_sample_stationary(grid, variant, key.seed, key.replica, anchor_scale);
  FieldPath p{0.0, dt, {}};
  p.values.reserve(steps + 1);
  p.values.push_back(s.field());
  for (std::size_t m = 0; m < steps; ++m) {
    ou_advance(s, clock);
    p.values.push_back(s.field());
  }
  return p;
}

/// Cubic forcing of u2 at one time: the aliased lattice Wick cube folded onto the band (lattice),
/// or the exact Wick cube truncated to the band (galerkin). Mean removed.
inline SpectralField wick_cube_forcing(const SpectralField& u1, int N, Variant variant, double C0) {
  if (variant == Variant::lattice) {
    auto y = wick_power(fft::synthesize(u1, 2 * N + 1), 3, C0);
    return dft_forward(y);
  }
  auto sq = fft::multiply(u1, u1);
  auto cube = fft::multiply(sq, u1, N);
  cube.accumulate(u1.with_band(N), -3.0 * C0);
  cube(0, 0, 0) = 0.0;
  return cube;
}

/// u2(t_{m+1}) = P_dt u2(t_m) - dt P_{dt/2} F(t_m), F the Wick-cube forcing of u1(t_m).
inline FieldPath compute_u2(const FieldPath& u1_path, int N, Variant variant, double C0,
                            double continuum_scale = kLaplacianScale) {
  require(u1_path.dt > 0.0 && !u1_path.values.empty(), Errc::invalid_parameter, "empty or unsampled path");
  const double dt = u1_path.dt;
  const SymbolParams sym = variant == Variant::lattice
                               ? SymbolParams{N, SymbolVariant::lattice, Cutoff::sharp}
                               : SymbolParams{N, SymbolVariant::continuum, Cutoff::sharp, continuum_scale};
  SpectralField decay(N), half(N);
  decay.for_each([&](const Frequency& k, cplx& c) {
    const double l = sym.lambda(k);
    c = std::exp(-l * dt);
    half[k] = dt * std::exp(-0.5 * l * dt);
  });
  FieldPath out{u1_path.t0, dt, {}};
  SpectralField u2(N);
  out.values.push_back(u2);
  for (std::size_t m = 0; m + 1 < u1_path.values.size(); ++m) {
    require(u1_path.values[m].band() <= N, Errc::invalid_parameter, "u1 band exceeds N");
    const auto F = wick_cube_forcing(u1_path.values[m], N, variant, C0);
    auto c = u2.coeffs();
    const auto f = F.coeffs();
    const auto d = decay.coeffs();
    const auto w = half.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = d[i] * c[i] - w[i] * f[i];
    out.values.push_back(u2);
  }
  return out;
}

/// Weights of int_0^h exp(-lambda (h - s)) w(s) ds for w linear between w(0) and w(h).
struct HoldWeights {
  double w0 = 0.0, w1 = 0.0;

  HoldWeights(double lambda, double h) {
    const double x = lambda * h;
    double g1;  // (1 - e^{-x}(1 + x)) / x^2
    if (x < 0.5) {
      g1 = 0.0;
      double term = 1.0;  // x^{n-2}
      double fact = 2.0;  // n!
      for (int n = 2; n < 20; ++n) {
        g1 += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) / fact * term;
        term *= x;
        fact *= (n + 1);
      }
    } else {
      g1 = (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
    }
    const double g0 = x < 1e-8 ? 1.0 - 0.5 * x : -std::expm1(-x) / x;  // (1 - e^{-x}) / x
    w0 = h * g1;
    w1 = h * (g0 - g1);
  }
};

/// K(t) = int_0^t P_{t-s} w(s) ds with w linear between samples; lattice symbol, sharp P_N.
/// The path must start at time 0; returns K at the last sample time.
inline SpectralField compute_K(const FieldPath& w_path, int N) {
  require(!w_path.values.empty(), Errc::invalid_parameter, "empty path");
  SpectralField K(N);
  if (w_path.values.size() == 1) return K;
  const double dt = w_path.dt;
  require(dt > 0.0, Errc::invalid_parameter, "dt must be > 0");
  std::vector<double> decay(K.size()), w0(K.size()), w1(K.size());
  K.for_each([&](const Frequency& k, cplx&) {
    const auto i = K.index(k[0], k[1], k[2]);
    const double l = lattice_lambda(k, N);
    const HoldWeights hw(l, dt);
    decay[i] = std::exp(-l * dt);
    w0[i] = hw.w0;
    w1[i] = hw.w1;
  });
  for (std::size_t m = 0; m + 1 < w_path.values.size(); ++m) {
    const auto a = w_path.values[m].with_band(N);
    const auto b = w_path.values[m + 1].with_band(N);
    auto c = K.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = decay[i] * c[i] + w0[i] * a.coeffs()[i] + w1[i] * b.coeffs()[i];
  }
  return K;
}

/// Incremental form of compute_K for streaming paths.
class KAccumulator {
 public:
  KAccumulator(int N, double dt) : K_(N), decay_(K_.size()), w0_(K_.size()), w1_(K_.size()) {
    require(dt > 0.0, Errc::invalid_parameter, "dt must be > 0");
    K_.for_each([&](const Frequency& k, cplx&) {
      const auto i = K_.index(k[0], k[1], k[2]);
      const double l = lattice_lambda(k, N);
      const HoldWeights hw(l, dt);
      decay_[i] = std::exp(-l * dt);
      w0_[i] = hw.w0;
      w1_[i] = hw.w1;
    });
  }

  /// Advances K across one step with samples w at the step's start and end (band >= N).
  void step(const SpectralField& w_start, const SpectralField& w_end) {
    const auto a = w_start.with_band(K_.band());
    const auto b = w_end.with_band(K_.band());
    auto c = K_.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = decay_[i] * c[i] + w0_[i] * a.coeffs()[i] + w1_[i] * b.coeffs()[i];
  }

  const SpectralField& value() const { return K_; }

 private:
  SpectralField K_;
  std::vector<double> decay_, w0_, w1_;
};

/// pi_0(K, w) minus the constant C11 + phi1(t).
inline SpectralField resonant_renormalized(const SpectralField& K, const SpectralField& wick2, double t,
                                           const RenormConstants& consts, const Correctors& corr,
                                           const DyadicPartition& part) {
  require(t > 0.0, Errc::invalid_parameter, "time must be > 0");
  require(std::abs(corr.t - t) <= 1e-12 * std::max(1.0, t), Errc::invalid_parameter,
          "correctors evaluated at a different time");
  auto r = paraproduct(K, wick2, ParaKind::res, part);
  r(0, 0, 0) -= consts.C11 + corr.phi1;
  return r;
}

}  // namespace phi43
