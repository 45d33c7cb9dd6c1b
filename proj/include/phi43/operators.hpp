#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "phi43/error.hpp"
#include "phi43/field.hpp"
#include "phi43/grid.hpp"
#include "phi43/lattice_spectral.hpp"

namespace phi43 {

enum class SymbolVariant { lattice, continuum };
enum class Cutoff { sharp, smooth, none };

/// f(x) = 4/|x|^2 * sum_j sin^2(pi x_j / 2).
inline double symbol_f(const std::array<double, 3>& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  require(r2 > 0.0, Errc::invalid_parameter, "symbol f is evaluated away from the origin");
  double s = 0.0;
  for (double xj : x) {
    const double v = std::sin(0.5 * std::numbers::pi * xj);
    s += v * v;
  }
  return 4.0 * s / r2;
}

/// Lattice symbol lambda_k = |k|^2 f(eps k) = (4/eps^2) sum_j sin^2(pi eps k_j / 2); 0 at k = 0.
inline double lattice_lambda(const Frequency& k, int N) {
  const double eps = 2.0 / (2.0 * N + 1.0);
  double s = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double v = std::sin(0.5 * std::numbers::pi * eps * k[j]);
    s += v * v;
  }
  return 4.0 * s / (eps * eps);
}

/// Heat symbol scale * |k|^2. With scale = 1 this is the f = 1 convention; scale = pi^2 is the
/// Laplacian of exp(i pi k.x), the small-eps limit of the lattice symbol.
inline double continuum_lambda(const Frequency& k, double scale = 1.0) {
  return scale * static_cast<double>(norm2(k));
}

inline constexpr double kLaplacianScale = std::numbers::pi * std::numbers::pi;

/// Smooth step: 1 for s <= 0, 0 for s >= 1, C-infinity in between.
inline double smooth_step_down(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return b / (a + b);
}

/// Cutoff equal to 1 on |x|_inf <= 1 and supported in |x| <= 1.8.
inline double smooth_cutoff(const std::array<double, 3>& x) {
  const double r0 = std::sqrt(3.0);
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  return smooth_step_down((r - r0) / (1.8 - r0));
}

/// min f over the ball |x| <= radius, by a dense radial/angular scan plus local refinement.
inline double symbol_min_on_ball(double radius = 1.8) {
  // f(x) is decreasing in |x| along each ray on this range, so the scan runs on the sphere.
  auto f_dir = [&](double th, double ph) {
    return symbol_f({radius * std::sin(th) * std::cos(ph), radius * std::sin(th) * std::sin(ph),
                     radius * std::cos(th)});
  };
  const int n = 200;
  double best = 1e300, bt = 0.0, bp = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double th = std::numbers::pi * i / n, ph = 2.0 * std::numbers::pi * j / n;
      const double v = f_dir(th, ph);
      if (v < best) best = v, bt = th, bp = ph;
    }
  double step = std::numbers::pi / n;
  while (step > 1e-10) {
    bool moved = false;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const double v = f_dir(bt + di * step, bp + dj * step);
        if (v < best) best = v, bt += di * step, bp += dj * step, moved = true;
      }
    if (!moved) step *= 0.5;
  }
  return best;
}

/// Symbol, cutoff and lattice cut of a Fourier multiplier.
struct SymbolParams {
  int N = 1;
  SymbolVariant variant = SymbolVariant::lattice;
  Cutoff cutoff = Cutoff::sharp;
  double continuum_scale = 1.0;

  double eps() const noexcept { return 2.0 / (2.0 * N + 1.0); }

  double lambda(const Frequency& k) const {
    return variant == SymbolVariant::lattice ? lattice_lambda(k, N)
                                             : continuum_lambda(k, continuum_scale);
  }

  double cutoff_value(const Frequency& k) const {
    switch (cutoff) {
      case Cutoff::sharp: return norm_inf(k) <= N ? 1.0 : 0.0;
      case Cutoff::smooth: {
        const double e = eps();
        return smooth_cutoff({e * k[0], e * k[1], e * k[2]});
      }
      case Cutoff::none: return 1.0;
    }
    return 1.0;
  }
};

template <class Fn>
SpectralField apply_multiplier(const SpectralField& spec, Fn&& m) {
  SpectralField out = spec;
  out.for_each([&](const Frequency& k, cplx& c) { c *= m(k); });
  return out;
}

/// Periodic six-neighbour Laplacian eps^-2 sum_{y~x}(f(y) - f(x)) with eps the grid spacing.
inline LatticeField apply_laplacian_stencil(const LatticeField& field) {
  require(field.all_finite(), Errc::invalid_data, "non-finite lattice value");
  const int M = field.side();
  const double inv = 1.0 / (field.spacing() * field.spacing());
  LatticeField out(M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      for (int l = 0; l < M; ++l) {
        const double c = field(i, j, l);
        const double s = field(i + 1, j, l) + field(i - 1, j, l) + field(i, j + 1, l) +
                         field(i, j - 1, l) + field(i, j, l + 1) + field(i, j, l - 1);
        out(i, j, l) = inv * (s - 6.0 * c);
      }
  return out;
}

/// Multiplies each coefficient by exp(-t lambda_k) times the selected cutoff.
inline SpectralField apply_semigroup(const SpectralField& spec, double t, const SymbolParams& p) {
  require(t >= 0.0, Errc::invalid_parameter, "semigroup time must be >= 0");
  return apply_multiplier(spec, [&](const Frequency& k) {
    const double cut = p.cutoff_value(k);
    return cut == 0.0 ? 0.0 : cut * std::exp(-t * p.lambda(k));
  });
}

/// Sharp truncation to |k|_inf <= N; the output band is min(N, input band).
inline SpectralField project_PN(const SpectralField& spec, int N) {
  return spec.with_band(std::min(N, spec.band()));
}

/// Index triple of the rectangular block containing k: i_j = -1, 0, 1 for k_j < -N, |k_j| <= N, k_j > N.
inline AliasTriple block_triple(const Frequency& k, int N) {
  AliasTriple t{};
  for (int j = 0; j < 3; ++j) t[j] = k[j] > N ? 1 : (k[j] < -N ? -1 : 0);
  return t;
}

/// Sum over the 26 rectangular blocks outside the band, each shifted by -(2N+1)(i1,i2,i3).
inline SpectralField project_PiN(const SpectralField& spec, int N) {
  require(N >= 1, Errc::invalid_parameter, "lattice cut N must be >= 1");
  require(spec.band() <= 3 * N, Errc::unsupported_band, "band exceeds 3N");
  const int P = 2 * N + 1;
  SpectralField out(N);
  spec.for_each([&](const Frequency& k, const cplx& c) {
    const auto t = block_triple(k, N);
    if (t[0] == 0 && t[1] == 0 && t[2] == 0) return;
    out[{k[0] - P * t[0], k[1] - P * t[1], k[2] - P * t[2]}] += c;
  });
  return out;
}

/// Product with exp(-i pi (2N+1) i.x): every frequency moves by -(2N+1)(i1,i2,i3).
/// The output band grows by 2N+1 where the triple is nonzero.
inline SpectralField modulate(const SpectralField& spec, const AliasTriple& triple, int N) {
  require(triple[0] != 0 || triple[1] != 0 || triple[2] != 0, Errc::invalid_parameter,
          "modulation triple must be nonzero");
  for (int v : triple)
    require(v >= -1 && v <= 1, Errc::invalid_parameter, "triple entries must be in {-1,0,1}");
  const int P = 2 * N + 1;
  SpectralField out(spec.band() + P);
  spec.for_each([&](const Frequency& k, const cplx& c) {
    out[{k[0] - P * triple[0], k[1] - P * triple[1], k[2] - P * triple[2]}] = c;
  });
  return out;
}

enum class CovVariant { lattice, galerkin };

/// exp(-lambda_k |t|) 1{|k|_inf <= N} / (2 lambda_k); the galerkin variant uses scale * |k|^2.
inline double covariance_V(const Frequency& k, double t, int N, CovVariant variant,
                           double continuum_scale = 1.0) {
  require(!is_zero(k), Errc::invalid_parameter, "covariance is defined for k != 0");
  if (norm_inf(k) > N) return 0.0;
  const double lam = variant == CovVariant::lattice ? lattice_lambda(k, N)
                                                    : continuum_lambda(k, continuum_scale);
  return std::exp(-lam * std::abs(t)) / (2.0 * lam);
}

}  // namespace phi43
