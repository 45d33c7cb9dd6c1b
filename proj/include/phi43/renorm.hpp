#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/fft.hpp"
#include "phi43/grid.hpp"
#include "phi43/operators.hpp"

namespace phi43 {

/// Symbol used for constants: the lattice symbol at cut N, or scale * |k|^2.
struct ConstSymbol {
  CovVariant variant = CovVariant::lattice;
  double continuum_scale = 1.0;

  double lambda(const Frequency& k, int N) const {
    return variant == CovVariant::lattice ? lattice_lambda(k, N) : continuum_lambda(k, continuum_scale);
  }
};

/// 2^-3 sum_{0<|k|_inf<=N} 1/(2 lambda_k).
inline double compute_C0(int N, CovVariant variant = CovVariant::lattice, double continuum_scale = 1.0) {
  require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
  const ConstSymbol sym{variant, continuum_scale};
  double s = 0.0;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int c = -N; c <= N; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        s += 1.0 / (2.0 * sym.lambda({a, b, c}, N));
      }
  return s / 8.0;
}

/// Which resonant frequencies enter a pair sum
///   2^-5 sum_{k1,k2} V0(k1) V0(k2) exp(-t L) / L,   L = lambda_k1 + lambda_k2 + lambda_m.
/// folded: m ranges over |m|_inf <= N and is tied to k1 + k2 through one of 27 shifts
///   (entry 13 is m = k1 + k2; entry alias_index(i) is m = -(k1+k2) - (2N+1) i).
/// unrestricted: m = k1 + k2 with no band limit on m.
enum class PairLookup { folded, unrestricted };

struct PairSumResult {
  std::array<double, 27> folded{};  // index 13 is the unshifted sum
  double unrestricted = 0.0;
  int nodes = 0;
  double last_change = 0.0;
};

inline int folded_slot(const AliasTriple& t) {
  return (t[0] + 1) * 9 + (t[1] + 1) * 3 + (t[2] + 1);
}

struct PairQuadrature {
  double tol = 1e-10;
  double h0 = 0.5;
  int max_levels = 8;
};

/// Direct O(N^6) evaluation; the reference for the fast path.
inline PairSumResult pair_sum_direct(int N, const ConstSymbol& sym, double t, PairLookup lookup) {
  require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
  require(t >= 0.0, Errc::invalid_parameter, "time must be >= 0");
  const int P = 2 * N + 1;
  const int mb = lookup == PairLookup::folded ? N : 2 * N;
  const int side = 2 * mb + 1;
  std::vector<double> lam(static_cast<std::size_t>(side) * side * side);
  auto at = [&](const Frequency& k) -> double& {
    return lam[(static_cast<std::size_t>(k[0] + mb) * side + (k[1] + mb)) * side + (k[2] + mb)];
  };
  for (int a = -mb; a <= mb; ++a)
    for (int b = -mb; b <= mb; ++b)
      for (int c = -mb; c <= mb; ++c) at({a, b, c}) = sym.lambda({a, b, c}, N);

  std::vector<Frequency> ks;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int c = -N; c <= N; ++c)
        if (a != 0 || b != 0 || c != 0) ks.push_back({a, b, c});

  PairSumResult r;
  auto term = [&](double l1, double l2, double lm) {
    const double L = l1 + l2 + lm;
    return std::exp(-t * L) / (4.0 * l1 * l2 * L);
  };
  for (const auto& k1 : ks) {
    const double l1 = at(k1);
    for (const auto& k2 : ks) {
      const double l2 = at(k2);
      const Frequency s = k1 + k2;
      if (lookup == PairLookup::unrestricted) {
        r.unrestricted += term(l1, l2, at(s));
        continue;
      }
      for (int i1 = -1; i1 <= 1; ++i1)
        for (int i2 = -1; i2 <= 1; ++i2)
          for (int i3 = -1; i3 <= 1; ++i3) {
            const bool centre = i1 == 0 && i2 == 0 && i3 == 0;
            const Frequency m = centre ? s : Frequency{-s[0] - P * i1, -s[1] - P * i2, -s[2] - P * i3};
            if (norm_inf(m) > N) continue;
            r.folded[static_cast<std::size_t>(folded_slot({i1, i2, i3}))] += term(l1, l2, at(m));
          }
    }
  }
  for (auto& v : r.folded) v /= 32.0;
  r.unrestricted /= 32.0;
  return r;
}

/// Fast evaluation: exp(-tL)/L = int_t^inf exp(-s L) ds, s = t + e^tau, trapezoid in tau with
/// step halving; at each node the k1,k2 sum is a self-convolution done by FFT.
inline PairSumResult pair_sum_fft(int N, const ConstSymbol& sym, double t, PairLookup lookup,
                                  const PairQuadrature& quad = {}) {
  require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
  require(t >= 0.0, Errc::invalid_parameter, "time must be >= 0");
  const int P = 2 * N + 1;
  const int L = fft::nice_size(4 * N + 1);
  const int mb = lookup == PairLookup::folded ? N : 2 * N;

  // Symbol tables.
  const int gs = 2 * N + 1;
  std::vector<double> lam_g(static_cast<std::size_t>(gs) * gs * gs);
  double lmin = std::numeric_limits<double>::infinity(), lmax = 0.0;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int c = -N; c <= N; ++c) {
        const double l = sym.lambda({a, b, c}, N);
        lam_g[(static_cast<std::size_t>(a + N) * gs + (b + N)) * gs + (c + N)] = l;
        if (a != 0 || b != 0 || c != 0) lmin = std::min(lmin, l), lmax = std::max(lmax, l);
      }
  const int ms = 2 * mb + 1;
  std::vector<double> lam_m(static_cast<std::size_t>(ms) * ms * ms);
  double lmmax = 0.0;
  for (int a = -mb; a <= mb; ++a)
    for (int b = -mb; b <= mb; ++b)
      for (int c = -mb; c <= mb; ++c) {
        const double l = sym.lambda({a, b, c}, N);
        lam_m[(static_cast<std::size_t>(a + mb) * ms + (b + mb)) * ms + (c + mb)] = l;
        lmmax = std::max(lmmax, l);
      }
  const double Lmin = 2.0 * lmin, Lmax = 2.0 * lmax + lmmax;
  const double tau_lo = std::log(quad.tol * 1e-2 / Lmax);
  const double tau_hi = std::log(45.0 / Lmin);

  std::vector<double> g(static_cast<std::size_t>(L) * L * L);
  std::vector<std::complex<double>> G(fft::half_size(L));
  std::vector<double> conv(g.size());
  const double norm = 1.0 / (static_cast<double>(L) * L * L);
  auto widx = [L](int a, int b, int c) {
    auto w = [L](int k) { return static_cast<std::size_t>(((k % L) + L) % L); };
    return (w(a) * L + w(b)) * L + w(c);
  };

  auto node = [&](double tau, std::array<double, 27>& fold, double& unr) {
    const double s = t + std::exp(tau);
    std::fill(g.begin(), g.end(), 0.0);
    for (int a = -N; a <= N; ++a)
      for (int b = -N; b <= N; ++b)
        for (int c = -N; c <= N; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          const double l = lam_g[(static_cast<std::size_t>(a + N) * gs + (b + N)) * gs + (c + N)];
          g[widx(a, b, c)] = std::exp(-s * l) / (2.0 * l);
        }
    fft::r2c(L, g.data(), G.data());
    for (auto& z : G) z *= z;
    fft::c2r(L, G.data(), conv.data());
    const double jac = std::exp(tau) * norm;
    fold.fill(0.0);
    unr = 0.0;
    for (int a = -mb; a <= mb; ++a)
      for (int b = -mb; b <= mb; ++b)
        for (int c = -mb; c <= mb; ++c) {
          const double lm = lam_m[(static_cast<std::size_t>(a + mb) * ms + (b + mb)) * ms + (c + mb)];
          const double w = std::exp(-s * lm) * jac;
          if (w == 0.0) continue;
          if (lookup == PairLookup::unrestricted) {
            unr += w * conv[widx(a, b, c)];
            continue;
          }
          for (int i1 = -1; i1 <= 1; ++i1) {
            const int n1 = a + P * i1;
            if (std::abs(n1) > 2 * N) continue;
            for (int i2 = -1; i2 <= 1; ++i2) {
              const int n2 = b + P * i2;
              if (std::abs(n2) > 2 * N) continue;
              for (int i3 = -1; i3 <= 1; ++i3) {
                const int n3 = c + P * i3;
                if (std::abs(n3) > 2 * N) continue;
                fold[static_cast<std::size_t>((i1 + 1) * 9 + (i2 + 1) * 3 + (i3 + 1))] +=
                    w * conv[widx(n1, n2, n3)];
              }
            }
          }
        }
  };

  std::array<double, 27> sum_f{}, tmp_f{};
  double sum_u = 0.0, tmp_u = 0.0;
  PairSumResult r;
  double h = quad.h0;
  const int n0 = static_cast<int>(std::ceil((tau_hi - tau_lo) / h));
  for (int n = 0; n <= n0; ++n) {
    node(tau_lo + n * h, tmp_f, tmp_u);
    for (int i = 0; i < 27; ++i) sum_f[i] += tmp_f[i];
    sum_u += tmp_u;
    ++r.nodes;
  }
  auto estimate = [&](double step, std::array<double, 27>& f, double& u) {
    for (int i = 0; i < 27; ++i) f[i] = step * sum_f[i] / 32.0;
    u = step * sum_u / 32.0;
  };
  std::array<double, 27> prev_f{};
  double prev_u = 0.0;
  estimate(h, prev_f, prev_u);
  int intervals = n0;
  for (int level = 1; level <= quad.max_levels; ++level) {
    const double hn = 0.5 * h;
    for (int n = 0; n < intervals; ++n) {
      node(tau_lo + (2 * n + 1) * hn, tmp_f, tmp_u);
      for (int i = 0; i < 27; ++i) sum_f[i] += tmp_f[i];
      sum_u += tmp_u;
      ++r.nodes;
    }
    h = hn;
    intervals *= 2;
    std::array<double, 27> cur_f{};
    double cur_u = 0.0;
    estimate(h, cur_f, cur_u);
    double scale = std::abs(cur_u), change = std::abs(cur_u - prev_u);
    for (int i = 0; i < 27; ++i) {
      scale = std::max(scale, std::abs(cur_f[i]));
      change = std::max(change, std::abs(cur_f[i] - prev_f[i]));
    }
    prev_f = cur_f;
    prev_u = cur_u;
    r.last_change = scale > 0.0 ? change / scale : 0.0;
    if (r.last_change < quad.tol) {
      r.folded = cur_f;
      r.unrestricted = cur_u;
      return r;
    }
  }
  throw Error(Errc::quadrature_failure, "pair-sum quadrature did not converge");
}

/// C11 with the chosen symbol: folded centre entry, or the unrestricted sum for the heat symbol.
inline double compute_C11(int N, CovVariant variant = CovVariant::lattice, double continuum_scale = 1.0,
                          const PairQuadrature& quad = {}) {
  if (variant == CovVariant::lattice)
    return pair_sum_fft(N, {variant, continuum_scale}, 0.0, PairLookup::folded, quad).folded[13];
  return pair_sum_fft(N, {variant, continuum_scale}, 0.0, PairLookup::unrestricted, quad).unrestricted;
}

inline double compute_C12(int N, const AliasTriple& triple, const PairQuadrature& quad = {}) {
  require(triple[0] != 0 || triple[1] != 0 || triple[2] != 0, Errc::invalid_parameter,
          "C12 triple must be nonzero");
  return pair_sum_fft(N, {}, 0.0, PairLookup::folded, quad).folded[static_cast<std::size_t>(folded_slot(triple))];
}

struct RenormConstants {
  int N = 0;
  double eps = 0.0;
  double continuum_scale = 1.0;
  double C0 = 0.0, C0_bar = 0.0, C11 = 0.0, C11_bar = 0.0;
  std::array<double, 26> C12{};  // ordered as alias_triples()
  double C1 = 0.0, mass_shift = 0.0;

  double C12_at(const AliasTriple& t) const { return C12[static_cast<std::size_t>(alias_index(t))]; }
  /// Mass coefficient of the reference equation, 3 C0_bar - 9 C11_bar.
  double mass_shift_bar() const { return 3.0 * C0_bar - 9.0 * C11_bar; }
};

inline RenormConstants compute_constants(int N, double continuum_scale = 1.0, const PairQuadrature& quad = {}) {
  RenormConstants rc;
  rc.N = N;
  rc.eps = 2.0 / (2.0 * N + 1.0);
  rc.continuum_scale = continuum_scale;
  rc.C0 = compute_C0(N, CovVariant::lattice);
  rc.C0_bar = compute_C0(N, CovVariant::galerkin, continuum_scale);
  const auto lat = pair_sum_fft(N, {}, 0.0, PairLookup::folded, quad);
  rc.C11 = lat.folded[13];
  const auto& trip = alias_triples();
  double sum12 = 0.0;
  for (std::size_t i = 0; i < trip.size(); ++i) {
    rc.C12[i] = lat.folded[static_cast<std::size_t>(folded_slot(trip[i]))];
    sum12 += rc.C12[i];
  }
  rc.C11_bar = compute_C11(N, CovVariant::galerkin, continuum_scale, quad);
  rc.C1 = rc.C11 + sum12;
  rc.mass_shift = 3.0 * rc.C0 - 9.0 * rc.C1;
  return rc;
}

/// Correctors at one time t > 0: phi1 (lattice), its continuum counterpart, and phi2 per triple.
struct Correctors {
  double t = 0.0;
  double phi1 = 0.0;
  double phi1_continuum = 0.0;
  std::array<double, 26> phi2{};
};

/// Continuum phi1(t) with heat symbol scale*|k|^2; modes with exp(-t scale |k|^2) < e^-50 are dropped.
inline double continuum_phi1(double t, double continuum_scale, const PairQuadrature& quad = {}) {
  require(t > 0.0, Errc::invalid_parameter, "corrector time must be > 0");
  const int K = std::max(1, static_cast<int>(std::ceil(std::sqrt(50.0 / (continuum_scale * t)))));
  return -pair_sum_fft(K, {CovVariant::galerkin, continuum_scale}, t, PairLookup::unrestricted, quad)
              .unrestricted;
}

/// The continuum value costs O((t^-1/2)^3 log) per node; skip it with with_continuum = false.
inline Correctors compute_correctors(double t, int N, bool with_continuum = true,
                                     double continuum_scale = kLaplacianScale,
                                     const PairQuadrature& quad = {}) {
  require(t > 0.0, Errc::invalid_parameter, "corrector time must be > 0");
  Correctors c;
  c.t = t;
  const auto lat = pair_sum_fft(N, {}, t, PairLookup::folded, quad);
  c.phi1 = -lat.folded[13];
  const auto& trip = alias_triples();
  for (std::size_t i = 0; i < trip.size(); ++i)
    c.phi2[i] = -lat.folded[static_cast<std::size_t>(folded_slot(trip[i]))];
  if (with_continuum) c.phi1_continuum = continuum_phi1(t, continuum_scale, quad);
  return c;
}

}  // namespace phi43
