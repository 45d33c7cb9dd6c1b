#pragma once

// Slow reference implementations used only by the test suite.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "phi43/field.hpp"
#include "phi43/grid.hpp"

namespace oracle {

using phi43::cplx;
using phi43::Frequency;
using phi43::LatticeField;
using phi43::SpectralField;
using phi43::operator+;
using phi43::operator-;

inline constexpr double pi = std::numbers::pi;

/// Direct sum eps^3 sum_x Y(x) exp(-i pi k.x) over lattice sites x = eps m, m in {-N..N}^3.
inline cplx dft_value(const LatticeField& Y, const Frequency& k) {
  const int side = Y.side();
  const int N = (side - 1) / 2;
  const double eps = 2.0 / side;
  cplx s{};
  for (int m1 = -N; m1 <= N; ++m1)
    for (int m2 = -N; m2 <= N; ++m2)
      for (int m3 = -N; m3 <= N; ++m3) {
        const double ph = -pi * eps * (k[0] * m1 + k[1] * m2 + k[2] * m3);
        s += Y(m1, m2, m3) * std::polar(1.0, ph);
      }
  return eps * eps * eps * s;
}

/// u(x) = sum_k c_k exp(i pi k.x) at one point.
inline cplx evaluate(const SpectralField& f, const std::array<double, 3>& x) {
  cplx s{};
  f.for_each([&](const Frequency& k, const cplx& c) {
    if (c == cplx{}) return;
    s += c * std::polar(1.0, pi * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]));
  });
  return s;
}

/// Samples at x_m = 2m/M by direct summation.
inline LatticeField sample(const SpectralField& f, int M) {
  LatticeField out(M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      for (int l = 0; l < M; ++l) out(i, j, l) = evaluate(f, {2.0 * i / M, 2.0 * j / M, 2.0 * l / M}).real();
  return out;
}

/// Exact product by discrete convolution of coefficients.
inline SpectralField convolve(const SpectralField& a, const SpectralField& b) {
  SpectralField out(a.band() + b.band());
  a.for_each([&](const Frequency& k, const cplx& ca) {
    if (ca == cplx{}) return;
    b.for_each([&](const Frequency& q, const cplx& cb) { out[k + q] += ca * cb; });
  });
  return out;
}

inline double max_diff(const SpectralField& a, const SpectralField& b) {
  const int B = std::max(a.band(), b.band());
  double d = 0.0;
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2)
      for (int k3 = -B; k3 <= B; ++k3) d = std::max(d, std::abs(a.at({k1, k2, k3}) - b.at({k1, k2, k3})));
  return d;
}

inline double max_diff(const LatticeField& a, const LatticeField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

}  // namespace oracle
