#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/grid.hpp"

namespace phi43 {

using cplx = std::complex<double>;

/// Fourier coefficients c_k of u(x) = sum_k c_k exp(i pi k.x) on the cube |k|_inf <= band.
/// Storage is the full cube, row-major in (k1,k2,k3) with each index running -band..band.
/// The normalised transform value is hat(k) = 8 c_k.
class SpectralField {
 public:
  SpectralField() = default;

  explicit SpectralField(int band) : band_(band), side_(2 * band + 1) {
    require(band >= 0, Errc::invalid_parameter, "band must be >= 0");
    coeffs_.assign(static_cast<std::size_t>(side_) * side_ * side_, cplx{});
  }

  int band() const noexcept { return band_; }
  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  bool contains(const Frequency& k) const noexcept { return norm_inf(k) <= band_; }

  std::size_t index(int k1, int k2, int k3) const noexcept {
    return (static_cast<std::size_t>(k1 + band_) * side_ + static_cast<std::size_t>(k2 + band_)) *
               side_ +
           static_cast<std::size_t>(k3 + band_);
  }

  Frequency frequency(std::size_t idx) const noexcept {
    const int k3 = static_cast<int>(idx % side_) - band_;
    idx /= side_;
    const int k2 = static_cast<int>(idx % side_) - band_;
    const int k1 = static_cast<int>(idx / side_) - band_;
    return {k1, k2, k3};
  }

  cplx& operator()(int k1, int k2, int k3) noexcept { return coeffs_[index(k1, k2, k3)]; }
  const cplx& operator()(int k1, int k2, int k3) const noexcept { return coeffs_[index(k1, k2, k3)]; }
  cplx& operator[](const Frequency& k) noexcept { return (*this)(k[0], k[1], k[2]); }
  const cplx& operator[](const Frequency& k) const noexcept { return (*this)(k[0], k[1], k[2]); }

  /// Coefficient with zero extension outside the stored band.
  cplx at(const Frequency& k) const noexcept { return contains(k) ? (*this)[k] : cplx{}; }

  cplx hat(const Frequency& k) const noexcept { return 8.0 * at(k); }

  std::span<cplx> coeffs() noexcept { return coeffs_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }

  template <class Fn>
  void for_each(Fn&& fn) {
    std::size_t idx = 0;
    for (int a = -band_; a <= band_; ++a)
      for (int b = -band_; b <= band_; ++b)
        for (int c = -band_; c <= band_; ++c) fn(Frequency{a, b, c}, coeffs_[idx++]);
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    std::size_t idx = 0;
    for (int a = -band_; a <= band_; ++a)
      for (int b = -band_; b <= band_; ++b)
        for (int c = -band_; c <= band_; ++c) fn(Frequency{a, b, c}, coeffs_[idx++]);
  }

  /// Zero-padded or truncated copy on a new band.
  SpectralField with_band(int new_band) const {
    SpectralField out(new_band);
    const int b = std::min(band_, new_band);
    for (int k1 = -b; k1 <= b; ++k1)
      for (int k2 = -b; k2 <= b; ++k2)
        for (int k3 = -b; k3 <= b; ++k3) out(k1, k2, k3) = (*this)(k1, k2, k3);
    return out;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Sum of |c_k|^2; times 8 this is the L^2 norm squared on [-1,1]^3.
  double energy() const noexcept {
    double e = 0.0;
    for (const auto& c : coeffs_) e += std::norm(c);
    return e;
  }

  /// max_k |c(-k) - conj(c(k))|.
  double hermitian_defect() const noexcept {
    double d = 0.0;
    for_each([&](const Frequency& k, const cplx& c) {
      d = std::max(d, std::abs((*this)[-k] - std::conj(c)));
    });
    return d;
  }

  bool is_hermitian(double rel_tol = 1e-12) const noexcept {
    return hermitian_defect() <= rel_tol * std::max(1.0, max_abs());
  }

  bool all_finite() const noexcept {
    for (const auto& c : coeffs_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }

  SpectralField& operator+=(const SpectralField& o) { return accumulate(o, 1.0); }
  SpectralField& operator-=(const SpectralField& o) { return accumulate(o, -1.0); }

  SpectralField& operator*=(double s) noexcept {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  /// this += s * o, where o may have any band not exceeding this band.
  SpectralField& accumulate(const SpectralField& o, double s) {
    require(o.band_ <= band_, Errc::invalid_parameter, "operand band exceeds target band");
    if (o.band_ == band_) {
      for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
      return *this;
    }
    o.for_each([&](const Frequency& k, const cplx& c) { (*this)[k] += s * c; });
    return *this;
  }

  friend SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    if (a.band_ >= b.band_) {
      SpectralField out = a;
      return out += b;
    }
    SpectralField out = b;
    return out += a;
  }

  friend SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    SpectralField out = a.band_ >= b.band_ ? a : a.with_band(b.band_);
    return out -= b;
  }

  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  int band_ = 0;
  int side_ = 1;
  std::vector<cplx> coeffs_ = std::vector<cplx>(1);
};

/// Real samples on a uniform M^3 torus grid, x_m = 2m/M (mod 2), row-major.
/// With M = 2N+1 this is the lattice Lambda_eps.
class LatticeField {
 public:
  LatticeField() = default;

  explicit LatticeField(int side) : side_(side) {
    require(side >= 1, Errc::invalid_parameter, "grid side must be >= 1");
    values_.assign(static_cast<std::size_t>(side) * side * side, 0.0);
  }

  LatticeField(int side, std::vector<double> values) : side_(side), values_(std::move(values)) {
    require(values_.size() == static_cast<std::size_t>(side) * side * side, Errc::invalid_parameter,
            "value count does not match grid side");
  }

  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Grid spacing 2/M; equals eps on the lattice.
  double spacing() const noexcept { return 2.0 / side_; }

  std::size_t index(int i, int j, int l) const noexcept {
    auto wrap = [this](int m) { return static_cast<std::size_t>(((m % side_) + side_) % side_); };
    return (wrap(i) * side_ + wrap(j)) * side_ + wrap(l);
  }

  double& operator()(int i, int j, int l) noexcept { return values_[index(i, j, l)]; }
  double operator()(int i, int j, int l) const noexcept { return values_[index(i, j, l)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }

  bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double mean() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

 private:
  int side_ = 1;
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

}  // namespace phi43
