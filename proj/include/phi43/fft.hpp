#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/field.hpp"

namespace phi43::fft {

/// Smallest n' >= n whose prime factors are all in {2,3,5,7}.
inline int nice_size(int n) {
  if (n < 1) n = 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

/// Smallest odd n' >= n with factors in {3,5,7}. Odd sizes have no Nyquist plane.
inline int nice_odd_size(int n) {
  if (n < 1) n = 1;
  for (int m = n | 1;; m += 2) {
    int r = m;
    for (int p : {3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

inline std::size_t half_size(int M) {
  return static_cast<std::size_t>(M) * M * (M / 2 + 1);
}

namespace detail {

struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

/// Band-pruned transforms between a band-B spectrum and an M^3 grid, done axis by axis so that
/// only lines that can hold nonzero coefficients are transformed.
struct PrunedPlans {
  fftw_plan line0_bwd = nullptr, line1_bwd = nullptr, rows_c2r = nullptr;
  fftw_plan line0_fwd = nullptr, line1_fwd = nullptr, rows_r2c = nullptr;
};

/// Plans are created once per size and executed through the new-array interface,
/// which FFTW documents as thread-safe. Estimate-mode planning keeps results reproducible.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(int M) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(M);
    if (it != plans_.end()) return it->second;
    std::vector<double> re(static_cast<std::size_t>(M) * M * M);
    std::vector<std::complex<double>> im(half_size(M));
    auto* rp = re.data();
    auto* cp = reinterpret_cast<fftw_complex*>(im.data());
    PlanPair p;
    p.r2c = fftw_plan_dft_r2c_3d(M, M, M, rp, cp, kFlags);
    p.c2r = fftw_plan_dft_c2r_3d(M, M, M, cp, rp, kFlags | FFTW_DESTROY_INPUT);
    require(p.r2c != nullptr && p.c2r != nullptr, Errc::invalid_parameter, "FFT planning failed");
    plans_.emplace(M, p);
    return p;
  }

  PrunedPlans get_pruned(int M, int B) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = pruned_.find({M, B});
    if (it != pruned_.end()) return it->second;
    const int H = M / 2 + 1;
    std::vector<double> re(static_cast<std::size_t>(M) * M * M);
    std::vector<std::complex<double>> im(half_size(M));
    auto* rp = re.data();
    auto* cp = reinterpret_cast<fftw_complex*>(im.data());
    int n[1] = {M};
    PrunedPlans p;
    // lines along axis 0 at fixed k2, one per k3 in 0..B
    p.line0_bwd = fftw_plan_many_dft(1, n, B + 1, cp, nullptr, M * H, 1, cp, nullptr, M * H, 1, FFTW_BACKWARD, kFlags);
    p.line0_fwd = fftw_plan_many_dft(1, n, B + 1, cp, nullptr, M * H, 1, cp, nullptr, M * H, 1, FFTW_FORWARD, kFlags);
    // lines along axis 1 at fixed x1
    p.line1_bwd = fftw_plan_many_dft(1, n, B + 1, cp, nullptr, H, 1, cp, nullptr, H, 1, FFTW_BACKWARD, kFlags);
    p.line1_fwd = fftw_plan_many_dft(1, n, B + 1, cp, nullptr, H, 1, cp, nullptr, H, 1, FFTW_FORWARD, kFlags);
    // all rows along axis 2
    p.rows_c2r = fftw_plan_many_dft_c2r(1, n, M * M, cp, nullptr, 1, H, rp, nullptr, 1, M, kFlags | FFTW_DESTROY_INPUT);
    p.rows_r2c = fftw_plan_many_dft_r2c(1, n, M * M, rp, nullptr, 1, M, cp, nullptr, 1, H, kFlags);
    require(p.line0_bwd && p.line0_fwd && p.line1_bwd && p.line1_fwd && p.rows_c2r && p.rows_r2c,
            Errc::invalid_parameter, "FFT planning failed");
    pruned_.emplace(std::make_pair(M, B), p);
    return p;
  }

  ~PlanCache() {
    for (auto& [M, p] : plans_) {
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
    for (auto& [key, p] : pruned_)
      for (auto* q : {p.line0_bwd, p.line1_bwd, p.rows_c2r, p.line0_fwd, p.line1_fwd, p.rows_r2c})
        fftw_destroy_plan(q);
  }

 private:
  static constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
  std::map<std::pair<int, int>, PrunedPlans> pruned_;
};

inline int wrap(int k, int M) { return ((k % M) + M) % M; }

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// Band-B spectrum into samples on the M^3 grid; half is scratch of half_size(M).
inline void synthesize_into(const SpectralField& f, int M, std::complex<double>* half, double* out) {
  const int B = f.band();
  const int H = M / 2 + 1;
  std::fill(half, half + half_size(M), std::complex<double>{});
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      const std::size_t row = (static_cast<std::size_t>(wrap(k1, M)) * M + wrap(k2, M)) * H;
      for (int k3 = 0; k3 <= B; ++k3) half[row + k3] = f(k1, k2, k3);
    }
  const auto p = PlanCache::instance().get_pruned(M, B);
  for (int k2 = -B; k2 <= B; ++k2) {
    auto* base = as_fftw(half + static_cast<std::size_t>(wrap(k2, M)) * H);
    fftw_execute_dft(p.line0_bwd, base, base);
  }
  for (int x1 = 0; x1 < M; ++x1) {
    auto* base = as_fftw(half + static_cast<std::size_t>(x1) * M * H);
    fftw_execute_dft(p.line1_bwd, base, base);
  }
  fftw_execute_dft_c2r(p.rows_c2r, as_fftw(half), out);
}

/// Samples on the M^3 grid into coefficients on |k|_inf <= out.band(); half is scratch.
inline void analyze_into(const double* in, int M, std::complex<double>* half, SpectralField& out) {
  const int B = out.band();
  const int H = M / 2 + 1;
  const auto p = PlanCache::instance().get_pruned(M, B);
  fftw_execute_dft_r2c(p.rows_r2c, const_cast<double*>(in), as_fftw(half));
  for (int x1 = 0; x1 < M; ++x1) {
    auto* base = as_fftw(half + static_cast<std::size_t>(x1) * M * H);
    fftw_execute_dft(p.line1_fwd, base, base);
  }
  for (int k2 = -B; k2 <= B; ++k2) {
    auto* base = as_fftw(half + static_cast<std::size_t>(wrap(k2, M)) * H);
    fftw_execute_dft(p.line0_fwd, base, base);
  }
  const double scale = 1.0 / (static_cast<double>(M) * M * M);
  for (int k1 = -B; k1 <= B; ++k1)
    for (int k2 = -B; k2 <= B; ++k2) {
      const std::size_t row = (static_cast<std::size_t>(wrap(k1, M)) * M + wrap(k2, M)) * H;
      for (int k3 = 0; k3 <= B; ++k3) {
        const auto c = half[row + k3] * scale;
        out(k1, k2, k3) = c;
        out(-k1, -k2, -k3) = std::conj(c);
      }
    }
}

}  // namespace detail

/// Unnormalized forward real transform: out[n] = sum_m in[m] exp(-2 pi i n.m / M).
inline void r2c(int M, const double* in, std::complex<double>* out) {
  auto p = detail::PlanCache::instance().get(M);
  fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

/// Unnormalized backward transform of a half spectrum; the input is overwritten.
inline void c2r(int M, std::complex<double>* in, double* out) {
  auto p = detail::PlanCache::instance().get(M);
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(in), out);
}

/// Evaluates u(x) = sum_k c_k exp(i pi k.x) at x_m = 2m/M. Assumes Hermitian coefficients.
inline LatticeField synthesize(const SpectralField& f, int M) {
  require(M >= 2 * f.band() + 1, Errc::invalid_parameter, "sample grid too small for band");
  std::vector<std::complex<double>> half(half_size(M));
  LatticeField out(M);
  detail::synthesize_into(f, M, half.data(), out.storage().data());
  return out;
}

/// Coefficients c_k for |k|_inf <= band of real samples on an M^3 grid (k = 0 kept).
inline SpectralField analyze(const LatticeField& v, int band) {
  const int M = v.side();
  require(2 * band + 1 <= M, Errc::invalid_parameter, "band exceeds grid resolution");
  std::vector<std::complex<double>> half(half_size(M));
  SpectralField out(band);
  detail::analyze_into(v.values().data(), M, half.data(), out);
  return out;
}

/// Reusable buffers for repeated transforms on one M^3 grid.
class Workspace {
 public:
  explicit Workspace(int M) : M_(M), half_(half_size(M)), real_(M) {}

  int side() const noexcept { return M_; }
  LatticeField& samples() noexcept { return real_; }

  /// Fills samples() with u(x_m); same contract as synthesize.
  void synthesize(const SpectralField& f) {
    require(M_ >= 2 * f.band() + 1, Errc::invalid_parameter, "sample grid too small for band");
    detail::synthesize_into(f, M_, half_.data(), real_.storage().data());
  }

  /// Coefficients of samples() on |k|_inf <= out.band(), written into out.
  void analyze(SpectralField& out) {
    require(2 * out.band() + 1 <= M_, Errc::invalid_parameter, "band exceeds grid resolution");
    detail::analyze_into(real_.values().data(), M_, half_.data(), out);
  }

 private:
  int M_;
  std::vector<std::complex<double>> half_;
  LatticeField real_;
};

/// Pointwise product of two Hermitian fields, computed without aliasing.
/// The result has band fa.band() + fb.band() (capped at out_band when given).
inline SpectralField multiply(const SpectralField& fa, const SpectralField& fb, int out_band = -1) {
  const int full = fa.band() + fb.band();
  const int band = out_band < 0 ? full : std::min(out_band, full);
  // An alias k + M n of a retained mode stays outside the product band once M > band + full.
  const int M = nice_size(std::max(band + full + 1, 2 * std::max(fa.band(), fb.band()) + 1));
  auto va = synthesize(fa, M);
  auto vb = synthesize(fb, M);
  auto& a = va.storage();
  const auto& b = vb.storage();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return analyze(va, band);
}

}  // namespace phi43::fft
