#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/fft.hpp"
#include "phi43/field.hpp"
#include "phi43/operators.hpp"

namespace phi43 {

/// Radial bump: 1 on |z| <= 1/2, 0 on |z| >= 1.
inline double chi_profile(double r) { return smooth_step_down((std::abs(r) - 0.5) / 0.5); }

/// Annulus profile chi(z/2) - chi(z), supported in 1/2 < |z| < 2.
inline double theta_profile(double r) { return chi_profile(0.5 * r) - chi_profile(r); }

/// Littlewood-Paley partition. Profiles are evaluated at the analytic frequency pi k.
struct DyadicPartition {
  int N = 1;
  int jmax = 0;

  static int jmax_for(int N) {
    return static_cast<int>(std::ceil(std::log2(std::sqrt(3.0) * std::numbers::pi * (3.0 * N + 1.0)))) + 1;
  }

  /// Weight of block j at radius r = pi |k|.
  static double weight_at(int j, double r) {
    if (j == -1) return chi_profile(r);
    return theta_profile(std::ldexp(r, -j));
  }

  static double weight(int j, const Frequency& k) {
    return weight_at(j, std::numbers::pi * std::sqrt(static_cast<double>(norm2(k))));
  }

  /// Largest block index that can be nonzero on a band-B field.
  static int top_block(int band) {
    if (band <= 0) return -1;
    const double r = std::numbers::pi * std::sqrt(3.0) * band;
    return static_cast<int>(std::floor(std::log2(r))) + 1;
  }

  /// Largest |k|_inf that block j can touch.
  static int block_band(int j, int band) {
    if (j < 0) return 0;
    return std::min(band, static_cast<int>(std::floor(std::ldexp(1.0, j + 1) / std::numbers::pi)));
  }
};

inline DyadicPartition build_dyadic_partition(int N) {
  require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
  return DyadicPartition{N, DyadicPartition::jmax_for(N)};
}

inline SpectralField lp_block(const SpectralField& u, int j, const DyadicPartition&) {
  require(j >= -1, Errc::invalid_parameter, "block index must be >= -1");
  const int b = DyadicPartition::block_band(j, u.band());
  SpectralField out(b);
  out.for_each([&](const Frequency& k, cplx& c) {
    const double w = DyadicPartition::weight(j, k);
    if (w != 0.0) c = w * u[k];
  });
  return out;
}

/// S_j u = sum of blocks i <= j-1.
inline SpectralField lp_low(const SpectralField& u, int j, const DyadicPartition& part) {
  SpectralField out(u.band());
  for (int i = -1; i <= j - 1; ++i) out += lp_block(u, i, part);
  return out;
}

/// Per-mode block memberships of a band; each frequency meets at most two blocks.
class BlockMembership {
 public:
  explicit BlockMembership(int band) : band_(band), top_(DyadicPartition::top_block(band)) {
    SpectralField shape(band);
    j_.resize(shape.size());
    w_.resize(2 * shape.size());
    std::size_t i = 0;
    shape.for_each([&](const Frequency& k, cplx&) {
      int first = -2;
      double w0 = 0.0, w1 = 0.0;
      for (int j = -1; j <= top_; ++j) {
        const double w = DyadicPartition::weight(j, k);
        if (w == 0.0) continue;
        if (first == -2) {
          first = j;
          w0 = w;
        } else {
          w1 = w;
        }
      }
      j_[i] = first;
      w_[2 * i] = w0;
      w_[2 * i + 1] = w1;
      ++i;
    });
  }

  int band() const noexcept { return band_; }
  int top() const noexcept { return top_; }

  /// Lowest block meeting mode i (storage order of a band-B field), or -2 for none;
  /// the mode also meets block first(i) + 1 with weight second_weight(i).
  int first(std::size_t i) const noexcept { return j_[i]; }
  double first_weight(std::size_t i) const noexcept { return w_[2 * i]; }
  double second_weight(std::size_t i) const noexcept { return w_[2 * i + 1]; }

  /// Upper bounds sum_k w_j(k) |c_k| >= ||Delta_j u||_inf, entry j+1.
  std::vector<double> l1_bounds(const SpectralField& u) const {
    std::vector<double> b(static_cast<std::size_t>(top_ + 3), 0.0);
    const auto c = u.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (j_[i] == -2) continue;
      const double a = std::abs(c[i]);
      b[static_cast<std::size_t>(j_[i] + 1)] += w_[2 * i] * a;
      b[static_cast<std::size_t>(j_[i] + 2)] += w_[2 * i + 1] * a;
    }
    b.resize(static_cast<std::size_t>(top_ + 2));
    return b;
  }

 private:
  int band_;
  int top_;
  std::vector<int> j_;
  std::vector<double> w_;
};

struct BesovIndex {
  double alpha = 0.0;
  double p = std::numeric_limits<double>::infinity();
  double q = std::numeric_limits<double>::infinity();
};

/// L^p norm on [-1,1]^3 from grid samples (grid max for p = inf).
inline double grid_lp_norm(const LatticeField& v, double p) {
  if (std::isinf(p)) return v.max_abs();
  double s = 0.0;
  for (double x : v.values()) s += std::pow(std::abs(x), p);
  return std::pow(8.0 * s / static_cast<double>(v.size()), 1.0 / p);
}

/// ||Delta_j u||_{L^p} for j = -1..top_block(band), entry j+1.
inline std::vector<double> block_lp_norms(const SpectralField& u, double p, const DyadicPartition& part,
                                          double oversample = 2.0) {
  require(oversample >= 2.0, Errc::invalid_parameter, "oversample factor must be >= 2");
  require(p >= 1.0, Errc::invalid_parameter, "integrability index must be >= 1");
  const int top = DyadicPartition::top_block(u.band());
  std::vector<double> norms(static_cast<std::size_t>(top + 2), 0.0);
  for (int j = -1; j <= top; ++j) {
    auto blk = lp_block(u, j, part);
    if (blk.max_abs() == 0.0) continue;
    const int M = fft::nice_size(static_cast<int>(std::ceil(oversample * (2 * blk.band() + 1))));
    norms[static_cast<std::size_t>(j + 1)] = grid_lp_norm(fft::synthesize(blk, M), p);
  }
  return norms;
}

/// l^q aggregate of 2^{j alpha} times precomputed block norms.
inline double besov_from_blocks(const std::vector<double>& norms, double alpha, double q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const int j = static_cast<int>(i) - 1;
    const double v = std::pow(2.0, j * alpha) * norms[i];
    if (std::isinf(q)) acc = std::max(acc, v);
    else acc += std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

inline double besov_norm(const SpectralField& u, const BesovIndex& idx, const DyadicPartition& part,
                         double oversample = 2.0) {
  require(idx.q >= 1.0, Errc::invalid_parameter, "summability index must be >= 1");
  return besov_from_blocks(block_lp_norms(u, idx.p, part, oversample), idx.alpha, idx.q);
}

/// The C^alpha norm: B^alpha_{inf,inf}.
inline double holder_norm(const SpectralField& u, double alpha, const DyadicPartition& part,
                          double oversample = 2.0) {
  return besov_norm(u, BesovIndex{alpha}, part, oversample);
}

enum class ParaKind { lt, res, gt };

namespace detail {

/// Samples of Delta_j u on an M^3 grid, or an empty field when the block vanishes.
inline LatticeField block_samples(const SpectralField& u, int j, int M, const DyadicPartition& part) {
  auto blk = lp_block(u, j, part);
  if (blk.max_abs() == 0.0) return LatticeField();
  return fft::synthesize(blk, M);
}

inline bool empty(const LatticeField& v) { return v.size() <= 1; }

}  // namespace detail

/// Bony paraproducts on a fully dealiased grid; the output band is the sum of the bands.
/// The k = 0 mode of the result is kept.
inline SpectralField paraproduct(const SpectralField& f, const SpectralField& g, ParaKind kind,
                                 const DyadicPartition& part) {
  if (kind == ParaKind::gt) return paraproduct(g, f, ParaKind::lt, part);
  require(f.all_finite() && g.all_finite(), Errc::invalid_data, "non-finite coefficient");
  const int band = f.band() + g.band();
  const int M = fft::nice_size(std::max(3, 2 * band + 1));
  const int top = std::max(DyadicPartition::top_block(f.band()), DyadicPartition::top_block(g.band()));
  LatticeField acc(M);
  auto& out = acc.storage();
  auto add_product = [&](const LatticeField& a, const LatticeField& b) {
    if (detail::empty(a) || detail::empty(b)) return;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += av[i] * bv[i];
  };

  if (kind == ParaKind::lt) {
    // Running S_{j-1} f = sum_{i <= j-2} Delta_i f.
    LatticeField low(M);
    bool low_nonzero = false;
    for (int j = 1; j <= top; ++j) {
      auto fj = detail::block_samples(f, j - 2, M, part);
      if (!detail::empty(fj)) {
        auto& lv = low.storage();
        const auto fv = fj.values();
        for (std::size_t i = 0; i < lv.size(); ++i) lv[i] += fv[i];
        low_nonzero = true;
      }
      if (!low_nonzero) continue;
      add_product(low, detail::block_samples(g, j, M, part));
    }
  } else {
    std::vector<LatticeField> fb;
    fb.reserve(static_cast<std::size_t>(top + 3));
    for (int j = -1; j <= top + 1; ++j) fb.push_back(detail::block_samples(f, j, M, part));
    auto fblock = [&](int j) -> const LatticeField& { return fb[static_cast<std::size_t>(j + 1)]; };
    for (int j = -1; j <= top; ++j) {
      auto gj = detail::block_samples(g, j, M, part);
      if (detail::empty(gj)) continue;
      for (int i = std::max(-1, j - 1); i <= j + 1; ++i) add_product(fblock(i), gj);
    }
  }
  return fft::analyze(acc, band);
}

/// C(f,g,h) = pi_0(pi_<(f,g), h) - f pi_0(g,h).
inline SpectralField commutator(const SpectralField& f, const SpectralField& g, const SpectralField& h,
                                const DyadicPartition& part) {
  auto first = paraproduct(paraproduct(f, g, ParaKind::lt, part), h, ParaKind::res, part);
  auto second = fft::multiply(f, paraproduct(g, h, ParaKind::res, part));
  return first - second;
}

/// Exponents of the analysis; validate() checks the admissibility inequalities.
struct AnalysisParams {
  double z = 0.6;
  double delta = 0.02;
  double beta = 0.011;
  double kappa = 0.005;
  double gamma = 0.027;
  double rho = 0.01;

  std::string violation() const {
    if (!(z > 0.5 && z < 2.0 / 3.0)) return "z must lie in (1/2, 2/3)";
    if (!(2.0 * z - 1.0 >= delta)) return "2z - 1 >= delta fails";
    if (!(delta > 2.0 * kappa)) return "delta > 2 kappa fails";
    if (!(kappa > 0.0)) return "kappa must be positive";
    if (!(beta > delta / 2.0)) return "beta > delta/2 fails";
    if (!(beta + delta / 2.0 + kappa < gamma)) return "beta + delta/2 + kappa < gamma fails";
    if (!(5.0 * kappa + delta / 2.0 + beta + 3.0 * gamma < 2.0 - 3.0 * z))
      return "5 kappa + delta/2 + beta + 3 gamma < 2 - 3z fails";
    if (!(rho > 0.0)) return "rho must be positive";
    return {};
  }

  bool admissible() const { return violation().empty(); }

  void validate() const {
    const auto v = violation();
    require(v.empty(), Errc::invalid_parameter, "analysis exponents: " + v);
  }
};

}  // namespace phi43
