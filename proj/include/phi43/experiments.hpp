#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "phi43/dynamics.hpp"
#include "phi43/parallel.hpp"
#include "phi43/renorm.hpp"
#include "phi43/results.hpp"
#include "phi43/stats.hpp"
#include "phi43/stochastic.hpp"
#include "phi43/study_config.hpp"

namespace phi43 {

/// Tables plus short human-readable lines. `passed` is the study's own verdict where it has one.
struct StudyReport {
  std::vector<Table> tables;
  std::vector<std::string> summary;
  bool passed = true;
};

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------------------------
// Renormalisation constants and their scaling

struct RenormScaling {
  std::vector<RenormConstants> consts;
  std::vector<double> eps_C0;
  std::vector<double> C11_over_log;
  std::vector<double> C12_min, C12_max;
  std::vector<double> eps_C0_ratios;    // consecutive entries
  std::vector<double> C11_log_diffs;    // consecutive entries
  bool ratios_in_band = true;           // every ratio in [0.85, 1.15]
  bool diffs_shrinking = true;          // |differences| strictly decreasing
  bool C12_bounded = true;              // max |C12| grows by less than 25% across the list
};

inline RenormScaling renorm_scaling(const std::vector<int>& N_list, double continuum_scale = 1.0) {
  RenormScaling r;
  for (int N : N_list) {
    auto c = compute_constants(N, continuum_scale);
    const double L = std::log(1.0 / c.eps);
    r.eps_C0.push_back(c.eps * c.C0);
    r.C11_over_log.push_back(L > 0.0 ? c.C11 / L : std::numeric_limits<double>::quiet_NaN());
    r.C12_min.push_back(*std::min_element(c.C12.begin(), c.C12.end()));
    r.C12_max.push_back(*std::max_element(c.C12.begin(), c.C12.end()));
    r.consts.push_back(c);
  }
  for (std::size_t i = 1; i < N_list.size(); ++i) {
    r.eps_C0_ratios.push_back(r.eps_C0[i] / r.eps_C0[i - 1]);
    r.C11_log_diffs.push_back(r.C11_over_log[i] - r.C11_over_log[i - 1]);
  }
  for (double x : r.eps_C0_ratios) r.ratios_in_band = r.ratios_in_band && x >= 0.85 && x <= 1.15;
  for (std::size_t i = 1; i < r.C11_log_diffs.size(); ++i)
    r.diffs_shrinking = r.diffs_shrinking && std::abs(r.C11_log_diffs[i]) < std::abs(r.C11_log_diffs[i - 1]);
  if (!r.C12_max.empty()) {
    auto mag = [&](std::size_t i) { return std::max(std::abs(r.C12_max[i]), std::abs(r.C12_min[i])); };
    double hi = 0.0;
    for (std::size_t i = 0; i < r.C12_max.size(); ++i) hi = std::max(hi, mag(i));
    r.C12_bounded = hi <= 1.25 * mag(0);
  }
  return r;
}

inline StudyReport renorm_scaling_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto r = renorm_scaling(cfg.N_list, cfg.continuum_scale);
  StudyReport rep;

  std::vector<std::string> cols{"N", "eps", "C0", "C0_bar", "C11", "C11_bar"};
  for (const auto& t : alias_triples())
    cols.push_back("C12[" + std::to_string(t[0]) + ";" + std::to_string(t[1]) + ";" + std::to_string(t[2]) + "]");
  cols.insert(cols.end(), {"C1", "mass_shift"});
  Table constants("renorm_constants", cols);
  for (const auto& c : r.consts) {
    auto& row = constants.row();
    row << c.N << c.eps << c.C0 << c.C0_bar << c.C11 << c.C11_bar;
    for (double v : c.C12) row << v;
    row << c.C1 << c.mass_shift;
  }
  Table scaling("renorm_scaling", {"N", "eps", "C0", "eps_C0", "C11", "C11_over_log_inv_eps", "C12_min", "C12_max"});
  for (std::size_t i = 0; i < r.consts.size(); ++i) {
    const auto& c = r.consts[i];
    scaling.row() << c.N << c.eps << c.C0 << r.eps_C0[i] << c.C11 << r.C11_over_log[i] << r.C12_min[i] << r.C12_max[i];
  }
  rep.tables = {constants, scaling};
  for (const auto& c : r.consts)
    rep.summary.push_back("N = " + std::to_string(c.N) + ": C0 = " + fmt("%.6f", c.C0) + ", C0_bar = " +
                          fmt("%.6f", c.C0_bar) + ", C11 = " + fmt("%.6f", c.C11) + ", mass_shift = " +
                          fmt("%.6f", c.mass_shift));
  if (cfg.N_list.size() >= 3) {
    std::string s = "eps*C0 consecutive ratios:";
    for (double x : r.eps_C0_ratios) s += " " + fmt("%.4f", x);
    rep.summary.push_back(s + (r.ratios_in_band ? " (all in [0.85, 1.15])" : " (outside [0.85, 1.15])"));
    s = "C11/log(1/eps) successive differences:";
    for (double x : r.C11_log_diffs) s += " " + fmt("%.4f", x);
    rep.summary.push_back(s + (r.diffs_shrinking ? " (shrinking)" : " (not shrinking)"));
    rep.summary.push_back(std::string("max |C12| over triples ") + (r.C12_bounded ? "bounded" : "growing") +
                          " across N_list");
    rep.passed = r.ratios_in_band && r.diffs_shrinking && r.C12_bounded;
  } else {
    rep.summary.push_back("scaling diagnostics need at least three entries in N_list");
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Stationary OU law

struct OuModeCheck {
  Frequency k{};
  double lambda = 0.0, V0 = 0.0;
  stats::Summary var, lag;
  double lag_expected = 0.0;
  double var_z = 0.0, lag_z = 0.0;
};

struct OuLawCheck {
  int N = 0;
  Variant variant = Variant::lattice;
  std::vector<OuModeCheck> modes;
  double z_threshold = 0.0;  // family-wise 3 sigma over all per-mode checks of this (N, variant)
  double max_z = 0.0;
  double C0 = 0.0;
  stats::Summary mean_square;
  double mean_square_z = 0.0;
  bool passed = false;
};

/// Per-mode E|a_k|^2 and E[a_k(t+lag) conj a_k(t)] against V0 = 1/(2 lambda) and V0 e^{-lambda lag},
/// and the spatial mean of u1^2 against C0.
inline OuLawCheck ou_law_check(int N, Variant v, int samples, std::uint64_t seed, double lag, int threads) {
  OuLawCheck out;
  out.N = N;
  out.variant = v;
  std::vector<Frequency> ks;
  for_each_orbit(N, [&](const Frequency& k) { ks.push_back(k); });
  struct Draw {
    std::vector<double> var, lag;
    double msq = 0.0;
  };
  const auto draws = parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t r) {
    auto s = ou_sample_stationary(make_grid(N), v, seed, static_cast<std::uint32_t>(r));
    const auto s2 = ou_transition(s, lag);
    Draw d;
    for (const auto& k : ks) {
      d.var.push_back(std::norm(s.a[k]));
      d.lag.push_back((s2.a[k] * std::conj(s.a[k])).real());
    }
    d.msq = s.field().energy();  // spatial mean of u1^2 (Parseval, k = 0 is zero)
    return d;
  });
  out.z_threshold = stats::sidak_z(3.0, 2 * ks.size());
  std::vector<double> col(draws.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    OuModeCheck m;
    m.k = ks[i];
    m.lambda = v == Variant::lattice ? lattice_lambda(ks[i], N) : continuum_lambda(ks[i], kLaplacianScale);
    m.V0 = 1.0 / (2.0 * m.lambda);
    m.lag_expected = m.V0 * std::exp(-m.lambda * lag);
    for (std::size_t r = 0; r < draws.size(); ++r) col[r] = draws[r].var[i];
    m.var = stats::summarize(col);
    for (std::size_t r = 0; r < draws.size(); ++r) col[r] = draws[r].lag[i];
    m.lag = stats::summarize(col);
    m.var_z = m.var.stderr_ > 0.0 ? std::abs(m.var.mean - m.V0) / m.var.stderr_ : 0.0;
    m.lag_z = m.lag.stderr_ > 0.0 ? std::abs(m.lag.mean - m.lag_expected) / m.lag.stderr_ : 0.0;
    out.max_z = std::max({out.max_z, m.var_z, m.lag_z});
    out.modes.push_back(m);
  }
  for (std::size_t r = 0; r < draws.size(); ++r) col[r] = draws[r].msq;
  out.mean_square = stats::summarize(col);
  out.C0 = v == Variant::lattice ? compute_C0(N) : compute_C0(N, CovVariant::galerkin, kLaplacianScale);
  out.mean_square_z =
      out.mean_square.stderr_ > 0.0 ? std::abs(out.mean_square.mean - out.C0) / out.mean_square.stderr_ : 0.0;
  out.passed = out.max_z <= out.z_threshold && out.mean_square_z <= 3.0;
  return out;
}

inline StudyReport ou_law_study(const StudyConfig& cfg, int threads = 1) {
  cfg.validate();
  StudyReport rep;
  Table modes("ou_law_modes", {"N", "variant", "k1", "k2", "k3", "lambda", "V0", "var_mean", "var_stderr", "var_z",
                               "lag", "lag_expected", "lag_mean", "lag_stderr", "lag_z"});
  Table summary("ou_law_summary", {"N", "variant", "samples", "modes", "z_threshold", "max_z", "C0",
                                   "mean_square", "mean_square_stderr", "mean_square_z", "passed"});
  for (int N : cfg.N_list)
    for (Variant v : {Variant::lattice, Variant::galerkin}) {
      const auto c = ou_law_check(N, v, cfg.samples, cfg.seed, cfg.lag, threads);
      for (const auto& m : c.modes)
        modes.row() << N << to_string(v) << m.k[0] << m.k[1] << m.k[2] << m.lambda << m.V0 << m.var.mean
                    << m.var.stderr_ << m.var_z << cfg.lag << m.lag_expected << m.lag.mean << m.lag.stderr_ << m.lag_z;
      summary.row() << N << to_string(v) << cfg.samples << c.modes.size() << c.z_threshold << c.max_z << c.C0
                    << c.mean_square.mean << c.mean_square.stderr_ << c.mean_square_z << c.passed;
      rep.summary.push_back("N = " + std::to_string(N) + " " + to_string(v) + ": max |z| " + fmt("%.2f", c.max_z) +
                            " (threshold " + fmt("%.2f", c.z_threshold) + "), E u1^2 = " +
                            fmt("%.6f", c.mean_square.mean) + " vs C0 = " + fmt("%.6f", c.C0) + " (z " +
                            fmt("%.2f", c.mean_square_z) + ")" + (c.passed ? "" : "  FAIL"));
      rep.passed = rep.passed && c.passed;
    }
  rep.tables = {modes, summary};
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Littlewood-Paley block variance of coupled differences

/// Probe points: the origin followed by a fixed low-discrepancy sequence in [-1,1)^3.
inline std::vector<std::array<double, 3>> probe_points(int count) {
  std::vector<std::array<double, 3>> p;
  const std::array<double, 3> alpha{0.8191725133961645, 0.6710436067037893, 0.5497004779019703};
  for (int i = 0; i < count; ++i) {
    std::array<double, 3> x{};
    for (int a = 0; a < 3; ++a) x[a] = 2.0 * std::fmod(i * alpha[a], 1.0) - 1.0;
    p.push_back(x);
  }
  return p;
}

/// Per-replica block statistics of a field: |Delta_q d(x_0)|^2, its mean over the probe set,
/// and the torus mean sum_k theta_q(k)^2 |d_k|^2. Entry q + 1 for q = -1..top.
struct BlockSample {
  std::vector<double> point, probes, torus;
};

inline BlockSample block_sample(const SpectralField& d, const BlockMembership& blocks,
                                const std::vector<std::array<double, 3>>& pts) {
  require(blocks.band() == d.band(), Errc::invalid_parameter, "block table band mismatch");
  const int B = d.band();
  const std::size_t nb = static_cast<std::size_t>(blocks.top() + 2);
  const std::size_t P = pts.size();
  // phase[p][axis][k + B] = exp(i pi k x_p[axis])
  std::vector<cplx> phase(P * 3 * (2 * B + 1));
  auto ph = [&](std::size_t p, int a, int k) -> cplx& {
    return phase[(p * 3 + static_cast<std::size_t>(a)) * (2 * B + 1) + static_cast<std::size_t>(k + B)];
  };
  for (std::size_t p = 0; p < P; ++p)
    for (int a = 0; a < 3; ++a)
      for (int k = -B; k <= B; ++k) ph(p, a, k) = std::polar(1.0, std::numbers::pi * k * pts[p][a]);
  std::vector<double> acc(nb * P, 0.0);  // real parts of sum over canonical modes, times 2 at the end
  BlockSample out;
  out.torus.assign(nb, 0.0);
  const auto c = d.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int j = blocks.first(i);
    if (j == -2 || c[i] == cplx{}) continue;
    const Frequency k = d.frequency(i);
    if (!rng::is_canonical(k)) continue;
    const double w0 = blocks.first_weight(i), w1 = blocks.second_weight(i);
    const double n2 = std::norm(c[i]);
    out.torus[static_cast<std::size_t>(j + 1)] += 2.0 * w0 * w0 * n2;
    if (w1 != 0.0) out.torus[static_cast<std::size_t>(j + 2)] += 2.0 * w1 * w1 * n2;
    for (std::size_t p = 0; p < P; ++p) {
      const double re = (c[i] * ph(p, 0, k[0]) * ph(p, 1, k[1]) * ph(p, 2, k[2])).real();
      acc[static_cast<std::size_t>(j + 1) * P + p] += w0 * re;
      if (w1 != 0.0) acc[static_cast<std::size_t>(j + 2) * P + p] += w1 * re;
    }
  }
  // the k = 0 mode only meets block -1 and has no conjugate partner
  const double c0 = d(0, 0, 0).real() * DyadicPartition::weight(-1, Frequency{0, 0, 0});
  out.torus[0] += c0 * c0;
  out.point.assign(nb, 0.0);
  out.probes.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t p = 0; p < P; ++p) {
      const double v = 2.0 * acc[b * P + p] + (b == 0 ? c0 : 0.0);
      if (p == 0) out.point[b] = v * v;
      out.probes[b] += v * v / static_cast<double>(P);
    }
  }
  return out;
}

/// Exact E|d_k|^2 of the coupled stationary difference u1 (cut N) - u1_bar (cut N_ref), field units.
inline double u1_diff_mode_variance(const Frequency& k, int N, int N_ref) {
  if (norm_inf(k) > N_ref || is_zero(k)) return 0.0;
  const double b = continuum_lambda(k, kLaplacianScale);
  if (norm_inf(k) > N) return 0.125 / (2.0 * b);
  const double a = lattice_lambda(k, N);
  return 0.125 * (a - b) * (a - b) / (2.0 * a * b * (a + b));
}

struct BlockEstimate {
  int N = 0;
  int q = 0;
  double estimate = 0.0, stderr_ = 0.0;  // probe-set mean
  double point = 0.0, point_stderr = 0.0;  // x_0 only
  double torus = 0.0;
  double exact = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Coupled pair (lattice cut N, reference cut N_ref) of stationary OU coefficients at time t.
inline SpectralField u1_at(int cut, Variant v, const NoiseKey& key, double t) {
  SpectralField a(cut);
  const NoiseRates r{cut, kLaplacianScale};
  const bool anchor = v == Variant::galerkin;
  const NoiseClock clock{t, 1};
  for_each_orbit(cut, [&](const Frequency& k) {
    const double rate = anchor ? r.anchor(k) : r.lattice(k);
    const cplx a0 = mode_stationary(key, k, rate, r.anchor(k), anchor);
    const cplx x = std::exp(-rate * t) * a0 + mode_increment(key, k, rate, r.anchor(k), anchor, clock, 0);
    a[k] = kModeToCoeff * x;
    a[-k] = std::conj(a[k]);
  });
  return a;
}

}  // namespace detail

/// Block estimates for every N of cfg.N_list and every block q = -1..top of the difference band.
/// result[n][q + 1]. The reference is cfg.reference at cut N_ref; u1_diff rows against the
/// galerkin reference carry the exact expectation.
inline std::vector<std::vector<BlockEstimate>> block_variance_all(BlockObject object, double t,
                                                                  const StudyConfig& cfg, int threads = 1) {
  cfg.validate();
  require(t > 0.0, Errc::invalid_parameter, "block time must be > 0");
  for (int N : cfg.N_list) require(N <= cfg.N_ref, Errc::invalid_parameter, "every N must be <= N_ref");
  const int Bd = object == BlockObject::wick2_diff ? 2 * cfg.N_ref : cfg.N_ref;
  const BlockMembership blocks(Bd);
  const auto pts = probe_points(cfg.probes);
  const Variant rv = cfg.reference;
  const double C0_ref = rv == Variant::galerkin ? compute_C0(cfg.N_ref, CovVariant::galerkin, kLaplacianScale)
                                                : compute_C0(cfg.N_ref);
  std::vector<double> C0_lat;
  for (int N : cfg.N_list) C0_lat.push_back(compute_C0(N));
  std::size_t steps = 0;
  if (object == BlockObject::u2_diff) {
    steps = static_cast<std::size_t>(std::llround(t / cfg.dt));
    require(steps >= 1 && std::abs(static_cast<double>(steps) * cfg.dt - t) <= 1e-9 * t, Errc::invalid_parameter,
            "block time must be a multiple of dt");
  }

  auto sample = [&](std::size_t r) {
    const NoiseKey key{cfg.seed, static_cast<std::uint32_t>(r)};
    std::vector<BlockSample> out;
    if (object == BlockObject::u2_diff) {
      const NoiseClock clock{cfg.dt, 1};
      const auto ref_path = simulate_u1(make_grid(cfg.N_ref), rv, key, t, clock);
      const auto ref = compute_u2(ref_path, cfg.N_ref, rv, C0_ref).values.back();
      for (std::size_t n = 0; n < cfg.N_list.size(); ++n) {
        const int N = cfg.N_list[n];
        const auto path = simulate_u1(make_grid(N), Variant::lattice, key, t, clock);
        auto d = compute_u2(path, N, Variant::lattice, C0_lat[n]).values.back().with_band(Bd);
        d.accumulate(ref, -1.0);
        out.push_back(block_sample(d, blocks, pts));
      }
      return out;
    }
    const auto ref = detail::u1_at(cfg.N_ref, rv, key, t);
    SpectralField ref_obj = ref;
    if (object == BlockObject::wick2_diff) ref_obj = wick_square(ref, C0_ref);
    for (std::size_t n = 0; n < cfg.N_list.size(); ++n) {
      const auto lat = detail::u1_at(cfg.N_list[n], Variant::lattice, key, t);
      auto d = (object == BlockObject::wick2_diff ? wick_square(lat, C0_lat[n]) : lat).with_band(Bd);
      d.accumulate(ref_obj, -1.0);
      out.push_back(block_sample(d, blocks, pts));
    }
    return out;
  };
  const auto samples = parallel_map(static_cast<std::size_t>(cfg.samples), threads, sample);

  const std::size_t nb = static_cast<std::size_t>(blocks.top() + 2);
  std::vector<std::vector<BlockEstimate>> res(cfg.N_list.size(), std::vector<BlockEstimate>(nb));
  std::vector<double> col(samples.size());
  for (std::size_t n = 0; n < cfg.N_list.size(); ++n) {
    std::vector<double> exact(nb, 0.0);
    if (object == BlockObject::u1_diff && rv == Variant::galerkin) {
      SpectralField shape(Bd);
      std::size_t i = 0;
      shape.for_each([&](const Frequency& k, cplx&) {
        const int j = blocks.first(i);
        if (j != -2) {
          const double v = u1_diff_mode_variance(k, cfg.N_list[n], cfg.N_ref);
          exact[static_cast<std::size_t>(j + 1)] += blocks.first_weight(i) * blocks.first_weight(i) * v;
          if (blocks.second_weight(i) != 0.0)
            exact[static_cast<std::size_t>(j + 2)] += blocks.second_weight(i) * blocks.second_weight(i) * v;
        }
        ++i;
      });
    }
    for (std::size_t b = 0; b < nb; ++b) {
      auto& e = res[n][b];
      e.N = cfg.N_list[n];
      e.q = static_cast<int>(b) - 1;
      for (std::size_t r = 0; r < samples.size(); ++r) col[r] = samples[r][n].probes[b];
      auto s = stats::summarize(col);
      e.estimate = s.mean;
      e.stderr_ = s.stderr_;
      for (std::size_t r = 0; r < samples.size(); ++r) col[r] = samples[r][n].point[b];
      s = stats::summarize(col);
      e.point = s.mean;
      e.point_stderr = s.stderr_;
      double tor = 0.0;
      for (std::size_t r = 0; r < samples.size(); ++r) tor += samples[r][n].torus[b];
      e.torus = tor / static_cast<double>(samples.size());
      if (object == BlockObject::u1_diff && rv == Variant::galerkin) e.exact = exact[b];
    }
  }
  return res;
}

/// Single-block form: one estimate per N of cfg.N_list.
inline std::vector<BlockEstimate> mc_block_variance(BlockObject object, int q, double t, const StudyConfig& cfg,
                                                    int threads = 1) {
  require(cfg.samples >= 1, Errc::invalid_parameter, "zero samples");
  const auto all = block_variance_all(object, t, cfg, threads);
  std::vector<BlockEstimate> out;
  for (const auto& per_n : all) {
    require(q >= -1 && q + 1 < static_cast<int>(per_n.size()), Errc::invalid_parameter, "block index out of range");
    out.push_back(per_n[static_cast<std::size_t>(q + 1)]);
  }
  return out;
}

struct BlockDecay {
  std::vector<std::vector<BlockEstimate>> estimates;
  int q_lo = 0, q_hi = 0;               // active blocks
  std::vector<stats::RateFit> q_fits;   // per N: log2 estimate against q
  std::vector<stats::RateFit> eps_fits; // per active q: log estimate against log eps
  std::vector<bool> decreasing;         // per active q: strictly decreasing in N
  bool slopes_ok = false, decreasing_ok = false, eps_rates_positive = false;
};

/// Active blocks run from the first block holding a nonzero frequency to top_block(min N),
/// so every active block sees lattice modes of every cut.
inline BlockDecay block_decay(const StudyConfig& cfg, int threads = 1, double slope_cap = 1.4) {
  BlockDecay r;
  r.estimates = block_variance_all(cfg.object, cfg.block_time, cfg, threads);
  const int nmin = *std::min_element(cfg.N_list.begin(), cfg.N_list.end());
  r.q_lo = -1;
  while (DyadicPartition::weight(r.q_lo, Frequency{1, 0, 0}) == 0.0) ++r.q_lo;
  r.q_hi = DyadicPartition::top_block(nmin);
  r.slopes_ok = true;
  for (const auto& per_n : r.estimates) {
    std::vector<double> x, y;
    for (int q = r.q_lo; q <= r.q_hi; ++q) {
      const double v = per_n[static_cast<std::size_t>(q + 1)].estimate;
      if (v > 0.0) {
        x.push_back(std::ldexp(1.0, q));
        y.push_back(v);
      }
    }
    if (x.size() >= 2) r.q_fits.push_back(stats::rate_fit(x, y));
    else r.q_fits.push_back(stats::RateFit{});
    r.slopes_ok = r.slopes_ok && x.size() >= 2 && r.q_fits.back().slope <= slope_cap;
  }
  r.decreasing_ok = true;
  for (int q = r.q_lo; q <= r.q_hi; ++q) {
    std::vector<double> x, y;
    bool dec = true;
    for (std::size_t n = 0; n < r.estimates.size(); ++n) {
      const double v = r.estimates[n][static_cast<std::size_t>(q + 1)].estimate;
      if (n > 0) dec = dec && v < r.estimates[n - 1][static_cast<std::size_t>(q + 1)].estimate;
      if (v > 0.0) {
        x.push_back(2.0 / (2.0 * cfg.N_list[n] + 1.0));
        y.push_back(v);
      }
    }
    r.eps_fits.push_back(x.size() >= 2 ? stats::rate_fit(x, y) : stats::RateFit{});
    r.eps_rates_positive = (q == r.q_lo || r.eps_rates_positive) && x.size() >= 2 && r.eps_fits.back().slope > 0.0;
    r.decreasing.push_back(dec);
    r.decreasing_ok = r.decreasing_ok && dec;
  }
  return r;
}

inline StudyReport block_variance_study(const StudyConfig& cfg, int threads = 1) {
  const auto r = block_decay(cfg, threads);
  StudyReport rep;
  Table est("block_variance", {"object", "N", "eps", "q", "estimate", "stderr", "point", "point_stderr", "torus_mean",
                               "exact"});
  for (const auto& per_n : r.estimates)
    for (const auto& e : per_n)
      est.row() << to_string(cfg.object) << e.N << 2.0 / (2.0 * e.N + 1.0) << e.q << e.estimate << e.stderr_ << e.point
                << e.point_stderr << e.torus << e.exact;
  Table fits("block_variance_fits", {"kind", "key", "slope", "intercept", "r_squared", "slope_ci95", "verdict"});
  for (std::size_t n = 0; n < r.q_fits.size(); ++n) {
    const auto& f = r.q_fits[n];
    fits.row() << "q_slope" << cfg.N_list[n] << f.slope << f.intercept << f.r_squared << f.slope_ci95
               << (f.slope <= 1.4 ? "ok" : "exceeds_1.4");
  }
  for (std::size_t i = 0; i < r.eps_fits.size(); ++i) {
    const auto& f = r.eps_fits[i];
    fits.row() << "eps_rate" << r.q_lo + static_cast<int>(i) << f.slope << f.intercept << f.r_squared << f.slope_ci95
               << (r.decreasing[i] ? "decreasing_in_N" : "not_decreasing_in_N");
  }
  rep.tables = {est, fits};
  for (std::size_t n = 0; n < r.q_fits.size(); ++n)
    rep.summary.push_back("N = " + std::to_string(cfg.N_list[n]) + ": q-slope over blocks " + std::to_string(r.q_lo) +
                          ".." + std::to_string(r.q_hi) + " = " + fmt("%.3f", r.q_fits[n].slope));
  std::string dec = "strictly decreasing in N per active block:";
  for (bool b : r.decreasing) dec += b ? " yes" : " no";
  rep.summary.push_back(dec);
  rep.passed = r.slopes_ok && r.decreasing_ok;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Enhanced-noise norms and the renormalised resonant product

struct EnhancedSample {
  double u1 = 0.0, wick2 = 0.0, u2 = 0.0;  // Besov norms at the final time
  double resonant = 0.0, resonant_raw = 0.0;
  double wick2_mean = 0.0;
};

/// One replica at cut N: the lattice u1 path on [0, T], dealiased Wick square, u2, K and pi_0(K, w).
inline EnhancedSample enhanced_sample(int N, const NoiseKey& key, double T, double dt, double delta,
                                      const RenormConstants& consts, const Correctors& corr) {
  const NoiseClock clock{dt, 1};
  const auto u1 = simulate_u1(make_grid(N), Variant::lattice, key, T, clock);
  KAccumulator acc(N, dt);
  auto w_prev = wick_square(u1.values[0], consts.C0);
  for (std::size_t i = 1; i < u1.values.size(); ++i) {
    auto w = wick_square(u1.values[i], consts.C0);
    acc.step(w_prev, w);
    w_prev = std::move(w);
  }
  const auto u2 = compute_u2(u1, N, Variant::lattice, consts.C0).values.back();
  const auto part = build_dyadic_partition(N);
  EnhancedSample s;
  s.u1 = holder_norm(u1.values.back(), -0.5 - delta / 2.0, part);
  s.wick2 = holder_norm(w_prev, -1.0 - delta / 2.0, part);
  s.u2 = holder_norm(u2, 0.5 - delta, part);
  auto raw = paraproduct(acc.value(), w_prev, ParaKind::res, part);
  s.resonant_raw = holder_norm(raw, -delta, part);
  raw(0, 0, 0) -= consts.C11 + corr.phi1;
  s.resonant = holder_norm(raw, -delta, part);
  s.wick2_mean = w_prev(0, 0, 0).real();
  return s;
}

struct EnhancedSummary {
  int N = 0;
  double C11 = 0.0, phi1 = 0.0;
  stats::Summary u1, wick2, u2, resonant, resonant_raw, wick2_mean;
};

struct EnhancedNorms {
  std::vector<EnhancedSummary> per_n;
  std::vector<std::vector<EnhancedSample>> samples;
  bool noise_bounded = true;     // medians of u1, wick2, u2 grow < 25% per doubling
  bool resonant_stable = true;   // renormalised median grows < 25%
  bool raw_grows = true;         // raw median grows by >= (C11(N') - C11(N)) / 2
  bool wick_mean_zero = true;    // |mean| <= 3 stderr
};

inline EnhancedNorms enhanced_norms(const StudyConfig& cfg, int threads = 1) {
  cfg.validate();
  EnhancedNorms r;
  const double T = cfg.T;
  for (int N : cfg.N_list) {
    const auto consts = compute_constants(N);
    const auto corr = compute_correctors(T, N, false);
    auto s = parallel_map(static_cast<std::size_t>(cfg.samples), threads, [&](std::size_t i) {
      return enhanced_sample(N, {cfg.seed, static_cast<std::uint32_t>(i)}, T, cfg.dt, cfg.norm_delta, consts, corr);
    });
    EnhancedSummary e;
    e.N = N;
    e.C11 = consts.C11;
    e.phi1 = corr.phi1;
    auto pick = [&](double EnhancedSample::*m) {
      std::vector<double> v;
      for (const auto& x : s) v.push_back(x.*m);
      return stats::summarize(v);
    };
    e.u1 = pick(&EnhancedSample::u1);
    e.wick2 = pick(&EnhancedSample::wick2);
    e.u2 = pick(&EnhancedSample::u2);
    e.resonant = pick(&EnhancedSample::resonant);
    e.resonant_raw = pick(&EnhancedSample::resonant_raw);
    e.wick2_mean = pick(&EnhancedSample::wick2_mean);
    r.wick_mean_zero = r.wick_mean_zero && std::abs(e.wick2_mean.mean) <= 3.0 * e.wick2_mean.stderr_;
    r.per_n.push_back(e);
    r.samples.push_back(std::move(s));
  }
  for (std::size_t i = 1; i < r.per_n.size(); ++i) {
    const auto &a = r.per_n[i - 1], &b = r.per_n[i];
    r.noise_bounded = r.noise_bounded && b.u1.median < 1.25 * a.u1.median && b.wick2.median < 1.25 * a.wick2.median &&
                      b.u2.median < 1.25 * a.u2.median;
    r.resonant_stable = r.resonant_stable && b.resonant.median < 1.25 * a.resonant.median;
    r.raw_grows = r.raw_grows && b.resonant_raw.median - a.resonant_raw.median >= 0.5 * (b.C11 - a.C11);
  }
  return r;
}

inline StudyReport enhanced_norms_study(const StudyConfig& cfg, int threads = 1) {
  const auto r = enhanced_norms(cfg, threads);
  StudyReport rep;
  Table per("enhanced_norms_samples", {"N", "replica", "u1", "wick2", "u2", "resonant", "resonant_raw", "wick2_mean"});
  for (std::size_t n = 0; n < r.samples.size(); ++n)
    for (std::size_t i = 0; i < r.samples[n].size(); ++i) {
      const auto& s = r.samples[n][i];
      per.row() << cfg.N_list[n] << i << s.u1 << s.wick2 << s.u2 << s.resonant << s.resonant_raw << s.wick2_mean;
    }
  Table sum("enhanced_norms_summary", {"N", "quantity", "median", "q1", "q3", "mean", "stderr"});
  for (const auto& e : r.per_n) {
    auto put = [&](const char* name, const stats::Summary& s) {
      sum.row() << e.N << name << s.median << s.q1 << s.q3 << s.mean << s.stderr_;
    };
    put("u1", e.u1);
    put("wick2", e.wick2);
    put("u2", e.u2);
    put("resonant", e.resonant);
    put("resonant_raw", e.resonant_raw);
    put("wick2_mean", e.wick2_mean);
  }
  rep.tables = {per, sum};
  for (const auto& e : r.per_n)
    rep.summary.push_back("N = " + std::to_string(e.N) + ": medians u1 " + fmt("%.4f", e.u1.median) + ", wick2 " +
                          fmt("%.4f", e.wick2.median) + ", u2 " + fmt("%.4f", e.u2.median) + ", resonant " +
                          fmt("%.4f", e.resonant.median) + ", raw resonant " + fmt("%.4f", e.resonant_raw.median) +
                          " (C11 " + fmt("%.4f", e.C11) + ")");
  rep.summary.push_back(std::string("noise norms bounded under doubling: ") + (r.noise_bounded ? "yes" : "no"));
  rep.summary.push_back(std::string("renormalised resonant median stable: ") + (r.resonant_stable ? "yes" : "no"));
  rep.summary.push_back(std::string("raw resonant median tracks C11 growth: ") + (r.raw_grows ? "yes" : "no"));
  rep.summary.push_back(std::string("Wick square mean zero within 3 stderr: ") + (r.wick_mean_zero ? "yes" : "no"));
  rep.passed = r.noise_bounded && r.resonant_stable && r.raw_grows && r.wick_mean_zero;
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Coupled convergence against the reference

inline CoupledConfig coupled_config(const StudyConfig& cfg) {
  CoupledConfig c;
  c.N_list = cfg.N_list;
  c.N_ref = cfg.N_ref;
  c.reference = cfg.reference;
  c.T = cfg.T;
  c.dt = cfg.dt;
  c.substeps = cfg.substeps;
  c.z = cfg.analysis.z;
  c.L = cfg.L;
  c.monitor_every = cfg.monitor_every;
  c.init_band = cfg.init_band;
  c.init_amplitude = cfg.init_amplitude;
  c.renormalize = cfg.renormalize;
  c.working_factor = cfg.working_factor;
  return c;
}

struct ConvergenceRow {
  int N = 0;
  stats::Summary sup_error;
  double blowup_fraction = 0.0;
};

struct Convergence {
  std::vector<CoupledResult> runs;  // by replica
  std::vector<ConvergenceRow> rows; // by N
  bool decreasing = false;
  double max_top_shell = 0.0;
};

inline Convergence convergence(const StudyConfig& cfg, int threads = 1) {
  cfg.validate();
  const auto cc = coupled_config(cfg);
  cc.validate();
  if (cfg.reference == Variant::galerkin)
    for (int N : cfg.N_list)
      require(N < cfg.N_ref || (cfg.N_list.size() == 1 && N == cfg.N_ref), Errc::invalid_parameter,
              "N_ref must exceed every N of the sweep");
  Convergence r;
  r.runs = parallel_map(static_cast<std::size_t>(cfg.samples), threads, [&](std::size_t i) {
    return run_coupled(cc, cfg.seed, static_cast<std::uint32_t>(i));
  });
  for (std::size_t n = 0; n < cfg.N_list.size(); ++n) {
    ConvergenceRow row;
    row.N = cfg.N_list[n];
    std::vector<double> sup;
    int blown = 0;
    for (const auto& run : r.runs) {
      sup.push_back(run.lattice[n].sup_error);
      blown += run.lattice[n].status == SimStatus::blown_up;
    }
    row.sup_error = stats::summarize(sup);
    row.blowup_fraction = static_cast<double>(blown) / static_cast<double>(r.runs.size());
    r.rows.push_back(row);
  }
  for (const auto& run : r.runs) r.max_top_shell = std::max(r.max_top_shell, run.top_shell);
  r.decreasing = r.rows.size() >= 2;
  for (std::size_t n = 1; n < r.rows.size(); ++n)
    r.decreasing = r.decreasing && r.rows[n].sup_error.median < r.rows[n - 1].sup_error.median;
  return r;
}

inline StudyReport convergence_study(const StudyConfig& cfg, int threads = 1) {
  const auto r = convergence(cfg, threads);
  StudyReport rep;
  Table runs("converge_runs", {"replica", "N", "sup_error", "stop_time", "status", "reference_blew_up", "top_shell"});
  for (std::size_t i = 0; i < r.runs.size(); ++i)
    for (const auto& o : r.runs[i].lattice)
      runs.row() << i << o.N << o.sup_error << o.stop_time << to_string(o.status) << o.reference_blew_up
                 << r.runs[i].top_shell;
  Table sum("converge_summary", {"N", "eps", "samples", "median", "q1", "q3", "mean", "stderr", "blowup_fraction"});
  for (const auto& row : r.rows)
    sum.row() << row.N << 2.0 / (2.0 * row.N + 1.0) << cfg.samples << row.sup_error.median << row.sup_error.q1
              << row.sup_error.q3 << row.sup_error.mean << row.sup_error.stderr_ << row.blowup_fraction;
  Table curves("converge_curves", {"replica", "N", "t", "norm", "error"});
  for (std::size_t i = 0; i < r.runs.size(); ++i)
    for (const auto& o : r.runs[i].lattice)
      for (const auto& p : o.curve) curves.row() << i << o.N << p.t << p.norm << p.error;
  rep.tables = {runs, sum, curves};
  for (const auto& row : r.rows)
    rep.summary.push_back("N = " + std::to_string(row.N) + ": median sup error " + fmt("%.5f", row.sup_error.median) +
                          " [" + fmt("%.5f", row.sup_error.q1) + ", " + fmt("%.5f", row.sup_error.q3) +
                          "], blow-up fraction " + fmt("%.3f", row.blowup_fraction));
  rep.summary.push_back(std::string("medians strictly decreasing in N: ") + (r.decreasing ? "yes" : "no"));
  rep.summary.push_back("largest reference top-shell energy fraction: " + fmt("%.3g", r.max_top_shell));
  rep.passed = r.decreasing;
  return rep;
}

/// One coupled run (replica 0): the trajectory table, optionally with final spectra written by the caller.
inline StudyReport simulate_study(const StudyConfig& cfg, CoupledResult* keep = nullptr) {
  cfg.validate();
  auto cc = coupled_config(cfg);
  cc.record_fields = cfg.save_fields;
  auto res = run_coupled(cc, cfg.seed, 0);
  StudyReport rep;
  Table traj("trajectory", {"t", "variant", "N", "norm", "error", "status"});
  for (const auto& p : res.reference_curve)
    traj.row() << p.t << to_string(cfg.reference) << cfg.N_ref << p.norm << p.error << to_string(res.reference_status);
  for (const auto& o : res.lattice)
    for (const auto& p : o.curve) traj.row() << p.t << "lattice" << o.N << p.norm << p.error << to_string(o.status);
  rep.tables = {traj};
  for (const auto& o : res.lattice)
    rep.summary.push_back("N = " + std::to_string(o.N) + ": sup error " + fmt("%.5f", o.sup_error) + ", stop time " +
                          fmt("%.6g", o.stop_time) + ", status " + to_string(o.status));
  rep.summary.push_back(std::string("reference status ") + to_string(res.reference_status) + ", top-shell fraction " +
                        fmt("%.3g", res.top_shell));
  if (keep) *keep = std::move(res);
  return rep;
}

}  // namespace phi43
