#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

#include "phi43/error.hpp"
#include "phi43/fft.hpp"
#include "phi43/field.hpp"
#include "phi43/lattice_spectral.hpp"
#include "phi43/operators.hpp"
#include "phi43/paracontrolled.hpp"
#include "phi43/random_field.hpp"
#include "phi43/renorm.hpp"
#include "phi43/stochastic.hpp"

namespace phi43 {

enum class SimStatus { running, blown_up, done };

inline const char* to_string(SimStatus s) {
  switch (s) {
    case SimStatus::running: return "running";
    case SimStatus::blown_up: return "blown-up";
    case SimStatus::done: return "done";
  }
  return "unknown";
}

/// Sup norm of the block Delta_j u on a grid oversampled by the given factor.
inline double block_sup(const SpectralField& u, int j, double oversample = 2.0) {
  const auto blk = lp_block(u, j, DyadicPartition{});
  if (blk.max_abs() == 0.0) return 0.0;
  const int M = fft::nice_size(static_cast<int>(std::ceil(oversample * (2 * blk.band() + 1))));
  return fft::synthesize(blk, M).max_abs();
}

/// ||u||_{-z} = sup_j 2^{-jz} ||Delta_j u||_inf.
inline double minus_z_norm(const SpectralField& u, double z) {
  double n = 0.0;
  for (int j = -1; j <= DyadicPartition::top_block(u.band()); ++j)
    n = std::max(n, std::pow(2.0, -j * z) * block_sup(u, j));
  return n;
}

namespace detail {

/// Step tables and scratch buffers. Copies start empty so copied states never share buffers.
struct StepCache {
  double h = -1.0;
  std::vector<double> decay, drift;
  std::vector<unsigned char> top_mask;  // modes above band 2N
  SpectralField F;
  std::unique_ptr<fft::Workspace> work;
  std::unique_ptr<BlockMembership> blocks;
};

struct CacheHandle {
  std::unique_ptr<StepCache> p = std::make_unique<StepCache>();
  CacheHandle() = default;
  CacheHandle(const CacheHandle&) : p(std::make_unique<StepCache>()) {}
  CacheHandle& operator=(const CacheHandle&) {
    p = std::make_unique<StepCache>();
    return *this;
  }
  CacheHandle(CacheHandle&&) noexcept = default;
  CacheHandle& operator=(CacheHandle&&) noexcept = default;
};

}  // namespace detail

/// State of one integrator. For the lattice variant N is the lattice cut and phi has band N;
/// for the galerkin variant N is the noise band and phi has the working band.
struct SimState {
  Variant variant = Variant::lattice;
  int N = 1;
  SpectralField phi;
  double t = 0.0;
  std::uint32_t step = 0;
  RenormConstants consts;
  double mass = 0.0;  // coefficient of the linear drift term
  bool cubic = true;
  double z = 0.6;
  double L = 50.0;
  SimStatus status = SimStatus::running;
  NoiseKey key;
  double anchor_scale = kLaplacianScale;
  double top_shell = 0.0;  // largest relative energy seen above band 2N (galerkin only)
  detail::CacheHandle cache;

  int band() const noexcept { return phi.band(); }

  double rate(const Frequency& k) const {
    return variant == Variant::lattice ? lattice_lambda(k, N) : continuum_lambda(k, anchor_scale);
  }
};

struct SimOptions {
  double z = 0.6;
  double L = 50.0;
  bool cubic = true;
  bool renormalize = true;       // false drops the mass term
  int working_factor = 3;        // galerkin working band = factor * N
  double anchor_scale = kLaplacianScale;
};

/// Constants of the reference equation only (C0_bar, C11_bar with C1_bar = C11_bar).
inline RenormConstants reference_constants(int N, double scale = kLaplacianScale) {
  RenormConstants rc;
  rc.N = N;
  rc.eps = 2.0 / (2.0 * N + 1.0);
  rc.continuum_scale = scale;
  rc.C0_bar = compute_C0(N, CovVariant::galerkin, scale);
  rc.C11_bar = compute_C11(N, CovVariant::galerkin, scale);
  return rc;
}

inline SimState make_lattice_state(int N, const SpectralField& phi0, const NoiseKey& key,
                                   const SimOptions& opt, const RenormConstants* consts = nullptr) {
  require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
  require(phi0.band() <= N, Errc::invalid_parameter, "initial data band exceeds N");
  require_hermitian(phi0);
  SimState s;
  s.variant = Variant::lattice;
  s.N = N;
  s.phi = phi0.with_band(N);
  s.phi(0, 0, 0) = 0.0;
  s.consts = consts ? *consts : compute_constants(N, opt.anchor_scale);
  s.mass = opt.renormalize ? s.consts.mass_shift : 0.0;
  s.cubic = opt.cubic;
  s.z = opt.z;
  s.L = opt.L;
  s.key = key;
  s.anchor_scale = opt.anchor_scale;
  return s;
}

inline SimState make_galerkin_state(int N, const SpectralField& phi0, const NoiseKey& key,
                                    const SimOptions& opt, const RenormConstants* consts = nullptr) {
  require(N >= 1 && opt.working_factor >= 1, Errc::invalid_parameter, "need N >= 1 and a working factor >= 1");
  const int B = opt.working_factor * N;
  require(phi0.band() <= B, Errc::invalid_parameter, "initial data band exceeds the working band");
  require_hermitian(phi0);
  SimState s;
  s.variant = Variant::galerkin;
  s.N = N;
  s.phi = phi0.with_band(B);
  s.phi(0, 0, 0) = 0.0;
  s.consts = consts ? *consts : reference_constants(N, opt.anchor_scale);
  s.mass = opt.renormalize ? s.consts.mass_shift_bar() : 0.0;
  s.cubic = opt.cubic;
  s.z = opt.z;
  s.L = opt.L;
  s.key = key;
  s.anchor_scale = opt.anchor_scale;
  return s;
}

/// Exact stochastic-convolution increment of step s.step in field coefficients, band N.
/// Both variants read the same normals; the galerkin increment is the anchor of the coupled pair.
inline SpectralField draw_noise(const SimState& s, const NoiseClock& clock) {
  SpectralField xi(s.N);
  const NoiseRates r{s.N, s.anchor_scale};
  const bool anchor = s.variant == Variant::galerkin;
  for_each_orbit(s.N, [&](const Frequency& k) {
    const double rate = anchor ? r.anchor(k) : r.lattice(k);
    const cplx v = kModeToCoeff * mode_increment(s.key, k, rate, r.anchor(k), anchor, clock, s.step);
    xi[k] = v;
    xi[-k] = std::conj(v);
  });
  return xi;
}

namespace detail {

inline StepCache& prepare(SimState& s, double h) {
  auto& c = *s.cache.p;
  if (c.h != h || c.decay.size() != s.phi.size()) {
    c.h = h;
    c.decay.resize(s.phi.size());
    c.drift.resize(s.phi.size());
    c.top_mask.resize(s.phi.size());
    std::size_t i = 0;
    s.phi.for_each([&](const Frequency& k, cplx&) {
      const double l = s.rate(k);
      c.decay[i] = std::exp(-l * h);
      c.drift[i] = h * std::exp(-0.5 * l * h);
      c.top_mask[i] = norm_inf(k) > 2 * s.N;
      ++i;
    });
  }
  if (!c.blocks || c.blocks->band() != s.band()) c.blocks = std::make_unique<BlockMembership>(s.band());
  return c;
}

/// Cube of phi projected to its own band: aliased on the 2N+1 lattice (lattice) or dealiased (galerkin).
/// Writes the cube into c.F.
inline void cube(SimState& s, StepCache& c) {
  const int M = s.variant == Variant::lattice ? 2 * s.N + 1 : fft::nice_size(4 * s.band() + 1);
  if (!c.work || c.work->side() != M) c.work = std::make_unique<fft::Workspace>(M);
  c.work->synthesize(s.phi);
  for (auto& v : c.work->samples().storage()) v = v * v * v;
  c.work->analyze(c.F);
  c.F(0, 0, 0) = 0.0;
}

inline void check_blowup(SimState& s, StepCache& c) {
  const auto bounds = c.blocks->l1_bounds(s.phi);
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const int j = static_cast<int>(i) - 1;
    const double w = std::pow(2.0, -j * s.z);
    if (w * bounds[i] < s.L) continue;
    if (w * block_sup(s.phi, j) >= s.L) {
      s.status = SimStatus::blown_up;
      return;
    }
  }
}

inline void exponential_euler(SimState& s, double h, const SpectralField& noise, Variant expected) {
  require(s.variant == expected, Errc::invalid_parameter, "stepper does not match the state variant");
  require(h > 0.0, Errc::invalid_parameter, "step must be > 0");
  require(s.status == SimStatus::running, Errc::invalid_parameter, "state is not running");
  require(noise.band() <= s.band(), Errc::invalid_parameter, "noise band exceeds state band");
  auto& c = prepare(s, h);
  if (c.F.band() != s.band() || c.F.size() != s.phi.size()) c.F = SpectralField(s.band());
  if (s.cubic) cube(s, c);
  auto p = s.phi.coeffs();
  const auto f = c.F.coeffs();
  if (s.cubic) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = c.decay[i] * p[i] + c.drift[i] * (s.mass * p[i] - f[i]);
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = c.decay[i] * p[i] + c.drift[i] * s.mass * p[i];
  }
  noise.for_each([&](const Frequency& k, const cplx& x) { s.phi[k] += x; });
  s.phi(0, 0, 0) = 0.0;
  s.t += h;
  ++s.step;
  require(s.phi.all_finite(), Errc::invalid_data, "non-finite state after step");
  if (s.variant == Variant::galerkin) {
    double top = 0.0, e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = std::norm(p[i]);
      e += v;
      if (c.top_mask[i]) top += v;
    }
    if (e > 0.0) s.top_shell = std::max(s.top_shell, top / e);
  }
  check_blowup(s, c);
}

}  // namespace detail

/// phi <- e^{-lambda h} phi + noise + h e^{-lambda h/2} F, F = -Q_N[phi^3] + mass phi.
inline void step_lattice_phi(SimState& s, double h, const SpectralField& noise) {
  detail::exponential_euler(s, h, noise, Variant::lattice);
}

/// Same scheme with the heat symbol and the dealiased, truncated cube.
inline void step_galerkin_phi(SimState& s, double h, const SpectralField& noise) {
  detail::exponential_euler(s, h, noise, Variant::galerkin);
}

/// Draws the step's noise and advances by clock.step().
inline void advance(SimState& s, const NoiseClock& clock) {
  const auto xi = draw_noise(s, clock);
  if (s.variant == Variant::lattice) step_lattice_phi(s, clock.step(), xi);
  else step_galerkin_phi(s, clock.step(), xi);
}

/// Runs to time T (or blow-up), recording phi after every step.
inline FieldPath simulate_phi(SimState s, double T, const NoiseClock& clock) {
  const double dt = clock.step();
  require(dt > 0.0 && T >= 0.0, Errc::invalid_parameter, "need dt > 0 and T >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  FieldPath p{s.t, dt, {s.phi}};
  for (std::size_t m = 0; m < steps && s.status == SimStatus::running; ++m) {
    advance(s, clock);
    p.values.push_back(s.phi);
  }
  return p;
}

/// Default initial data: a band-b Gaussian draw from the initial-data stream.
inline SpectralField initial_field(int band, std::uint64_t seed, std::uint32_t replica, double amplitude) {
  auto f = gaussian_field(band, seed, replica, 0.0, rng::Stream::initial);
  f *= amplitude;
  return f;
}

struct CoupledConfig {
  std::vector<int> N_list{4};
  int N_ref = 16;
  Variant reference = Variant::galerkin;
  double T = 0.1;
  double dt = 2e-4;
  int substeps = 1;        // fine noise steps per integrator step
  double z = 0.6;
  double L = 50.0;
  int monitor_every = 25;  // error-curve cadence in steps
  int init_band = 2;
  double init_amplitude = 0.25;
  bool renormalize = true;
  int working_factor = 3;
  bool record_fields = false;  // keep the final fields in the result

  void validate() const {
    require(!N_list.empty(), Errc::invalid_parameter, "N_list must be nonempty");
    for (int N : N_list) require(N >= 1, Errc::invalid_parameter, "N must be >= 1");
    require(N_ref >= 1, Errc::invalid_parameter, "N_ref must be >= 1");
    if (reference == Variant::lattice)
      for (int N : N_list) require(N <= N_ref, Errc::invalid_parameter, "lattice reference needs N <= N_ref");
    require(dt > 0.0 && T > 0.0 && dt <= T, Errc::invalid_parameter, "need 0 < dt <= T");
    const double steps = T / dt;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * steps, Errc::invalid_parameter,
            "T must be a multiple of dt");
    require(substeps >= 1 && monitor_every >= 1, Errc::invalid_parameter, "substeps and monitor_every must be >= 1");
    require(z > 0.0 && L > 0.0, Errc::invalid_parameter, "need z > 0 and L > 0");
    require(init_band >= 0 && init_amplitude >= 0.0, Errc::invalid_parameter, "bad initial data parameters");
    require(working_factor >= 1, Errc::invalid_parameter, "working factor must be >= 1");
  }
};

struct TrajectoryPoint {
  double t = 0.0;
  double norm = 0.0;   // ||phi||_{-z}
  double error = 0.0;  // ||Ext phi - phi_ref||_{-z}; zero for the reference itself
};

struct LatticeOutcome {
  int N = 0;
  std::vector<TrajectoryPoint> curve;
  double stop_time = 0.0;
  SimStatus status = SimStatus::running;
  bool reference_blew_up = false;
  double sup_error = 0.0;
  SpectralField final_field{0};  // set when record_fields
};

struct CoupledResult {
  std::vector<TrajectoryPoint> reference_curve;
  SimStatus reference_status = SimStatus::running;
  double reference_stop = 0.0;
  double top_shell = 0.0;
  std::vector<LatticeOutcome> lattice;
  SpectralField reference_field{0};
};

namespace detail {

/// Block sups of the reference, computed on demand and reused by every lattice cut.
class ReferenceBlocks {
 public:
  explicit ReferenceBlocks(const SpectralField& ref) : ref_(ref), sup_(DyadicPartition::top_block(ref.band()) + 2, -1.0) {}

  double operator()(int j) {
    auto& v = sup_[static_cast<std::size_t>(j + 1)];
    if (v < 0.0) v = block_sup(ref_, j);
    return v;
  }

  int top() const { return static_cast<int>(sup_.size()) - 2; }

  double norm(double z) {
    double n = 0.0;
    for (int j = -1; j <= top(); ++j) n = std::max(n, std::pow(2.0, -j * z) * (*this)(j));
    return n;
  }

 private:
  const SpectralField& ref_;
  std::vector<double> sup_;
};

/// ||phi - ref||_{-z}; blocks above the lattice band only see the reference.
inline double coupled_error(const SpectralField& phi, ReferenceBlocks& refb, const SpectralField& ref, double z) {
  const int top_lat = DyadicPartition::top_block(phi.band());
  const int top = std::max(refb.top(), top_lat);
  const int B = std::max(phi.band(), ref.band());
  double n = 0.0;
  for (int j = -1; j <= top; ++j) {
    double s;
    if (j > top_lat) {
      s = j <= refb.top() ? refb(j) : 0.0;
    } else {
      SpectralField d(DyadicPartition::block_band(j, B));
      d.for_each([&](const Frequency& k, cplx& c) { c = phi.at(k) - ref.at(k); });
      s = block_sup(d, j);
    }
    n = std::max(n, std::pow(2.0, -j * z) * s);
  }
  return n;
}

}  // namespace detail

/// Integrates the reference and every lattice cut of the config in lockstep on one noise key.
/// Each lattice run stops at its own blow-up or at the reference's; errors are sampled every
/// monitor_every steps and at each stopping step.
inline CoupledResult run_coupled(const CoupledConfig& cfg, std::uint64_t seed, std::uint32_t replica = 0) {
  cfg.validate();
  const NoiseKey key{seed, replica};
  int nmin = cfg.N_list.front();
  for (int N : cfg.N_list) nmin = std::min(nmin, N);
  const int b0 = std::min({cfg.init_band, nmin, cfg.N_ref});
  const auto phi0 = initial_field(b0, seed, replica, cfg.init_amplitude);

  SimOptions opt;
  opt.z = cfg.z;
  opt.L = cfg.L;
  opt.renormalize = cfg.renormalize;
  opt.working_factor = cfg.working_factor;
  SimState ref = cfg.reference == Variant::galerkin ? make_galerkin_state(cfg.N_ref, phi0, key, opt)
                                                    : make_lattice_state(cfg.N_ref, phi0, key, opt);
  std::vector<SimState> lat;
  for (int N : cfg.N_list) lat.push_back(make_lattice_state(N, phi0, key, opt));

  const NoiseClock clock{cfg.dt / cfg.substeps, cfg.substeps};
  const auto steps = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
  CoupledResult res;
  res.lattice.resize(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) res.lattice[i].N = cfg.N_list[i];

  auto record = [&](bool all, const std::vector<bool>& just_stopped) {
    detail::ReferenceBlocks rb(ref.phi);
    if (all) res.reference_curve.push_back({ref.t, rb.norm(cfg.z), 0.0});
    for (std::size_t i = 0; i < lat.size(); ++i) {
      auto& out = res.lattice[i];
      const bool live = out.status == SimStatus::running;
      if (!(all && live) && !just_stopped[i]) continue;
      const TrajectoryPoint p{lat[i].t, minus_z_norm(lat[i].phi, cfg.z),
                              detail::coupled_error(lat[i].phi, rb, ref.phi, cfg.z)};
      out.curve.push_back(p);
      out.sup_error = std::max(out.sup_error, p.error);
    }
  };

  record(true, std::vector<bool>(lat.size(), false));
  for (std::size_t m = 1; m <= steps; ++m) {
    advance(ref, clock);
    std::vector<bool> stopped(lat.size(), false);
    bool any_live = false;
    for (std::size_t i = 0; i < lat.size(); ++i) {
      auto& out = res.lattice[i];
      if (out.status != SimStatus::running) continue;
      advance(lat[i], clock);
      if (lat[i].status == SimStatus::blown_up || ref.status == SimStatus::blown_up) {
        out.status = SimStatus::blown_up;
        out.reference_blew_up = ref.status == SimStatus::blown_up;
        out.stop_time = lat[i].t;
        stopped[i] = true;
      } else {
        any_live = true;
      }
    }
    const bool last = m == steps || ref.status == SimStatus::blown_up || !any_live;
    const bool monitor = m % static_cast<std::size_t>(cfg.monitor_every) == 0 || last;
    if (monitor || std::find(stopped.begin(), stopped.end(), true) != stopped.end()) record(monitor, stopped);
    if (last) break;
  }
  res.reference_status = ref.status == SimStatus::blown_up ? SimStatus::blown_up : SimStatus::done;
  res.reference_stop = ref.t;
  res.top_shell = ref.top_shell;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    auto& out = res.lattice[i];
    if (out.status == SimStatus::running) {
      out.status = SimStatus::done;
      out.stop_time = lat[i].t;
    }
    if (cfg.record_fields) out.final_field = lat[i].phi;
  }
  if (cfg.record_fields) res.reference_field = ref.phi;
  return res;
}

/// u3 = Ext phi - u1 - u2 along a shared time grid, with C^gamma norms.
struct RemainderPath {
  FieldPath u3;
  std::vector<double> norms;
};

inline RemainderPath decompose_remainder(const FieldPath& phi, const FieldPath& u1, const FieldPath& u2,
                                         double gamma) {
  const auto n = phi.values.size();
  require(n == u1.values.size() && n == u2.values.size(), Errc::invalid_parameter, "paths differ in length");
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
  require(same(phi.t0, u1.t0) && same(phi.t0, u2.t0) && same(phi.dt, u1.dt) && same(phi.dt, u2.dt),
          Errc::invalid_parameter, "paths are sampled at different times");
  RemainderPath r;
  r.u3 = FieldPath{phi.t0, phi.dt, {}};
  for (std::size_t m = 0; m < n; ++m) {
    const int B = std::max({phi.values[m].band(), u1.values[m].band(), u2.values[m].band()});
    auto v = phi.values[m].with_band(B);
    v.accumulate(u1.values[m], -1.0);
    v.accumulate(u2.values[m], -1.0);
    r.norms.push_back(B > 0 ? holder_norm(v, gamma, build_dyadic_partition(B)) : v.max_abs());
    r.u3.values.push_back(std::move(v));
  }
  return r;
}

}  // namespace phi43
