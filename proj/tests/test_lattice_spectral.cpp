#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "phi43/field_io.hpp"
#include "phi43/lattice_spectral.hpp"
#include "phi43/random_field.hpp"

using namespace phi43;

namespace {

LatticeField random_lattice(int side, std::uint64_t seed) {
  rng::NormalStream z(seed, rng::Stream::test);
  LatticeField v(side);
  for (auto& x : v.storage()) x = z();
  return v;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::io_failure;
}

}  // namespace

TEST(MakeGrid, SmallCuts) {
  auto g = make_grid(1);
  EXPECT_EQ(g.side(), 3);
  EXPECT_DOUBLE_EQ(g.eps(), 2.0 / 3.0);
  auto g8 = make_grid(8);
  EXPECT_EQ(g8.side(), 17);
  EXPECT_DOUBLE_EQ(g8.eps(), 2.0 / 17.0);
  EXPECT_DOUBLE_EQ(g8.eps() * g8.side(), 2.0);
}

TEST(MakeGrid, RejectsNonPositive) {
  EXPECT_EQ(code_of([] { make_grid(0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { make_grid(-3); }), Errc::invalid_parameter);
}

TEST(DftForward, ZeroField) {
  auto s = dft_forward(LatticeField(5));
  EXPECT_EQ(s.band(), 2);
  EXPECT_EQ(s.max_abs(), 0.0);
}

TEST(DftForward, CosineModeN1) {
  const auto g = make_grid(1);
  LatticeField Y(g.side());
  for (int m1 = -1; m1 <= 1; ++m1)
    for (int m2 = -1; m2 <= 1; ++m2)
      for (int m3 = -1; m3 <= 1; ++m3) Y(m1, m2, m3) = std::cos(oracle::pi * g.eps() * m1);
  auto s = dft_forward(Y);
  s.for_each([&](const Frequency& k, const cplx& c) {
    const bool hit = (k == Frequency{1, 0, 0}) || (k == Frequency{-1, 0, 0});
    EXPECT_NEAR(std::abs(s.hat(k) - cplx(hit ? 4.0 : 0.0)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(s.hat(k) - oracle::dft_value(Y, k)), 0.0, 1e-13);
    (void)c;
  });
}

TEST(DftForward, MatchesBruteForceAndReportsMean) {
  for (int N : {1, 2, 3}) {
    auto Y = random_lattice(2 * N + 1, 11 + N);
    double mean = 0.0;
    auto s = dft_forward(Y, &mean);
    EXPECT_NEAR(8.0 * mean, oracle::dft_value(Y, {0, 0, 0}).real(), 1e-12);
    EXPECT_NEAR(mean, Y.mean(), 1e-13);
    EXPECT_EQ(s(0, 0, 0), cplx{});
    EXPECT_TRUE(s.is_hermitian());
    s.for_each([&](const Frequency& k, const cplx&) {
      if (is_zero(k)) return;
      EXPECT_NEAR(std::abs(s.hat(k) - oracle::dft_value(Y, k)), 0.0, 1e-12);
    });
  }
}

TEST(DftForward, RejectsNonFinite) {
  LatticeField Y(3);
  Y(0, 1, 2) = std::nan("");
  EXPECT_EQ(code_of([&] { dft_forward(Y); }), Errc::invalid_data);
  EXPECT_EQ(code_of([] { dft_forward(LatticeField(4)); }), Errc::invalid_parameter);
}

TEST(DftRoundTrip, RandomFields) {
  for (int N : {1, 2, 4, 8, 16}) {
    auto Y = random_lattice(2 * N + 1, 100 + N);
    double mean = 0.0;
    auto s = dft_forward(Y, &mean);
    auto back = dft_inverse(s, make_grid(N));
    double err = 0.0;
    for (std::size_t i = 0; i < Y.size(); ++i)
      err = std::max(err, std::abs(back.values()[i] + mean - Y.values()[i]));
    EXPECT_LE(err, 1e-12) << "N=" << N;
  }
}

TEST(DftInverse, ZeroAndSinglePair) {
  const auto g = make_grid(1);
  EXPECT_EQ(dft_inverse(SpectralField(1), g).max_abs(), 0.0);
  SpectralField s(1);
  s(1, 0, 0) = 4.0 / 8.0;
  s(-1, 0, 0) = 4.0 / 8.0;
  auto Y = dft_inverse(s, g);
  for (int m1 = -1; m1 <= 1; ++m1)
    for (int m2 = -1; m2 <= 1; ++m2)
      for (int m3 = -1; m3 <= 1; ++m3)
        EXPECT_NEAR(Y(m1, m2, m3), std::cos(oracle::pi * g.eps() * m1), 1e-14);
}

TEST(DftInverse, BrokenSymmetry) {
  SpectralField s(1);
  s(1, 0, 0) = 1.0;
  EXPECT_EQ(code_of([&] { dft_inverse(s, make_grid(1)); }), Errc::symmetry_violation);
  EXPECT_EQ(code_of([&] { dft_inverse(SpectralField(3), make_grid(2)); }), Errc::invalid_parameter);
}

TEST(Parseval, RelativeError) {
  for (int N : {1, 2, 4, 8, 16}) {
    auto Y = random_lattice(2 * N + 1, 300 + N);
    const double eps = 2.0 / (2 * N + 1);
    double mean = 0.0;
    auto s = dft_forward(Y, &mean);
    double lhs = 0.0;
    for (double v : Y.values()) lhs += eps * eps * eps * (v - mean) * (v - mean);
    double rhs = 0.0;
    s.for_each([&](const Frequency& k, const cplx&) { rhs += std::norm(s.hat(k)) / 8.0; });
    EXPECT_LE(std::abs(lhs - rhs) / lhs, 1e-10) << "N=" << N;
  }
}

TEST(ExtSample, NativeGridEqualsInverse) {
  auto f = gaussian_field(3, 5);
  auto a = ext_sample(f, 7);
  auto b = dft_inverse(f, make_grid(3));
  EXPECT_LE(oracle::max_diff(a, b), 1e-14);
}

TEST(ExtSample, InterpolatesOnSublattice) {
  auto f = gaussian_field(1, 6);
  auto fine = ext_sample(f, 9);
  auto coarse = dft_inverse(f, make_grid(1));
  double err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) err = std::max(err, std::abs(fine(3 * i, 3 * j, 3 * l) - coarse(i, j, l)));
  EXPECT_LE(err, 1e-12);
}

TEST(ExtSample, ReproducesExponentials) {
  const int N = 3;
  for (Frequency k : {Frequency{1, 0, 0}, Frequency{2, -3, 1}, Frequency{3, 3, 3}}) {
    SpectralField f(N);
    f[k] = 0.5;
    f[-k] = 0.5;
    for (int M : {7, 10, 16}) {
      auto v = ext_sample(f, M);
      double err = 0.0;
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
          for (int l = 0; l < M; ++l) {
            const double x = oracle::pi * 2.0 * (k[0] * i + k[1] * j + k[2] * l) / M;
            err = std::max(err, std::abs(v(i, j, l) - std::cos(x)));
          }
      EXPECT_LE(err, 1e-13);
    }
  }
}

TEST(ExtSample, RejectsAliasingGrid) {
  EXPECT_EQ(code_of([] { ext_sample(SpectralField(3), 6); }), Errc::invalid_parameter);
}

TEST(FoldToBand, InBandIsIdentityAndShift) {
  auto f = gaussian_field(2, 8);
  EXPECT_EQ(oracle::max_diff(fold_to_band(f, 2), f), 0.0);
  SpectralField s(3);
  s(3, 0, 0) = 1.0;
  auto folded = fold_to_band(s, 2);
  EXPECT_EQ(folded(-2, 0, 0), cplx(1.0));
  EXPECT_EQ(folded.energy(), 1.0);
  EXPECT_EQ(code_of([] { fold_to_band(SpectralField(7), 2); }), Errc::unsupported_band);
}

TEST(FoldToBand, EqualsLatticeRestriction) {
  for (int N : {1, 2, 3}) {
    auto u = gaussian_field(3 * N, 40 + N);
    auto samples = oracle::sample(u, 2 * N + 1);
    auto folded = fold_to_band(u, N);
    folded.for_each([&](const Frequency& k, const cplx& c) {
      EXPECT_NEAR(std::abs(8.0 * c - oracle::dft_value(samples, k)), 0.0, 1e-10) << "N=" << N;
    });
  }
}

TEST(FoldToBand, LatticeCubeIsFoldedSpectralCube) {
  for (int N : {1, 2, 3}) {
    auto v = gaussian_field(N, 60 + N);
    auto Y = dft_inverse(v, make_grid(N));
    for (auto& y : Y.storage()) y = y * y * y;
    double mean = 0.0;
    auto lattice = dft_forward(Y, &mean);
    auto cube = oracle::convolve(oracle::convolve(v, v), v);
    auto folded = fold_to_band(cube, N);
    EXPECT_NEAR(mean, folded(0, 0, 0).real(), 1e-10);
    folded(0, 0, 0) = 0.0;
    EXPECT_LE(oracle::max_diff(lattice, folded), 1e-10) << "N=" << N;
  }
}

TEST(HermitianProject, Examples) {
  auto f = gaussian_field(2, 9);
  EXPECT_LE(oracle::max_diff(hermitian_project(f), f), 1e-15);
  SpectralField s(1);
  s(1, 0, 0) = 1.0;
  auto p = hermitian_project(s);
  EXPECT_EQ(p(1, 0, 0), cplx(0.5));
  EXPECT_EQ(p(-1, 0, 0), cplx(0.5));

  SpectralField r(2);
  rng::NormalStream z(3, rng::Stream::test);
  for (auto& c : r.coeffs()) c = {z(), z()};
  auto once = hermitian_project(r);
  auto twice = hermitian_project(once);
  EXPECT_EQ(oracle::max_diff(once, twice), 0.0);
  EXPECT_EQ(once(0, 0, 0), cplx{});
  auto Y = dft_inverse(once, make_grid(2));
  EXPECT_TRUE(Y.all_finite());
}

TEST(FieldIo, RoundTrip) {
  auto f = gaussian_field(3, 10);
  std::stringstream ss;
  io::write_spectral(ss, f, 3);
  int N = 0;
  auto g = io::read_spectral(ss, &N);
  EXPECT_EQ(N, 3);
  EXPECT_EQ(oracle::max_diff(f, g), 0.0);

  auto v = ext_sample(f, 8);
  std::stringstream sl;
  io::write_lattice(sl, v);
  auto w = io::read_lattice(sl);
  EXPECT_EQ(oracle::max_diff(v, w), 0.0);

  std::stringstream bad("NOTAFILE........");
  EXPECT_EQ(code_of([&] { io::read_spectral(bad); }), Errc::io_failure);
  std::stringstream wrong;
  io::write_lattice(wrong, v);
  EXPECT_EQ(code_of([&] { io::read_spectral(wrong); }), Errc::io_failure);
}
