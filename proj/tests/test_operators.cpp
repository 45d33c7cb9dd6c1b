#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phi43/operators.hpp"
#include "phi43/paracontrolled.hpp"
#include "phi43/random_field.hpp"
#include "phi43/stats.hpp"

using namespace phi43;

namespace {

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

TEST(SymbolF, ExactValues) {
  EXPECT_NEAR(symbol_f({2.0 / 3.0, 0, 0}), 6.75, 1e-14);
  EXPECT_NEAR(symbol_f({1, 1, 1}), 4.0, 1e-14);
  EXPECT_NEAR(symbol_f({1e-4, 0, 0}), oracle::pi * oracle::pi, 1e-6);
  EXPECT_NEAR(symbol_f({0, 6e-5, 8e-5}), oracle::pi * oracle::pi, 1e-6);
  EXPECT_EQ(code_of([] { symbol_f({0, 0, 0}); }), Errc::invalid_parameter);
  EXPECT_NEAR(lattice_lambda({1, 0, 0}, 1), 6.75, 1e-13);
}

TEST(SymbolF, MinimumOnBall) {
  const double cf = symbol_min_on_ball(1.8);
  EXPECT_GT(cf, 0.0);
  // Along an axis f(1.8 e1) = 4 sin^2(0.9 pi) / 1.8^2, and no direction does better.
  const double axis = 4.0 * std::pow(std::sin(0.9 * oracle::pi), 2) / (1.8 * 1.8);
  EXPECT_NEAR(cf, axis, 1e-6);
}

TEST(Stencil, ConstantsAndCosine) {
  LatticeField c(5);
  for (auto& v : c.storage()) v = 3.25;
  EXPECT_LE(apply_laplacian_stencil(c).max_abs(), 1e-12);

  const auto g = make_grid(1);
  LatticeField y(3);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int l = -1; l <= 1; ++l) y(i, j, l) = std::cos(oracle::pi * g.eps() * i);
  auto d = apply_laplacian_stencil(y);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(d.values()[i], -6.75 * y.values()[i], 1e-10);
}

TEST(Stencil, DiagonalizedByEveryMode) {
  const int N = 4;
  const auto g = make_grid(N);
  double worst = 0.0;
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int c = 0; c <= N; ++c) {
        SpectralField e(N);
        e(a, b, c) += 0.5;
        e(-a, -b, -c) += 0.5;
        auto y = dft_inverse(e, g);
        auto d = apply_laplacian_stencil(y);
        const double lam = lattice_lambda({a, b, c}, N);
        for (std::size_t i = 0; i < y.size(); ++i)
          worst = std::max(worst, std::abs(d.values()[i] + lam * y.values()[i]));
      }
  EXPECT_LE(worst, 1e-10);
}

TEST(Stencil, MatchesSpectralMultiplier) {
  const int N = 6;
  auto f = gaussian_field(N, 21);
  auto y = dft_inverse(f, make_grid(N));
  auto d = apply_laplacian_stencil(y);
  auto spec = apply_multiplier(f, [&](const Frequency& k) { return -lattice_lambda(k, N); });
  auto ref = dft_inverse(spec, make_grid(N));
  EXPECT_LE(oracle::max_diff(d, ref), 1e-10 * ref.max_abs());
}

TEST(Semigroup, Examples) {
  const int N = 1;
  SymbolParams p{N};
  auto f = gaussian_field(N, 2);
  EXPECT_EQ(oracle::max_diff(apply_semigroup(f, 0.0, p), f), 0.0);
  SpectralField e(1);
  e(1, 0, 0) = 1.0;
  EXPECT_NEAR(apply_semigroup(e, 1.0, p)(1, 0, 0).real(), std::exp(-6.75), 1e-16);
  EXPECT_NEAR(std::exp(-6.75), 1.1709e-3, 1e-7);
  SpectralField out(2);
  out(2, 0, 0) = 1.0;
  EXPECT_EQ(apply_semigroup(out, 0.3, p)(2, 0, 0), cplx{});
  EXPECT_EQ(code_of([&] { apply_semigroup(f, -1e-3, p); }), Errc::invalid_parameter);

  SymbolParams heat{N, SymbolVariant::continuum, Cutoff::none, 1.0};
  EXPECT_NEAR(apply_semigroup(out, 0.3, heat)(2, 0, 0).real(), std::exp(-1.2), 1e-15);
  SymbolParams smooth{4, SymbolVariant::lattice, Cutoff::smooth};
  EXPECT_EQ(smooth.cutoff_value({4, 4, 4}), 1.0);
  EXPECT_EQ(smooth.cutoff_value({9, 0, 0}), 0.0);
}

TEST(Semigroup, EulerOfStencilIsSecondOrder) {
  const int N = 3;
  auto f = gaussian_field(N, 31);
  auto y = dft_inverse(f, make_grid(N));
  std::vector<double> errs;
  std::vector<double> ts;
  for (double t : {4e-3, 2e-3, 1e-3, 5e-4}) {
    auto d = apply_laplacian_stencil(y);
    LatticeField euler(y.side());
    for (std::size_t i = 0; i < y.size(); ++i) euler.storage()[i] = y.values()[i] + t * d.values()[i];
    auto exact = dft_inverse(apply_semigroup(f, t, SymbolParams{N}), make_grid(N));
    errs.push_back(oracle::max_diff(euler, exact));
    ts.push_back(t);
  }
  EXPECT_GE(stats::rate_fit(ts, errs).slope, 1.9);
}

TEST(Projections, PN) {
  auto f = gaussian_field(3, 4);
  EXPECT_EQ(oracle::max_diff(project_PN(f, 3), f), 0.0);
  SpectralField s(4);
  s(4, 0, 0) = 1.0;
  EXPECT_EQ(project_PN(s, 3).max_abs(), 0.0);
  auto smooth = gaussian_field(16, 5, 0, 4.0);
  double prev = 1e300;
  for (int N : {2, 4, 8}) {
    const double tail = (smooth - project_PN(smooth, N)).energy();
    EXPECT_LT(tail, prev);
    prev = tail;
  }
}

TEST(Projections, PiN) {
  const int N = 2;
  EXPECT_EQ(project_PiN(gaussian_field(N, 6), N).max_abs(), 0.0);
  SpectralField s(3);
  s(3, 0, 0) = 1.0;
  auto p = project_PiN(s, N);
  EXPECT_EQ(p(-2, 0, 0), cplx(1.0));
  auto u = gaussian_field(3 * N, 7);
  auto q = project_PN(u, N) + project_PiN(u, N);
  EXPECT_LE(oracle::max_diff(q, fold_to_band(u, N)), 1e-12);
  EXPECT_EQ(code_of([] { project_PiN(SpectralField(7), 2); }), Errc::unsupported_band);

  auto v = gaussian_field(N, 8);
  auto once = fold_to_band(v, N);
  EXPECT_EQ(oracle::max_diff(fold_to_band(once, N), once), 0.0);
}

TEST(Modulate, ShiftAndInverse) {
  const int N = 2;
  SpectralField e(N);
  e(1, -1, 2) = 1.0;
  auto m = modulate(e, {1, 0, -1}, N);
  EXPECT_EQ(m(1 - 5, -1, 2 + 5), cplx(1.0));
  EXPECT_EQ(m.energy(), 1.0);

  auto f = gaussian_field(N, 9);
  auto back = modulate(modulate(f, {1, -1, 0}, N), {-1, 1, 0}, N);
  EXPECT_LE(oracle::max_diff(back, f), 0.0);

  // Unimodular multiplier: |e_N u| = |u| pointwise, checked by direct evaluation.
  auto mf = modulate(f, {0, 1, 1}, N);
  for (std::array<double, 3> x : {std::array<double, 3>{0.1, -0.3, 0.7}, {0.9, 0.2, -0.55}}) {
    EXPECT_NEAR(std::abs(oracle::evaluate(mf, x)), std::abs(oracle::evaluate(f, x)), 1e-12);
  }
  EXPECT_EQ(code_of([&] { modulate(f, {0, 0, 0}, N); }), Errc::invalid_parameter);
}

TEST(Covariance, Values) {
  EXPECT_NEAR(covariance_V({1, 0, 0}, 0.0, 1, CovVariant::lattice), 1.0 / 13.5, 1e-15);
  EXPECT_NEAR(covariance_V({1, 0, 0}, 0.0, 1, CovVariant::lattice), 0.0740741, 1e-7);
  EXPECT_DOUBLE_EQ(covariance_V({1, 0, 0}, 0.0, 1, CovVariant::galerkin), 0.5);
  EXPECT_EQ(covariance_V({2, 0, 0}, 0.0, 1, CovVariant::lattice), 0.0);
  EXPECT_EQ(covariance_V({0, 2, 1}, 0.0, 1, CovVariant::galerkin), 0.0);
  EXPECT_NEAR(covariance_V({1, 0, 0}, -0.2, 1, CovVariant::lattice), std::exp(-1.35) / 13.5, 1e-15);
  EXPECT_EQ(code_of([] { covariance_V({0, 0, 0}, 0.0, 1, CovVariant::lattice); }), Errc::invalid_parameter);
}

// (I - P_N) gains N^{-kappa/2} when measured kappa derivatives lower.
TEST(OperatorEstimates, HighPassGain) {
  const double alpha = 0.5, kappa = 0.2;
  std::vector<double> c;
  for (int N : {4, 8, 16}) {
    const auto part = build_dyadic_partition(4 * N);
    double worst = 0.0;
    for (std::uint32_t r = 0; r < 3; ++r) {
      auto u = gaussian_field(4 * N, 50, r, 1.5 + alpha);
      const double ratio = holder_norm(u - project_PN(u, N), alpha - kappa, part) / holder_norm(u, alpha, part);
      worst = std::max(worst, ratio * std::pow(N, kappa / 2));
    }
    c.push_back(worst);
  }
  EXPECT_LE(c[1], 1.25 * c[0]);
  EXPECT_LE(c[2], 1.25 * c[0]);
}

// Lattice semigroup approaches the heat semigroup on a fixed smooth profile.
TEST(OperatorEstimates, SemigroupConvergenceRate) {
  const double kappa = 0.5;
  auto u = gaussian_field(3, 51, 0, 2.0);
  const auto part = build_dyadic_partition(3);
  for (double t : {0.1, 0.2}) {
    std::vector<double> Ns, errs;
    for (int N : {4, 8, 16}) {
      auto lat = apply_semigroup(u, t, SymbolParams{N});
      auto heat = apply_semigroup(u, t, SymbolParams{N, SymbolVariant::continuum, Cutoff::none, kLaplacianScale});
      errs.push_back(holder_norm(lat - heat, 0.0, part));
      Ns.push_back(N);
    }
    EXPECT_GE(-stats::rate_fit(Ns, errs).slope, kappa / 2 - 0.1);
  }
}
