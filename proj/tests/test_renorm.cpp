#include <gtest/gtest.h>

#include <cmath>

#include "phi43/renorm.hpp"

using namespace phi43;

TEST(C0, ClosedForms) {
  EXPECT_NEAR(compute_C0(1), 11.0 / 81.0, 1e-14);
  EXPECT_NEAR(compute_C0(1, CovVariant::galerkin), 11.0 / 12.0, 1e-14);
  EXPECT_NEAR(compute_C0(1, CovVariant::galerkin, kLaplacianScale), 11.0 / 12.0 / kLaplacianScale, 1e-14);
  EXPECT_THROW(compute_C0(0), Error);
}

TEST(C0, InverseEpsScaling) {
  std::vector<double> v;
  for (int N : {4, 8, 16, 32}) v.push_back(compute_C0(N) * 2.0 / (2.0 * N + 1.0));
  for (std::size_t i = 1; i < v.size(); ++i) {
    EXPECT_GE(v[i] / v[i - 1], 0.85);
    EXPECT_LE(v[i] / v[i - 1], 1.15);
  }
}

TEST(PairSums, FastMatchesDirect) {
  for (int N : {1, 2}) {
    const auto d = pair_sum_direct(N, {}, 0.0, PairLookup::folded);
    const auto f = pair_sum_fft(N, {}, 0.0, PairLookup::folded);
    const double tol = N == 1 ? 1e-8 : 1e-7;
    for (int i = 0; i < 27; ++i) {
      ASSERT_GT(d.folded[i], 0.0) << "slot " << i;
      EXPECT_NEAR(f.folded[i], d.folded[i], tol * d.folded[i]) << "N=" << N << " slot " << i;
    }
    const auto du = pair_sum_direct(N, {CovVariant::galerkin, 1.0}, 0.0, PairLookup::unrestricted);
    const auto fu = pair_sum_fft(N, {CovVariant::galerkin, 1.0}, 0.0, PairLookup::unrestricted);
    EXPECT_NEAR(fu.unrestricted, du.unrestricted, 1e-8 * du.unrestricted);
    for (double t : {0.01, 0.3}) {
      const auto dt = pair_sum_direct(N, {}, t, PairLookup::folded);
      const auto ft = pair_sum_fft(N, {}, t, PairLookup::folded);
      for (int i = 0; i < 27; ++i) EXPECT_NEAR(ft.folded[i], dt.folded[i], 1e-8 * dt.folded[13]);
    }
  }
}

TEST(C12, SymmetricUnderReflection) {
  const auto c = compute_constants(3);
  for (const auto& t : alias_triples()) {
    const AliasTriple m{-t[0], -t[1], -t[2]};
    EXPECT_NEAR(c.C12_at(t), c.C12_at(m), 1e-12 * c.C12_at(t));
  }
  EXPECT_THROW(compute_C12(2, {0, 0, 0}), Error);
  EXPECT_NEAR(c.C1, c.C11 + [&] {
    double s = 0.0;
    for (double v : c.C12) s += v;
    return s;
  }(), 1e-15);
  EXPECT_NEAR(c.mass_shift, 3.0 * c.C0 - 9.0 * c.C1, 1e-14);
}

TEST(PairSums, RefinementSelfConsistent) {
  PairQuadrature coarse;
  coarse.tol = 1e-6;
  PairQuadrature fine;
  fine.tol = 1e-11;
  for (int N : {4, 8}) {
    const auto a = pair_sum_fft(N, {}, 0.0, PairLookup::folded, coarse);
    const auto b = pair_sum_fft(N, {}, 0.0, PairLookup::folded, fine);
    for (int i = 0; i < 27; ++i) EXPECT_NEAR(a.folded[i], b.folded[i], 1e-6 * b.folded[i]);
  }
}

TEST(PairSums, FailsLoudlyWithoutLevels) {
  PairQuadrature q;
  q.max_levels = 0;
  try {
    pair_sum_fft(2, {}, 0.0, PairLookup::folded, q);
    FAIL() << "expected quadrature failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::quadrature_failure);
  }
}

TEST(Correctors, TailBehaviour) {
  const int N = 4;
  const double C11 = compute_C11(N);
  // Integrand mass within time t of the origin is O(t lambda_max) of the total.
  const auto early = compute_correctors(0.01, N, false);
  const auto late = compute_correctors(1.0, N, false);
  EXPECT_LT(std::abs(late.phi1), std::abs(early.phi1));
  for (double t : {1e-4, 0.01, 0.1, 1.0}) {
    const auto c = compute_correctors(t, N, false);
    EXPECT_LT(c.phi1, 0.0);
    EXPECT_GE(c.phi1 + C11, 0.0);
    for (double v : c.phi2) EXPECT_LE(v, 1e-15 * C11);
  }
  const double a = compute_correctors(1e-4, N, false).phi1 + C11;
  const double b = compute_correctors(1e-5, N, false).phi1 + C11;
  EXPECT_NEAR(a / b, 10.0, 1.0);
  EXPECT_LE(compute_correctors(1e-6, N, false).phi1 + C11, 1e-3 * C11);
  EXPECT_THROW(compute_correctors(0.0, N), Error);
}

TEST(Correctors, ContinuumLimit) {
  const double t = 0.1, rho = 0.1;
  std::vector<double> gaps;
  const double limit = continuum_phi1(t, kLaplacianScale);
  EXPECT_LT(limit, 0.0);
  for (int N : {4, 8, 16}) {
    const auto c = compute_correctors(t, N, false);
    gaps.push_back(std::pow(t, rho) * std::abs(c.phi1 - limit));
  }
  EXPECT_LT(gaps[1], gaps[0]);
  EXPECT_LT(gaps[2], gaps[1]);
}
