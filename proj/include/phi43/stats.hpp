#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "phi43/error.hpp"

namespace phi43::stats {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double slope_stderr = 0.0;
  /// Half-width of the 95% confidence interval of the slope (t-distribution, n-2 dof).
  double slope_ci95 = 0.0;
};

/// Least squares of log y on log x.
inline RateFit rate_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), Errc::invalid_parameter, "rate_fit: size mismatch");
  require(x.size() >= 2, Errc::invalid_parameter, "rate_fit needs at least two points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]),
            Errc::invalid_parameter, "rate_fit needs positive finite values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, Errc::invalid_parameter, "rate_fit needs distinct x values");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (n > 2) {
    f.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    boost::math::students_t dist(static_cast<double>(n - 2));
    f.slope_ci95 = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_stderr;
  }
  return f;
}

inline RateFit rate_fit(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> x, y;
  for (const auto& [a, b] : pts) x.push_back(a), y.push_back(b);
  return rate_fit(x, y);
}

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
};

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
  require(!v.empty(), Errc::invalid_parameter, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Mean and standard error with a fixed summation order.
inline Summary summarize(const std::vector<double>& v) {
  require(!v.empty(), Errc::invalid_parameter, "summary of an empty sample");
  Summary s;
  s.n = v.size();
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  }
  s.median = quantile(v, 0.5);
  s.q1 = quantile(v, 0.25);
  s.q3 = quantile(v, 0.75);
  return s;
}

/// Two-sided z threshold that keeps the family-wise coverage of a single z_single check
/// over m independent checks (Sidak correction).
inline double sidak_z(double z_single, std::size_t m) {
  require(m >= 1, Errc::invalid_parameter, "need at least one check");
  const boost::math::normal n;
  const double p_single = 2.0 * boost::math::cdf(boost::math::complement(n, z_single));
  const double p_each = -std::expm1(std::log1p(-p_single) / static_cast<double>(m));
  return boost::math::quantile(boost::math::complement(n, p_each / 2.0));
}

}  // namespace phi43::stats
