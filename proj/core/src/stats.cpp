#include "edgellm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>

namespace edgellm {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ci95_half_width(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double t = boost::math::quantile(dist, 0.975);
  return t * sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

MannKendall mann_kendall(std::span<const double> xs, double alpha) {
  MannKendall r;
  const std::size_t n = xs.size();
  if (n < 3) return r;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = xs[j] - xs[i];
      r.s += (d > 0) - (d < 0);
    }
  }
  std::map<double, int> ties;
  for (double x : xs) ++ties[x];
  const double nn = static_cast<double>(n);
  double var = nn * (nn - 1) * (2 * nn + 5);
  for (const auto& [value, t] : ties) {
    if (t > 1) var -= static_cast<double>(t) * (t - 1) * (2.0 * t + 5);
  }
  r.variance = var / 18.0;
  if (r.variance <= 0) return r;
  if (r.s > 0) {
    r.z = (r.s - 1) / std::sqrt(r.variance);
  } else if (r.s < 0) {
    r.z = (r.s + 1) / std::sqrt(r.variance);
  }
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  if (r.p_value < alpha) r.trend = r.z > 0 ? 1 : -1;
  return r;
}

}  // namespace edgellm
