#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "popnet/errors.hpp"

namespace popnet {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ConfigError("mean of empty sample");
  double sum = 0;
  for (const double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for a single observation.
inline double sample_std(const std::vector<double>& xs) {
  if (xs.empty()) throw ConfigError("std of empty sample");
  if (xs.size() == 1) return 0.0;
  const double m = mean(xs);
  double ss = 0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 1;
};

// Ordinary least squares y = slope*x + intercept. Requires at least two
// distinct x values.
inline LinearFit least_squares(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("mismatched fit inputs");
  if (xs.size() < 2) throw ConfigError("fit requires at least two points");
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw ConfigError("fit refused: degenerate x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss_res += e * e;
  }
  fit.r_squared = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

struct WilsonInterval {
  double low = 0;
  double high = 1;
};

// Wilson score interval at 95% confidence.
inline WilsonInterval wilson_interval(std::size_t successes,
                                      std::size_t trials) {
  if (trials == 0) throw ConfigError("Wilson interval of zero trials");
  if (successes > trials) throw ConfigError("successes exceed trials");
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace popnet
