#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "forge/error.hpp"

namespace forge::stats {

struct CorrelationResult {
  std::string metric_name;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n_points = 0;
};

/// Two-tailed p-value of a Pearson r with df = n - 2, via the regularized
/// incomplete beta: p = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2.
inline double pearson_p_value(double r, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "p-value needs n >= 3");
  const double x = (1.0 - r) * (1.0 + r);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double df = static_cast<double>(n - 2);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

/// Sample Pearson correlation with a two-tailed t-test p-value.
inline CorrelationResult pearson(std::span<const double> xs, std::span<const double> ys, std::string name = {}) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "pearson needs n >= 3");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateInput, "pearson: zero variance");
  CorrelationResult out;
  out.metric_name = std::move(name);
  out.n_points = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  out.p_value = pearson_p_value(out.r, n);
  return out;
}

}  // namespace forge::stats
