#pragma once

#include "sepmdp/types.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace sepmdp {

/// Least-squares slope of log(y) against log(x), using only points with x > 0
/// and y > floor. Returns nullopt with fewer than two usable points.
template <class Scalar>
std::optional<Scalar> loglog_slope(std::span<const Scalar> xs, std::span<const Scalar> ys, Scalar floor) {
  std::vector<Scalar> lx, ly;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i)
    if (xs[i] > Scalar(0) && ys[i] > floor) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  if (lx.size() < 2) return std::nullopt;
  const auto n = static_cast<Index>(lx.size());
  const Eigen::Map<const Vector<Scalar>> x(lx.data(), n), y(ly.data(), n);
  const Vector<Scalar> xc = x.array() - x.mean();
  const Scalar sxx = xc.squaredNorm();
  if (sxx == Scalar(0)) return std::nullopt;
  return xc.dot(y.array().matrix() - Vector<Scalar>::Constant(n, y.mean())) / sxx;
}

}  // namespace sepmdp
