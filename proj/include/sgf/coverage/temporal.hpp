#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgf/common/error.hpp"

namespace sgf::coverage {

// Forward sliding mean TM_r(i) = (1/r) * sum_{n=0}^{r-1} p[i+n] for
// i = 0 .. size-r. Returns an empty array when size < r. A single pass with
// a compensated running sum, so integer inputs stay exact and real inputs
// do not drift over long streams. Throws ArgumentError for r < 1.
template <typename Derived>
Eigen::ArrayXd temporal_mean(const Eigen::DenseBase<Derived>& p, Eigen::Index r) {
  if (r < 1) throw ArgumentError("window r must be >= 1");
  const Eigen::Index n = p.size();
  if (n < r) return {};
  Eigen::ArrayXd out(n - r + 1);
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (Eigen::Index k = 0; k < r; ++k) add(static_cast<double>(p.derived().coeff(k)));
  out(0) = (sum + comp) / double(r);
  for (Eigen::Index i = 1; i + r <= n; ++i) {
    add(static_cast<double>(p.derived().coeff(i + r - 1)));
    add(-static_cast<double>(p.derived().coeff(i - 1)));
    out(i) = (sum + comp) / double(r);
  }
  return out;
}

template <typename Scalar>
Eigen::ArrayXd temporal_mean(const std::vector<Scalar>& p, Eigen::Index r) {
  return temporal_mean(
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(p.data(), static_cast<Eigen::Index>(p.size())),
      r);
}

// Seconds covered by a window of r samples.
inline double window_seconds(int r, double samples_per_second) { return double(r) / samples_per_second; }

struct CoverageSeries {
  std::string transect_id;
  int window_r = 30;
  std::vector<double> values;
  std::vector<std::int64_t> start_indices;  // position of each window's first sample in the stream
  std::vector<double> start_times_s;        // video time of that sample
  double samples_per_second = 3.0;
};

}  // namespace sgf::coverage
