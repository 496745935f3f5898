// Copyright 2026 The wignerbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace wignerbell::testing {

/// Sample estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;

  /// |value - target| in standard errors.
  double z(double target) const { return std::abs(value - target) / se; }
};

inline Estimate mean_of(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

/// Population covariance of x and y, with a delta-method standard error.
inline Estimate covariance_of(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x).value, my = mean_of(y).value;
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  return mean_of(prod);
}

/// |a - b| in combined standard errors.
inline double combined_z(const Estimate& a, const Estimate& b) {
  return std::abs(a.value - b.value) / std::hypot(a.se, b.se);
}

}  // namespace wignerbell::testing
