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
#include <cstdint>
#include <limits>
#include <vector>

#include "wignerbell/error.hpp"
#include "wignerbell/estimators.hpp"
#include "wignerbell/statistics.hpp"

namespace wignerbell {

/// One snapshot of a growing ensemble. Intervals are reported twice:
/// centred on the estimate, and centred on the theoretical value (the
/// convention of published convergence plots).
struct ConvergenceRow {
  std::uint64_t n = 0;
  double B = 0.0;
  double C = 0.0;
  double stderr_B = 0.0;
  double stderr_C = 0.0;
  double negative_fraction = 0.0;
  Interval B_ci;
  Interval C_ci;
  Interval B_theory_ci;
  Interval C_theory_ci;
  bool valid = false;
};

struct ConvergenceTheory {
  double B = 0.0;
  double C = 0.0;
};

/// Rows for snapshots of one ensemble, in the order given. A snapshot whose
/// estimators are undefined yields a row of NaN rather than an error.
inline std::vector<ConvergenceRow> convergence_series(const std::vector<MomentAccumulator>& snapshots,
                                                      const ConvergenceTheory& theory,
                                                      double level = 0.95) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConvergenceRow> rows;
  rows.reserve(snapshots.size());
  for (const auto& acc : snapshots) {
    ConvergenceRow row;
    row.n = acc.count();
    try {
      const BellResult r = estimate_bell(acc);
      row.B = r.B;
      row.C = r.C;
      row.stderr_B = r.stderr_B;
      row.stderr_C = r.stderr_C;
      row.negative_fraction = r.negative_fraction;
      if (std::isfinite(r.stderr_B) && std::isfinite(r.stderr_C)) {
        row.B_ci = confidence_interval(r.B, r.stderr_B, level);
        row.C_ci = confidence_interval(r.C, r.stderr_C, level);
        row.B_theory_ci = confidence_interval(theory.B, r.stderr_B, level);
        row.C_theory_ci = confidence_interval(theory.C, r.stderr_C, level);
      } else {
        row.B_ci = row.C_ci = row.B_theory_ci = row.C_theory_ci = {kNaN, kNaN};
      }
      row.valid = true;
    } catch (const StatisticsError&) {
      row.B = row.C = row.stderr_B = row.stderr_C = kNaN;
      row.negative_fraction = acc.count() ? acc.negative_fraction() : kNaN;
      row.B_ci = row.C_ci = row.B_theory_ci = row.C_theory_ci = {kNaN, kNaN};
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wignerbell
