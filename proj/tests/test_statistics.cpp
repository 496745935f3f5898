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

#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "wignerbell/convergence.hpp"
#include "wignerbell/estimators.hpp"
#include "wignerbell/statistics.hpp"

namespace wignerbell {
namespace {

std::vector<TrajectoryPorts> trajectories(double G, double eta, int n, std::uint64_t seed) {
  const auto gain = SqueezerGain::from_photons(G);
  const DetectorModel det(eta);
  std::vector<TrajectoryPorts> out;
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    out.push_back(analyze_trajectory(generate_bell_trajectory(gain, rng), optimal_angles(), det, rng));
  }
  return out;
}

MomentAccumulator accumulate(const std::vector<TrajectoryPorts>& t, std::size_t begin,
                             std::size_t end, std::size_t batch) {
  MomentAccumulator acc(optimal_angles(), 1.0);
  for (std::size_t i = begin; i < end; ++i) {
    if ((i - begin) % batch == 0) acc.begin_batch(i);
    acc.update(t[i]);
  }
  return acc;
}

TEST(RunningMoments, StreamedMatchesTwoPass) {
  const auto t = trajectories(0.1, 0.9, 10000, 1);
  BellMoments m;
  std::vector<ObservableVector> xs;
  for (const auto& x : t) {
    xs.push_back(observables_of(x));
    m.update(xs.back());
  }
  for (std::size_t k = 0; k < obs::kCount; ++k) {
    double mean = 0.0;
    for (const auto& x : xs) mean += x[k];
    mean /= double(xs.size());
    double ss = 0.0;
    for (const auto& x : xs) ss += (x[k] - mean) * (x[k] - mean);
    const double var = ss / double(xs.size() - 1);
    EXPECT_NEAR(m.mean(k), mean, 1e-10 * std::max(1e-3, std::abs(mean))) << k;
    EXPECT_NEAR(m.variance(k), var, 1e-10 * var) << k;
  }
}

TEST(RunningMoments, MergeMatchesSequential) {
  const auto t = trajectories(0.2, 1.0, 10000, 2);
  BellMoments all, a, b;
  for (std::size_t i = 0; i < t.size(); ++i) {
    all.update(observables_of(t[i]));
    (i < 3700 ? a : b).update(observables_of(t[i]));
  }
  a.merge(b);
  EXPECT_EQ(a.count(), all.count());
  for (std::size_t k = 0; k < obs::kCount; ++k) {
    EXPECT_NEAR(a.mean(k), all.mean(k), 1e-12 * std::max(1.0, std::abs(all.mean(k))));
    EXPECT_NEAR(a.variance(k), all.variance(k), 1e-12 * all.variance(k));
  }
}

TEST(RunningMoments, MergeWithEmptyIsIdentity) {
  const auto t = trajectories(0.1, 1.0, 100, 3);
  BellMoments a, empty;
  for (const auto& x : t) a.update(observables_of(x));
  BellMoments b = a;
  b.merge(empty);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  empty.merge(a);
  EXPECT_EQ(std::memcmp(&a, &empty, sizeof a), 0);
}

TEST(RunningMoments, ZeroUpdates) {
  BellMoments m;
  for (int i = 0; i < 5; ++i) m.update(ObservableVector{});
  EXPECT_EQ(m.count(), 5u);
  for (std::size_t k = 0; k < obs::kCount; ++k) EXPECT_EQ(m.mean(k), 0.0);
}

TEST(MomentBatch, CountsNegativeTrajectories) {
  MomentBatch b;
  TrajectoryPorts t;
  t.at[0] = {-0.3, 0.1, 0.2, 0.1};  // N1 = -0.2, N2 = 0.3
  b.update(t);
  EXPECT_EQ(b.negatives, 1u);
  t.at[0] = {0.3, 0.1, 0.2, 0.1};
  b.update(t);
  EXPECT_EQ(b.negatives, 1u);
  EXPECT_EQ(b.count(), 2u);
}

TEST(MomentAccumulator, MergeIsOrderIndependentBitForBit) {
  const auto t = trajectories(0.05, 1.0, 6000, 4);
  const auto a = accumulate(t, 0, 2000, 500);
  const auto b = accumulate(t, 2000, 4500, 500);
  const auto c = accumulate(t, 4500, 6000, 500);
  MomentAccumulator x = a, y = c;
  x.merge(b);
  x.merge(c);
  y.merge(a);
  y.merge(b);
  const auto tx = x.total(), ty = y.total();
  EXPECT_EQ(std::memcmp(&tx.moments, &ty.moments, sizeof tx.moments), 0);
  EXPECT_EQ(tx.negatives, ty.negatives);

  const auto seq = accumulate(t, 0, 6000, 500);
  const auto ts = seq.total();
  EXPECT_EQ(std::memcmp(&tx.moments, &ts.moments, sizeof tx.moments), 0);
}

TEST(MomentAccumulator, RejectsOverlapAndMismatch) {
  const auto t = trajectories(0.05, 1.0, 100, 5);
  auto a = accumulate(t, 0, 60, 20);
  const auto b = accumulate(t, 40, 100, 20);
  EXPECT_THROW(a.merge(b), std::invalid_argument);
  MomentAccumulator other({0, 0, 0, 0}, 1.0);
  EXPECT_THROW(a.merge(other), std::invalid_argument);
}

TEST(Jackknife, LinearStatisticMatchesBatchMeansError) {
  const auto t = trajectories(0.1, 1.0, 20000, 6);
  const auto acc = accumulate(t, 0, t.size(), 1000);
  const std::size_t k = obs::single1p(0);
  const auto jk = jackknife(acc, [&](const ObservableVector& m) { return m[k]; });
  std::vector<double> means;
  for (const auto& b : acc.batches()) means.push_back(b.moments.mean(k));
  double mu = 0.0;
  for (double m : means) mu += m;
  mu /= double(means.size());
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  const double g = double(means.size());
  EXPECT_NEAR(jk.estimate, acc.total().moments.mean(k), 1e-15);
  EXPECT_NEAR(jk.std_error, std::sqrt(ss / (g - 1) / g), 1e-12);
  // and agrees with the i.i.d. standard error to within sampling noise
  EXPECT_NEAR(jk.std_error / acc.total().moments.standard_error(k), 1.0, 0.5);
}

TEST(Jackknife, SingleBatchHasNoError) {
  const auto t = trajectories(0.1, 1.0, 100, 7);
  const auto acc = accumulate(t, 0, 100, 100);
  EXPECT_TRUE(std::isnan(jackknife(acc, [](const ObservableVector& m) { return m[0]; }).std_error));
}

TEST(StderrMean, PublishedArithmetic) {
  const double se = stderr_mean(0.51, 1.96e6);
  EXPECT_NEAR(se, 5.2e-4, 0.01 * 5.2e-4);
  EXPECT_NEAR(se / 0.02, 0.026, 0.001);
  EXPECT_NEAR(stderr_mean(0.51, 4 * 1.96e6), se / 2, 1e-15);
  EXPECT_THROW(stderr_mean(0.5, 0.0), std::invalid_argument);
}

TEST(ConfidenceInterval, NormalQuantiles) {
  const auto ci = confidence_interval(2.68, 0.026 * 2.68);
  // 1.96 x 2.6% = 5.1%, quoted as 5.2% with z rounded to 2.
  EXPECT_NEAR(ci.half_width() / 2.68, 0.052, 0.0015);
  const auto zero = confidence_interval(1.5, 0.0);
  EXPECT_EQ(zero.lo, 1.5);
  EXPECT_EQ(zero.hi, 1.5);
  const auto c95 = confidence_interval(0.0, 1.0, 0.95), c99 = confidence_interval(0.0, 1.0, 0.99);
  EXPECT_NEAR(c95.hi, 1.959963984540054, 1e-12);
  EXPECT_LT(c99.lo, c95.lo);
  EXPECT_GT(c99.hi, c95.hi);
  EXPECT_THROW(confidence_interval(0.0, -1.0), std::invalid_argument);
}

TEST(ConvergenceSeries, RowsAndScaling) {
  const auto t = trajectories(0.05, 1.0, 64000, 8);
  std::vector<MomentAccumulator> snaps;
  for (std::size_t n : {4000u, 4000u, 16000u, 64000u}) snaps.push_back(accumulate(t, 0, n, n / 20));
  const auto rows = convergence_series(snaps, {analytic_B(0.05), analytic_C(0.05, 1.0)});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].n, rows[1].n);
  EXPECT_EQ(rows[0].B, rows[1].B);
  EXPECT_EQ(rows[0].C, rows[1].C);
  EXPECT_EQ(rows[0].stderr_B, rows[1].stderr_B);
  EXPECT_EQ(rows[0].stderr_C, rows[1].stderr_C);
  EXPECT_EQ(rows[3].n, 64000u);
  // stderr ~ 1/sqrt(n): quadrupling n halves it.
  EXPECT_NEAR(rows[2].stderr_B / rows[3].stderr_B, 2.0, 0.4);
  EXPECT_NEAR(rows[0].stderr_B / rows[2].stderr_B, 2.0, 0.4);
  EXPECT_TRUE(rows[3].B_ci.contains(rows[3].B));
  EXPECT_NEAR(rows[3].B_theory_ci.lo + rows[3].B_theory_ci.hi, 2 * analytic_B(0.05), 1e-12);
}

TEST(ConvergenceSeries, UndefinedEstimatorGivesNaNRow) {
  MomentAccumulator empty(optimal_angles(), 1.0);
  const auto none = convergence_series({empty}, {2.0, 1.0});
  EXPECT_FALSE(none[0].valid);
  EXPECT_TRUE(std::isnan(none[0].C));
}

}  // namespace
}  // namespace wignerbell
