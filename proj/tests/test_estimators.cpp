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
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "wignerbell/estimators.hpp"

namespace wignerbell {
namespace {

using std::numbers::pi;
constexpr double kTwoRootTwo = 2.0 * std::numbers::sqrt2;

MomentAccumulator simulate(double G, double eta, const AnalyzerSetting& angles, int n,
                           std::uint64_t seed) {
  const auto gain = SqueezerGain::from_photons(G);
  const DetectorModel det(eta);
  MomentAccumulator acc(angles, eta);
  for (int i = 0; i < n; ++i) {
    if (i % (n / 20) == 0) acc.begin_batch(i);
    RngStream rng(seed, i);
    acc.update(analyze_trajectory(generate_bell_trajectory(gain, rng), angles, det, rng));
  }
  return acc;
}

TEST(Chsh, Arithmetic) {
  EXPECT_DOUBLE_EQ(chsh_B(0.5, 0.5, 0.5, 0.5), 1.0);
  const double e = 1.0 / std::numbers::sqrt2;
  EXPECT_NEAR(chsh_B(e, -e, e, e), kTwoRootTwo, 1e-15);
}

TEST(Chsh, LocalDeterministicAssignmentsObeyTheBound) {
  for (int a1 : {-1, 1})
    for (int a2 : {-1, 1})
      for (int b1 : {-1, 1})
        for (int b2 : {-1, 1}) {
          EXPECT_LE(std::abs(chsh_B(a1 * b1, a1 * b2, a2 * b1, a2 * b2)), 2.0);
        }
}

double ideal_B(const AnalyzerSetting& a) {
  auto E = [](double t1, double t2) { return -std::cos(2 * (t1 + t2)); };
  return chsh_B(E(a.theta1, a.theta2), E(a.theta1, a.theta2_prime), E(a.theta1_prime, a.theta2),
                E(a.theta1_prime, a.theta2_prime));
}

TEST(OptimalAngles, ReachTsirelsonBound) {
  EXPECT_NEAR(ideal_B(optimal_angles()), kTwoRootTwo, 1e-14);
  EXPECT_NEAR(ideal_B(literal_published_angles()), 0.0, 1e-14);
}

TEST(OptimalAngles, BruteForceGridFindsNoLargerValue) {
  // theta1 fixed (only sums of angles matter); 1 degree grid over the rest.
  const auto a = optimal_angles();
  double best = -10.0;
  const double deg = pi / 180.0;
  for (int i = 0; i < 180; ++i)
    for (int j = 0; j < 180; ++j)
      for (int k = 0; k < 180; ++k) {
        best = std::max(best, ideal_B({a.theta1, i * deg, j * deg, k * deg}));
      }
  // The optimum sits at multiples of 22.5 degrees, between grid points.
  EXPECT_LE(best, kTwoRootTwo + 1e-12);
  EXPECT_GT(best, kTwoRootTwo - 1e-3);
}

TEST(AnalyticMoments, Examples) {
  const auto z = analytic_moments(0.0);
  EXPECT_EQ(z.mean_pixel, 0.0);
  EXPECT_EQ(z.cov_pixels, 0.0);
  EXPECT_EQ(z.mean_pixel_product, 0.0);
  EXPECT_NEAR(analytic_moments(0.01).mean_pixel_product, 0.0206, 1e-15);
  EXPECT_NEAR(analytic_moments(0.1).cov_pixels, 0.22, 1e-15);
  EXPECT_THROW(analytic_moments(-1.0), ConfigError);
}

TEST(AnalyticB, Examples) {
  EXPECT_NEAR(analytic_B(0.0), kTwoRootTwo, 1e-15);
  EXPECT_NEAR(analytic_B(0.01), 2.77351, 1e-5);
  // B = 2 where 2 sqrt2 (1 + G) = 2 (1 + 3G), i.e. G = (sqrt2 - 1) / (3 - sqrt2).
  const double g2 = (std::numbers::sqrt2 - 1.0) / (3.0 - std::numbers::sqrt2);
  EXPECT_NEAR(g2, 0.2612, 1e-4);
  EXPECT_NEAR(analytic_B(g2), 2.0, 1e-14);
  EXPECT_NEAR(analytic_B(0.2612), 2.0, 1e-3);
}

TEST(AnalyticC, Examples) {
  EXPECT_NEAR(analytic_C(0.0, 1.0), 1.2071, 1e-4);
  EXPECT_NEAR(analytic_C(0.0, 2.0 / (1.0 + std::numbers::sqrt2)), 1.0, 1e-14);
  EXPECT_NEAR(analytic_C(0.05, 1.0), 1.2675, 1e-4);
  EXPECT_NEAR(analytic_C(0.01, 1.0), 1.2192, 1e-4);
}

TEST(WickOracle, MatchesAnalyticB) {
  for (double G : {0.001, 0.01, 0.05, 0.1, 0.2612, 0.46, 1.0, 3.0}) {
    const auto w = wick_oracle(G, 1.0, optimal_angles());
    ASSERT_TRUE(w.defined);
    EXPECT_NEAR(w.B, analytic_B(G), 1e-10) << G;
  }
}

TEST(WickOracle, CorrelationMatchesClosedForm) {
  const double G = 0.2;
  const auto a = optimal_angles();
  const auto w = wick_oracle(G, 1.0, a);
  EXPECT_NEAR(w.E[0], analytic_E(G, a.theta1, a.theta2), 1e-12);
  EXPECT_NEAR(w.E[1], analytic_E(G, a.theta1, a.theta2_prime), 1e-12);
  EXPECT_NEAR(w.E[2], analytic_E(G, a.theta1_prime, a.theta2), 1e-12);
  EXPECT_NEAR(w.E[3], analytic_E(G, a.theta1_prime, a.theta2_prime), 1e-12);
  // Pixel moments
  const auto m = analytic_moments(G);
  EXPECT_NEAR(w.means[obs::den(0)], m.mean_pixel_product, 1e-12);
  EXPECT_NEAR(w.means[obs::single1p(0)] + w.means[obs::single1m(0)], m.mean_pixel, 1e-12);
}

// Independent closed form for the Clauser-Horne ratio at the optimal angles:
// singles <N+> = eta G, coincidences eta^2 (G + G^2)(1 +- cos(2 theta_sum)) / 2 + eta^2 G^2 / 2
// give C = eta [ (1 + sqrt2)/2 (1 + G) + G ].
TEST(WickOracle, ExactClauserHorne) {
  for (double G : {0.0, 0.01, 0.05, 0.3}) {
    for (double eta : {0.5, 0.83, 1.0}) {
      const auto w = wick_oracle(G, eta, optimal_angles());
      if (G == 0.0) {
        EXPECT_FALSE(w.defined);
        continue;
      }
      const double exact = eta * (kClauserHorneMax * (1.0 + G) + G);
      EXPECT_NEAR(w.C, exact, 1e-12) << G << " " << eta;
    }
  }
  EXPECT_NEAR(wick_oracle(0.01, 1.0, optimal_angles()).C, 1.2292, 1e-4);
}

TEST(WickOracle, BDoesNotDependOnEfficiency) {
  for (double eta : {0.3, 0.7, 0.9}) {
    EXPECT_NEAR(wick_oracle(0.1, eta, optimal_angles()).B, analytic_B(0.1), 1e-10);
  }
}

TEST(WickOracle, NoLightIsFlagged) {
  EXPECT_FALSE(wick_oracle(0.0, 1.0, optimal_angles()).defined);
  EXPECT_FALSE(wick_oracle(0.1, 0.0, optimal_angles()).defined);
}

TEST(WickOracle, AgreesWithSimulationMoments) {
  const double G = 0.1;
  const auto acc = simulate(G, 0.8, optimal_angles(), 1000000, 40);
  const auto w = wick_oracle(G, 0.8, optimal_angles());
  const auto t = acc.total().moments;
  for (std::size_t k = 0; k < obs::kCount; ++k) {
    EXPECT_LT(std::abs(t.mean(k) - w.means[k]) / t.standard_error(k), 5.0) << "observable " << k;
  }
}

TEST(Estimators, CorrelationAtKnownAngles) {
  const double G = 0.01;
  const AnalyzerSetting a{-pi / 8, -pi / 8, pi / 2, pi / 2};
  const auto acc = simulate(G, 1.0, a, 1000000, 41);
  const auto jk = jackknife(acc, [](const ObservableVector& m) { return correlation_E(m, 0, 0); });
  const double want = -std::cos(2 * (-pi / 8 + pi / 2)) * (1 + G) / (1 + 3 * G);
  EXPECT_NEAR(want, 0.693, 1e-3);
  EXPECT_LT(std::abs(jk.estimate - want) / jk.std_error, 5.0);
}

TEST(Estimators, EqualWeightAnglesGiveZeroCorrelation) {
  const AnalyzerSetting a{0.1, 0.1, pi / 4 - 0.1, pi / 4 - 0.1};
  const auto acc = simulate(0.05, 1.0, a, 400000, 42);
  const auto jk = jackknife(acc, [](const ObservableVector& m) { return correlation_E(m, 0, 0); });
  EXPECT_LT(std::abs(jk.estimate) / jk.std_error, 5.0);
}

TEST(Estimators, BIsIndependentOfEfficiency) {
  std::vector<BellResult> r;
  for (double eta : {1.0, 0.9, 0.8, 0.7}) r.push_back(estimate_bell(simulate(0.1, eta, optimal_angles(), 400000, 43)));
  for (std::size_t i = 1; i < r.size(); ++i) {
    EXPECT_LT(std::abs(r[i].B - r[0].B) / std::hypot(r[i].stderr_B, r[0].stderr_B), 5.0);
  }
  for (const auto& x : r) EXPECT_LT(std::abs(x.B - analytic_B(0.1)) / x.stderr_B, 5.0);
}

TEST(Estimators, ClauserHorneScalesWithEfficiency) {
  const double G = 0.05;
  std::vector<double> eta, c, se;
  for (double e : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
    const auto r = estimate_bell(simulate(G, e, optimal_angles(), 400000, 44));
    eta.push_back(e);
    c.push_back(r.C);
    se.push_back(r.stderr_C);
    EXPECT_LT(std::abs(r.C - wick_oracle(G, e, optimal_angles()).C) / r.stderr_C, 5.0) << e;
  }
  // Least-squares line through the six points.
  double me = 0, mc = 0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    me += eta[i] / eta.size();
    mc += c[i] / eta.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    sxy += (eta[i] - me) * (c[i] - mc);
    sxx += (eta[i] - me) * (eta[i] - me);
  }
  const double slope = sxy / sxx;
  EXPECT_LT(std::abs(slope - c.back()) / (se.back() * 4.0), 5.0);
}

TEST(Estimators, DenominatorErrors) {
  ObservableVector m{};
  EXPECT_THROW(correlation_E(m, 0, 0), StatisticsError);
  EXPECT_THROW(ch_C(m), StatisticsError);
  MomentAccumulator empty(optimal_angles(), 1.0);
  EXPECT_THROW(estimate_bell(empty), StatisticsError);
  const auto dark = simulate(0.1, 0.0, optimal_angles(), 20000, 45);
  EXPECT_THROW(estimate_bell(dark, 3.0), StatisticsError);
  const auto vacuum = simulate(0.0, 1.0, optimal_angles(), 20000, 46);
  EXPECT_THROW(estimate_bell(vacuum, 3.0), StatisticsError);
}

}  // namespace
}  // namespace wignerbell
