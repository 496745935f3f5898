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
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wignerbell/mode_engine.hpp"
#include "wignerbell/phase_space.hpp"

namespace wignerbell {
namespace {

using testing::covariance_of;
using testing::mean_of;

constexpr int kDraws = 1000000;

struct VacuumEnsemble {
  std::vector<double> re, im, intensity, corrected;
};

const VacuumEnsemble& vacuum() {
  static const VacuumEnsemble e = [] {
    VacuumEnsemble v;
    RngStream rng(2024, 0);
    for (int i = 0; i < kDraws; ++i) {
      const ComplexAmplitude a = sample_vacuum_mode(rng);
      v.re.push_back(a.real());
      v.im.push_back(a.imag());
      v.intensity.push_back(symmetric_intensity(a));
      v.corrected.push_back(corrected_photon_number(a));
    }
    return v;
  }();
  return e;
}

TEST(VacuumSampling, QuadratureMomentsAreZeroMeanQuarterVariance) {
  const auto& v = vacuum();
  EXPECT_LT(mean_of(v.re).z(0.0), 5.0);
  EXPECT_LT(mean_of(v.im).z(0.0), 5.0);
  std::vector<double> sq_re, sq_im;
  for (int i = 0; i < kDraws; ++i) {
    sq_re.push_back(v.re[i] * v.re[i]);
    sq_im.push_back(v.im[i] * v.im[i]);
  }
  EXPECT_LT(mean_of(sq_re).z(0.25), 5.0);
  EXPECT_LT(mean_of(sq_im).z(0.25), 5.0);
  EXPECT_LT(covariance_of(v.re, v.im).z(0.0), 5.0);
}

TEST(VacuumSampling, CorrectedMeanPhotonNumberIsZero) {
  const auto m = mean_of(vacuum().corrected);
  EXPECT_LT(m.z(0.0), 5.0);
  // Vacuum |a|^2 is exponential with mean 1/2, so its standard deviation is 1/2.
  EXPECT_NEAR(m.se, 0.5 / std::sqrt(double(kDraws)), 0.01 * 0.5 / std::sqrt(double(kDraws)));
}

TEST(VacuumSampling, SymmetricIntensityNeverNegative) {
  for (double x : vacuum().intensity) ASSERT_GE(x, 0.0);
  int negative = 0;
  for (double x : vacuum().corrected) negative += x < 0.0;
  EXPECT_GT(negative, 0);
}

TEST(VacuumSampling, SameStreamSameSample) {
  RngStream a(9, 3), b(9, 3);
  const auto x = sample_vacuum_mode(a), y = sample_vacuum_mode(b);
  EXPECT_EQ(x, y);
}

TEST(CorrectedPhotonNumber, Examples) {
  EXPECT_DOUBLE_EQ(corrected_photon_number({0.0, 0.0}), -0.5);
  EXPECT_DOUBLE_EQ(corrected_photon_number({0.5, 0.5}), 0.0);
  EXPECT_NEAR(corrected_photon_number({std::sqrt(0.5), 0.0}), 0.0, 1e-15);
}

TEST(CorrectedVariance, VacuumIsZero) {
  const auto& v = vacuum();
  const double var = corrected_variance(v.intensity);
  // Var(|a|^2) = 1/4 exactly for vacuum; standard error of a sample variance of
  // an exponential variable is sqrt((mu4 - s^4) / n) with mu4 = 9 s^4.
  const double se = std::sqrt(8.0 / kDraws) * 0.25;
  EXPECT_LT(std::abs(var), 5.0 * se);
}

TEST(CorrectedVariance, ConstantIntensityGivesMinusQuarter) {
  const std::vector<double> x(10, 0.25);
  EXPECT_DOUBLE_EQ(corrected_variance(x), -0.25);
}

TEST(CorrectedVariance, RejectsTooFewSamples) {
  EXPECT_THROW(corrected_variance(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(CorrectedCovariance, IndependentVacuaAreUncorrelated) {
  const auto& v = vacuum();
  const std::vector<double> a(v.intensity.begin(), v.intensity.begin() + kDraws / 2);
  const std::vector<double> b(v.intensity.begin() + kDraws / 2, v.intensity.end());
  EXPECT_DOUBLE_EQ(corrected_covariance(a, b), covariance_of(a, b).value);
  EXPECT_LT(covariance_of(a, b).z(0.0), 5.0);
}

TEST(CorrectedCovariance, ConstantSamplesGiveZero) {
  const std::vector<double> x(7, 0.3);
  EXPECT_DOUBLE_EQ(corrected_covariance(x, x), 0.0);
}

TEST(CorrectedCovariance, SelfCovarianceIsVariancePlusQuarter) {
  const auto& v = vacuum();
  const std::span<const double> s(v.intensity.data(), 10000);
  EXPECT_EQ(corrected_variance(s), corrected_covariance(s, s) - 0.25);
  const std::vector<double> odd = {0.1, 2.5, 0.7, 1e-3, 3.0};
  EXPECT_EQ(corrected_variance(odd), corrected_covariance(odd, odd) - 0.25);
}

TEST(CorrectedCovariance, RejectsLengthMismatch) {
  EXPECT_THROW(corrected_covariance(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
               std::invalid_argument);
}

// Thermal marginals and pair correlations of one two-mode squeezer at G = 0.1:
// <N> = G, V(N) = G + G^2, Cov(N_S, N_I) = G + G^2.
TEST(CorrectedMoments, TwoModeSqueezerIsThermalWithPairCorrelations) {
  const double G = 0.1;
  const double r = std::asinh(std::sqrt(G));
  RngStream rng(77, 0);
  std::vector<double> is, ii, ns, ni;
  for (int i = 0; i < kDraws; ++i) {
    const auto [s, idl] = two_mode_squeeze(sample_vacuum_mode(rng), sample_vacuum_mode(rng), r);
    is.push_back(symmetric_intensity(s));
    ii.push_back(symmetric_intensity(idl));
    ns.push_back(corrected_photon_number(s));
  }
  EXPECT_LT(mean_of(ns).z(G), 5.0);

  const double var = corrected_variance(is);
  auto sq = is;
  const double m = mean_of(is).value;
  for (auto& x : sq) x = (x - m) * (x - m);
  EXPECT_LT(std::abs(var - (G + G * G)) / mean_of(sq).se, 5.0);

  const auto cov = covariance_of(is, ii);
  EXPECT_DOUBLE_EQ(corrected_covariance(is, ii), cov.value);
  EXPECT_LT(cov.z(G + G * G), 5.0);
}

}  // namespace
}  // namespace wignerbell
