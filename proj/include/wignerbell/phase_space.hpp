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
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include "wignerbell/rng.hpp"

namespace wignerbell {

/// One c-number per mode per trajectory. real() is the X1 quadrature,
/// imag() the X2 quadrature; norm() is the symmetrically ordered intensity.
using ComplexAmplitude = std::complex<double>;

/// Photons subtracted from a symmetrically ordered intensity to obtain the
/// photon number of one mode.
inline constexpr double kOrderingHalf = 0.5;

/// Variance of each vacuum quadrature under W0(a) = 2 exp(-2|a|^2).
inline constexpr double kVacuumQuadratureVariance = 0.25;

/// Draws one mode from the vacuum Wigner function: independent real and
/// imaginary parts, each N(0, 1/4). Polar Box-Muller; consumes exactly two
/// words of the stream.
inline ComplexAmplitude sample_vacuum_mode(RngStream& rng) noexcept {
  const double u = rng.uniform_open_zero();
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  // sqrt(-2 ln u) is a unit-variance radius; scale to standard deviation 1/2.
  const double radius = 0.5 * std::sqrt(-2.0 * std::log(u));
  return {radius * std::cos(phi), radius * std::sin(phi)};
}

inline double symmetric_intensity(ComplexAmplitude a) noexcept {
  return std::norm(a);
}

/// |a|^2 - 1/2. Negative for many individual vacuum draws; only ensemble
/// means are physical.
inline double corrected_photon_number(ComplexAmplitude a) noexcept {
  return std::norm(a) - kOrderingHalf;
}

namespace detail {

inline void require_samples(std::size_t n, const char* what) {
  if (n < 2) throw std::invalid_argument(std::string(what) + ": need at least 2 samples");
}

}  // namespace detail

/// Photon-number variance from symmetric intensities I:
/// mean(I^2) - mean(I)^2 - 1/4. Two-pass for stability.
inline double corrected_variance(std::span<const double> intensities) {
  detail::require_samples(intensities.size(), "corrected_variance");
  const double n = static_cast<double>(intensities.size());
  double mean = 0.0;
  for (double x : intensities) mean += x;
  mean /= n;
  double m2 = 0.0;
  for (double x : intensities) m2 += (x - mean) * (x - mean);
  return m2 / n - kOrderingHalf * kOrderingHalf;
}

/// Photon-number covariance between two distinct modes. Operators of
/// different modes commute, so there is no ordering term.
inline double corrected_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("corrected_covariance: sample lists differ in length");
  }
  detail::require_samples(a.size(), "corrected_covariance");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma) * (b[i] - mb);
  return c / n;
}

}  // namespace wignerbell
