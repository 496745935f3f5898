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

// Four-mode trajectory engine: the |psi+> polarization Bell state of the two
// cone-intersection pixels, realized directly as two independent two-mode
// squeezers (1H, 2V) and (1V, 2H), followed by polarizing beam-splitters and
// lossy detectors.

#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "wignerbell/error.hpp"
#include "wignerbell/phase_space.hpp"
#include "wignerbell/rng.hpp"

namespace wignerbell {

/// Mean photon number per mode G = sinh^2(r) of one two-mode squeezer.
class SqueezerGain {
 public:
  static SqueezerGain from_photons(double photons_per_mode) {
    if (!(photons_per_mode >= 0.0) || !std::isfinite(photons_per_mode)) {
      throw ConfigError("gain G must be finite and >= 0, got " + std::to_string(photons_per_mode));
    }
    return SqueezerGain(std::asinh(std::sqrt(photons_per_mode)));
  }

  static SqueezerGain from_squeeze_parameter(double r) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ConfigError("squeeze parameter must be finite and >= 0");
    }
    return SqueezerGain(r);
  }

  double photons() const noexcept {
    const double s = std::sinh(r_);
    return s * s;
  }
  double squeeze_parameter() const noexcept { return r_; }
  double cosh_r() const noexcept { return std::cosh(r_); }
  double sinh_r() const noexcept { return std::sinh(r_); }

 private:
  explicit SqueezerGain(double r) : r_(r) {}
  double r_;
};

struct FourModeState {
  ComplexAmplitude a1H, a1V, a2H, a2V;
};

/// First neutral-axis angles (radians) of the two analyzers, primed and
/// unprimed settings of each side.
struct AnalyzerSetting {
  double theta1 = 0.0;
  double theta1_prime = 0.0;
  double theta2 = 0.0;
  double theta2_prime = 0.0;

  friend bool operator==(const AnalyzerSetting&, const AnalyzerSetting&) = default;
};

/// Corrected photon numbers at the four detector ports of one trajectory.
struct PortIntensities {
  double I1p = 0.0, I1m = 0.0, I2p = 0.0, I2m = 0.0;

  double pixel1() const noexcept { return I1p + I1m; }
  double pixel2() const noexcept { return I2p + I2m; }
};

class DetectorModel {
 public:
  DetectorModel() = default;
  explicit DetectorModel(double efficiency) : eta_(efficiency) {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
      throw ConfigError("detector efficiency must lie in [0, 1], got " + std::to_string(efficiency));
    }
  }
  double efficiency() const noexcept { return eta_; }

 private:
  double eta_ = 1.0;
};

/// Bogoliubov map with zero pump phase:
///   bA = cosh(r) aA + sinh(r) conj(aB),  bB = cosh(r) aB + sinh(r) conj(aA).
inline std::pair<ComplexAmplitude, ComplexAmplitude> two_mode_squeeze(ComplexAmplitude a,
                                                                     ComplexAmplitude b,
                                                                     double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("two_mode_squeeze: r must be >= 0");
  const double c = std::cosh(r);
  const double s = std::sinh(r);
  return {c * a + s * std::conj(b), c * b + s * std::conj(a)};
}

/// Vacuum draws in the order 1H, 1V, 2H, 2V, then squeezing of the pairs
/// (1H, 2V) and (1V, 2H).
inline FourModeState generate_bell_trajectory(const SqueezerGain& gain, RngStream& rng) {
  FourModeState in;
  in.a1H = sample_vacuum_mode(rng);
  in.a1V = sample_vacuum_mode(rng);
  in.a2H = sample_vacuum_mode(rng);
  in.a2V = sample_vacuum_mode(rng);

  const double c = gain.cosh_r();
  const double s = gain.sinh_r();
  FourModeState out;
  out.a1H = c * in.a1H + s * std::conj(in.a2V);
  out.a2V = c * in.a2V + s * std::conj(in.a1H);
  out.a1V = c * in.a1V + s * std::conj(in.a2H);
  out.a2H = c * in.a2H + s * std::conj(in.a1V);
  return out;
}

/// Polarizing beam-splitter with its first neutral axis at theta from H.
/// Returns the (+, -) port amplitudes.
inline std::pair<ComplexAmplitude, ComplexAmplitude> apply_pbs(ComplexAmplitude aH,
                                                              ComplexAmplitude aV,
                                                              double theta) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * aH + s * aV, -s * aH + c * aV};
}

/// Loss as a beam-splitter of transmission eta whose free port admits a
/// fresh vacuum mode. Always draws the vacuum sample so the stream position
/// does not depend on eta.
inline ComplexAmplitude apply_efficiency(ComplexAmplitude a, double eta, RngStream& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("apply_efficiency: eta must lie in [0, 1]");
  }
  const ComplexAmplitude vacuum = sample_vacuum_mode(rng);
  if (eta == 1.0) return a;
  return std::sqrt(eta) * a + std::sqrt(1.0 - eta) * vacuum;
}

/// PBS at each pixel, loss on each port (vacuum draws in the order
/// I1p, I1m, I2p, I2m), then the -1/2 correction per port.
inline PortIntensities detect_ports(const FourModeState& s, double theta1, double theta2,
                                    const DetectorModel& det, RngStream& rng) {
  const auto [p1, m1] = apply_pbs(s.a1H, s.a1V, theta1);
  const auto [p2, m2] = apply_pbs(s.a2H, s.a2V, theta2);
  const double eta = det.efficiency();
  PortIntensities out;
  out.I1p = corrected_photon_number(apply_efficiency(p1, eta, rng));
  out.I1m = corrected_photon_number(apply_efficiency(m1, eta, rng));
  out.I2p = corrected_photon_number(apply_efficiency(p2, eta, rng));
  out.I2m = corrected_photon_number(apply_efficiency(m2, eta, rng));
  return out;
}

/// Port intensities of one trajectory at both analyzer settings of each side.
/// at[0] is measured at (theta1, theta2), at[1] at (theta1', theta2'). Both
/// settings see the same loss-port vacuum draws.
struct TrajectoryPorts {
  PortIntensities at[2];
};

inline TrajectoryPorts analyze_trajectory(const FourModeState& s, const AnalyzerSetting& angles,
                                          const DetectorModel& det, RngStream& rng) {
  RngStream replay = rng;
  TrajectoryPorts t;
  t.at[0] = detect_ports(s, angles.theta1, angles.theta2, det, rng);
  t.at[1] = detect_ports(s, angles.theta1_prime, angles.theta2_prime, det, replay);
  return t;
}

}  // namespace wignerbell
