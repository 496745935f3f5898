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

// Transverse split-step propagation of the two polarization fields through a
// type-II parametric amplifier, starting from per-pixel vacuum draws.
//
// Units: pixel pitch dx and crystal length are in one arbitrary length unit;
// transverse frequencies q are angular (radians per length unit), so the
// Nyquist frequency is pi / dx.
//
// Phase-matching model. Each polarization's plane-wave spectrum advances with
//   phi_H(q) = -d |q|^2 + m (|q|^2 - qr^2)
//   phi_V(q) = phi_H(q - q0),  q0 = (0, ring_offset)
// and the gain couples A_H(q) to conj(A_V(-q)), so the pair mismatch is
//   Delta(q) = phi_H(q) + phi_V(-q) = a (|q|^2 + |q + q0|^2) - 2 m qr^2,
// with a = m - d. Delta vanishes on a circle centred on -q0/2 (the H ring);
// the V ring is its mirror about the pump axis, and the two intersect at two
// pixels symmetric about the grid centre.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wignerbell/error.hpp"
#include "wignerbell/fft.hpp"
#include "wignerbell/mode_engine.hpp"
#include "wignerbell/phase_space.hpp"
#include "wignerbell/rng.hpp"

namespace wignerbell {

inline bool is_power_of_two(std::size_t n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

/// Two polarization-resolved transverse fields, row-major with x fastest.
struct FieldGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dx = 1.0;
  std::vector<ComplexAmplitude> h;
  std::vector<ComplexAmplitude> v;

  static FieldGrid zeros(std::size_t nx, std::size_t ny, double dx) {
    if (!is_power_of_two(nx) || !is_power_of_two(ny)) {
      throw ConfigError("grid dimensions must be powers of two");
    }
    if (!(dx > 0.0)) throw ConfigError("pixel pitch dx must be > 0");
    FieldGrid g;
    g.nx = nx;
    g.ny = ny;
    g.dx = dx;
    g.h.assign(nx * ny, {});
    g.v.assign(nx * ny, {});
    return g;
  }

  std::size_t size() const noexcept { return nx * ny; }
  std::size_t index(std::size_t x, std::size_t y) const noexcept { return y * nx + x; }
  std::size_t center_x() const noexcept { return nx / 2; }
  std::size_t center_y() const noexcept { return ny / 2; }
};

struct CrystalParams {
  double length = 1.0;
  int nsteps = 1;
  /// Gain per unit length at the pump peak.
  double gain = 0.0;
  /// 1/e^2 intensity radius of the Gaussian pump; infinity for a plane wave.
  double pump_waist = std::numeric_limits<double>::infinity();
  double diffraction_coeff = 0.0;
  double mismatch_coeff = 0.0;
  /// qr in the mismatch term.
  double ring_radius = 0.0;
  /// y offset q0 of the V cone's spectral phase.
  double ring_offset = 0.0;
  /// Relative gain below which a transverse frequency counts as unamplified.
  double gain_threshold = 1e-3;

  bool has_spectral_phase() const noexcept {
    return diffraction_coeff != 0.0 || mismatch_coeff != 0.0;
  }

  void validate() const {
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("crystal length must be > 0");
    if (nsteps < 1) throw ConfigError("nsteps must be >= 1");
    if (!(gain >= 0.0) || !std::isfinite(gain)) throw ConfigError("gain per length must be >= 0");
    if (!(pump_waist > 0.0)) throw ConfigError("pump waist must be > 0");
    if (!(gain_threshold > 0.0 && gain_threshold < 1.0)) {
      throw ConfigError("gain threshold must lie in (0, 1)");
    }
  }

  double phase_h(double qx, double qy) const noexcept {
    const double q2 = qx * qx + qy * qy;
    return -diffraction_coeff * q2 + mismatch_coeff * (q2 - ring_radius * ring_radius);
  }
  double phase_v(double qx, double qy) const noexcept { return phase_h(qx, qy - ring_offset); }
  double pair_mismatch(double qx, double qy) const noexcept {
    return phase_h(qx, qy) + phase_v(-qx, -qy);
  }

  /// Field pump profile, 1 at the axis.
  double pump(double x, double y) const noexcept {
    if (std::isinf(pump_waist)) return 1.0;
    return std::exp(-(x * x + y * y) / (pump_waist * pump_waist));
  }
};

/// Far-field pixel coordinates of the two analyzed modes.
struct PixelPairSelection {
  std::size_t x1 = 0, y1 = 0;
  std::size_t x2 = 0, y2 = 0;

  friend bool operator==(const PixelPairSelection&, const PixelPairSelection&) = default;
};

// ---------------------------------------------------------------------------

/// Every pixel of both polarizations is an independent vacuum draw, H plane
/// first, row-major.
inline FieldGrid init_vacuum_grid(std::size_t nx, std::size_t ny, double dx, RngStream& rng) {
  FieldGrid g = FieldGrid::zeros(nx, ny, dx);
  for (auto& a : g.h) a = sample_vacuum_mode(rng);
  for (auto& a : g.v) a = sample_vacuum_mode(rng);
  return g;
}

namespace spatial_detail {

inline double angular_frequency(std::size_t k, std::size_t n, double dx) noexcept {
  return 2.0 * std::numbers::pi * static_cast<double>(signed_frequency_index(k, n)) /
         (static_cast<double>(n) * dx);
}

inline double pixel_position(std::size_t k, std::size_t n, double dx) noexcept {
  return (static_cast<double>(k) - static_cast<double>(n / 2)) * dx;
}

/// Largest |Delta| on the grid's frequency lattice.
inline double max_grid_mismatch(const CrystalParams& p, std::size_t nx, std::size_t ny, double dx) {
  double worst = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    const double qy = angular_frequency(y, ny, dx);
    for (std::size_t x = 0; x < nx; ++x) {
      worst = std::max(worst, std::abs(p.pair_mismatch(angular_frequency(x, nx, dx), qy)));
    }
  }
  return worst;
}

/// |Delta| beyond which plane-wave gain over the crystal stays below
/// threshold * sinh^2(kappa L). From G(Delta) = kappa^2 / Gamma^2 sinh^2(Gamma L),
/// Gamma^2 = kappa^2 - Delta^2 / 4, bounded by kappa^2 / (Delta^2 / 4 - kappa^2).
inline double cutoff_mismatch(double kappa, double length, double threshold) noexcept {
  const double s = std::sinh(kappa * length);
  return 2.0 * kappa * std::sqrt(1.0 + 1.0 / (threshold * s * s));
}

}  // namespace spatial_detail

struct SamplingDiagnostic {
  bool passed = false;
  /// Highest |q| with gain above threshold (infinite when the band is unbounded).
  double cutoff_frequency = 0.0;
  double nyquist_frequency = 0.0;
  /// nyquist - cutoff; negative on failure.
  double frequency_margin = 0.0;
  /// Largest |Delta| * dz on the grid plus the cutoff band; must stay below
  /// 2 pi or the periodic gain kicks phase-match spurious rings.
  double step_phase = 0.0;
  double step_phase_limit = 2.0 * std::numbers::pi;
  std::string message;
};

/// Checks that the grid resolves every amplified transverse frequency (the
/// sampling theorem at the crystal output) and that the split step is fine
/// enough not to create quasi-phase-matched artefacts.
inline SamplingDiagnostic check_sampling(const CrystalParams& p, std::size_t nx, std::size_t ny,
                                         double dx) {
  p.validate();
  SamplingDiagnostic d;
  d.nyquist_frequency = std::numbers::pi / dx;
  const double kappa = p.gain;
  if (kappa == 0.0) {
    d.passed = true;
    d.frequency_margin = d.nyquist_frequency;
    d.message = "no gain; nothing to resolve";
    return d;
  }

  const double delta_c = spatial_detail::cutoff_mismatch(kappa, p.length, p.gain_threshold);
  const double a = p.mismatch_coeff - p.diffraction_coeff;
  const double q0 = std::abs(p.ring_offset);
  const double constant =
      a * q0 * q0 / 2.0 - 2.0 * p.mismatch_coeff * p.ring_radius * p.ring_radius;
  // Delta = 2 a u + constant with u = |q + q0/2|^2.
  double u_max;
  if (a > 0.0) {
    u_max = (delta_c - constant) / (2.0 * a);
  } else if (a < 0.0) {
    u_max = (delta_c + constant) / (-2.0 * a);
  } else {
    u_max = std::abs(constant) <= delta_c ? std::numeric_limits<double>::infinity() : -1.0;
  }

  if (u_max < 0.0) {
    d.cutoff_frequency = 0.0;
  } else {
    d.cutoff_frequency = std::sqrt(u_max) + q0 / 2.0;
    if (std::isfinite(p.pump_waist)) {
      // Pump intensity spectrum exp(-q^2 w^2 / 2) broadens the band.
      d.cutoff_frequency += std::sqrt(2.0 * std::log(1.0 / p.gain_threshold)) / p.pump_waist;
    }
  }
  d.frequency_margin = d.nyquist_frequency - d.cutoff_frequency;

  const double dz = p.length / p.nsteps;
  d.step_phase = (spatial_detail::max_grid_mismatch(p, nx, ny, dx) + delta_c) * dz;

  const bool band_ok = d.cutoff_frequency < d.nyquist_frequency;
  const bool step_ok = d.step_phase < d.step_phase_limit;
  d.passed = band_ok && step_ok;

  std::ostringstream msg;
  msg.precision(6);
  if (!band_ok) {
    msg << "gain band reaches |q| = " << d.cutoff_frequency << " beyond Nyquist "
        << d.nyquist_frequency << " (grid " << nx << "x" << ny << ", dx " << dx << ")";
  } else if (!step_ok) {
    msg << "split step too coarse: max |Delta| dz = " << d.step_phase << " >= 2 pi; raise nsteps";
  } else {
    msg << "ok: cutoff " << d.cutoff_frequency << " < Nyquist " << d.nyquist_frequency
        << ", step phase " << d.step_phase;
  }
  d.message = msg.str();
  return d;
}

// ---------------------------------------------------------------------------

/// Precomputed split-step operators for one grid shape and crystal.
/// Symmetrized: D(dz/2) [G(dz) D(dz)]^(n-1) G(dz) D(dz/2).
class SplitStepPropagator {
 public:
  SplitStepPropagator(const CrystalParams& params, std::size_t nx, std::size_t ny, double dx)
      : params_(params), nx_(nx), ny_(ny), dx_(dx), fft_(nx, ny) {
    params_.validate();
    const double dz = params_.length / params_.nsteps;
    const std::size_t n = nx * ny;
    gain_cosh_.resize(n);
    gain_sinh_.resize(n);
    for (std::size_t y = 0; y < ny; ++y) {
      const double py = spatial_detail::pixel_position(y, ny, dx);
      for (std::size_t x = 0; x < nx; ++x) {
        const double k = params_.gain * params_.pump(spatial_detail::pixel_position(x, nx, dx), py) * dz;
        gain_cosh_[y * nx + x] = std::cosh(k);
        gain_sinh_[y * nx + x] = std::sinh(k);
      }
    }
    if (params_.has_spectral_phase()) {
      full_h_ = spectral_multiplier(dz, true);
      full_v_ = spectral_multiplier(dz, false);
      half_h_ = spectral_multiplier(dz / 2, true);
      half_v_ = spectral_multiplier(dz / 2, false);
    }
  }

  const CrystalParams& params() const noexcept { return params_; }

  void operator()(FieldGrid& g) const {
    require_shape(g);
    const int n = params_.nsteps;
    diffract(g, half_h_, half_v_);
    for (int s = 0; s < n; ++s) {
      amplify(g);
      if (s + 1 < n) {
        diffract(g, full_h_, full_v_);
      } else {
        diffract(g, half_h_, half_v_);
      }
    }
  }

  /// One exact gain step of length length/nsteps.
  void amplify(FieldGrid& g) const {
    require_shape(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const ComplexAmplitude h = g.h[i];
      const ComplexAmplitude v = g.v[i];
      g.h[i] = gain_cosh_[i] * h + gain_sinh_[i] * std::conj(v);
      g.v[i] = gain_cosh_[i] * v + gain_sinh_[i] * std::conj(h);
    }
  }

 private:
  using Multiplier = std::vector<std::complex<double>>;

  Multiplier spectral_multiplier(double dz, bool horizontal) const {
    Multiplier m(nx_ * ny_);
    const double norm = 1.0 / static_cast<double>(nx_ * ny_);
    for (std::size_t y = 0; y < ny_; ++y) {
      const double qy = spatial_detail::angular_frequency(y, ny_, dx_);
      for (std::size_t x = 0; x < nx_; ++x) {
        const double qx = spatial_detail::angular_frequency(x, nx_, dx_);
        const double phi = horizontal ? params_.phase_h(qx, qy) : params_.phase_v(qx, qy);
        m[y * nx_ + x] = std::polar(norm, phi * dz);
      }
    }
    return m;
  }

  void diffract(FieldGrid& g, const Multiplier& mh, const Multiplier& mv) const {
    if (!params_.has_spectral_phase()) return;
    apply(g.h, mh);
    apply(g.v, mv);
  }

  void apply(std::vector<ComplexAmplitude>& field, const Multiplier& m) const {
    fft_.forward(field);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= m[i];
    fft_.inverse(field);
  }

  void require_shape(const FieldGrid& g) const {
    if (g.nx != nx_ || g.ny != ny_ || g.dx != dx_) {
      throw std::invalid_argument("SplitStepPropagator: grid shape mismatch");
    }
  }

  CrystalParams params_;
  std::size_t nx_, ny_;
  double dx_;
  Fft2d fft_;
  std::vector<double> gain_cosh_, gain_sinh_;
  Multiplier full_h_, full_v_, half_h_, half_v_;
};

/// Exact per-pixel solution of dA_H/dz = kappa conj(A_V), dA_V/dz = kappa conj(A_H)
/// over dz, kappa = g * pump(x, y).
inline void gain_step(FieldGrid& g, const CrystalParams& params, double dz) {
  if (!(dz > 0.0)) throw std::invalid_argument("gain_step: dz must be > 0");
  for (std::size_t y = 0; y < g.ny; ++y) {
    const double py = spatial_detail::pixel_position(y, g.ny, g.dx);
    for (std::size_t x = 0; x < g.nx; ++x) {
      const std::size_t i = g.index(x, y);
      const double k =
          params.gain * params.pump(spatial_detail::pixel_position(x, g.nx, g.dx), py) * dz;
      const double c = std::cosh(k), s = std::sinh(k);
      const ComplexAmplitude h = g.h[i];
      const ComplexAmplitude v = g.v[i];
      g.h[i] = c * h + s * std::conj(v);
      g.v[i] = c * v + s * std::conj(h);
    }
  }
}

/// Multiplies each polarization's spectrum by exp(i phi(q) dz). Unit modulus,
/// so sum |a|^2 is conserved.
inline void diffraction_step(FieldGrid& g, const CrystalParams& params, double dz) {
  if (!(dz > 0.0)) throw std::invalid_argument("diffraction_step: dz must be > 0");
  if (!params.has_spectral_phase()) return;
  const Fft2d fft(g.nx, g.ny);
  const double norm = 1.0 / static_cast<double>(g.size());
  auto run = [&](std::vector<ComplexAmplitude>& field, bool horizontal) {
    fft.forward(field);
    for (std::size_t y = 0; y < g.ny; ++y) {
      const double qy = spatial_detail::angular_frequency(y, g.ny, g.dx);
      for (std::size_t x = 0; x < g.nx; ++x) {
        const double qx = spatial_detail::angular_frequency(x, g.nx, g.dx);
        const double phi = horizontal ? params.phase_h(qx, qy) : params.phase_v(qx, qy);
        field[g.index(x, y)] *= std::polar(norm, phi * dz);
      }
    }
    fft.inverse(field);
  };
  run(g.h, true);
  run(g.v, false);
}

enum class SamplingPolicy { kEnforce, kSkip };

/// Full crystal. With kEnforce a failed check_sampling raises SamplingError
/// carrying the diagnostic.
inline void propagate(FieldGrid& g, const CrystalParams& params,
                      SamplingPolicy policy = SamplingPolicy::kEnforce) {
  if (policy == SamplingPolicy::kEnforce) {
    const SamplingDiagnostic d = check_sampling(params, g.nx, g.ny, g.dx);
    if (!d.passed) throw SamplingError("sampling check failed: " + d.message);
  }
  SplitStepPropagator(params, g.nx, g.ny, g.dx)(g);
}

/// Centred, unitary 2-D DFT of both polarizations; frequency zero lands on
/// pixel (nx/2, ny/2).
inline FieldGrid far_field(const FieldGrid& near) {
  FieldGrid out = near;
  const Fft2d fft(near.nx, near.ny);
  const double norm = 1.0 / std::sqrt(static_cast<double>(near.size()));
  for (auto* field : {&out.h, &out.v}) {
    fft.forward(*field);
    for (auto& a : *field) a *= norm;
    fft_shift(*field, near.nx, near.ny);
  }
  out.dx = 2.0 * std::numbers::pi / (static_cast<double>(near.nx) * near.dx);
  return out;
}

inline bool is_symmetric_pair(const PixelPairSelection& s, std::size_t nx, std::size_t ny) noexcept {
  return s.x1 < nx && s.x2 < nx && s.y1 < ny && s.y2 < ny && s.x1 + s.x2 == nx &&
         s.y1 + s.y2 == ny;
}

/// (a1H, a1V, a2H, a2V) from the two selected far-field pixels.
inline FourModeState extract_pixel_pair(const FieldGrid& farfield, const PixelPairSelection& sel) {
  if (!is_symmetric_pair(sel, farfield.nx, farfield.ny)) {
    throw std::invalid_argument("extract_pixel_pair: pixels must lie inside the grid and be "
                                "point-symmetric about the centre");
  }
  const std::size_t i1 = farfield.index(sel.x1, sel.y1);
  const std::size_t i2 = farfield.index(sel.x2, sel.y2);
  return {farfield.h[i1], farfield.v[i1], farfield.h[i2], farfield.v[i2]};
}

// ---------------------------------------------------------------------------

/// Streaming far-field statistics over trajectories: per-pixel Welford
/// moments of the uncorrected H and V intensities, and the co-moment of the
/// corrected pixel total N(p) with N(mirror(p)).
class SpatialAccumulator {
 public:
  SpatialAccumulator(std::size_t nx, std::size_t ny)
      : nx_(nx), ny_(ny), mean_h_(nx * ny), m2_h_(nx * ny), mean_v_(nx * ny), m2_v_(nx * ny),
        mean_n_(nx * ny), co_n_(nx * ny) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::uint64_t count() const noexcept { return count_; }

  /// Mirror of pixel i about the centre, or npos when it falls off the grid.
  std::size_t mirror(std::size_t i) const noexcept {
    const std::size_t x = i % nx_, y = i / nx_;
    if (x == 0 || y == 0) return npos;
    return (ny_ - y) * nx_ + (nx_ - x);
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void update(const FieldGrid& ff) {
    if (ff.nx != nx_ || ff.ny != ny_) throw std::invalid_argument("SpatialAccumulator: shape");
    ++count_;
    const double inv_n = 1.0 / static_cast<double>(count_);
    const std::size_t n = nx_ * ny_;
    scratch_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ih = std::norm(ff.h[i]);
      const double iv = std::norm(ff.v[i]);
      welford(mean_h_[i], m2_h_[i], ih, inv_n);
      welford(mean_v_[i], m2_v_[i], iv, inv_n);
      const double total = ih + iv - 2.0 * kOrderingHalf;
      scratch_[i] = total - mean_n_[i];  // deviation from the old mean
      mean_n_[i] += scratch_[i] * inv_n;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = mirror(i);
      if (j == npos) continue;
      const double total_j = std::norm(ff.h[j]) + std::norm(ff.v[j]) - 2.0 * kOrderingHalf;
      co_n_[i] += scratch_[i] * (total_j - mean_n_[j]);
    }
  }

  void merge(const SpatialAccumulator& o) {
    if (o.nx_ != nx_ || o.ny_ != ny_) throw std::invalid_argument("SpatialAccumulator: shape");
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_);
    const double n = na + nb;
    const std::size_t cells = nx_ * ny_;
    std::vector<double> delta_n(cells);
    for (std::size_t i = 0; i < cells; ++i) delta_n[i] = o.mean_n_[i] - mean_n_[i];
    for (std::size_t i = 0; i < cells; ++i) {
      chan(mean_h_[i], m2_h_[i], o.mean_h_[i], o.m2_h_[i], na, nb);
      chan(mean_v_[i], m2_v_[i], o.mean_v_[i], o.m2_v_[i], na, nb);
      const std::size_t j = mirror(i);
      if (j != npos) co_n_[i] += o.co_n_[i] + delta_n[i] * delta_n[j] * (na * nb / n);
    }
    for (std::size_t i = 0; i < cells; ++i) mean_n_[i] += delta_n[i] * (nb / n);
    count_ += o.count_;
  }

  /// Mean uncorrected intensity per pixel.
  const std::vector<double>& mean_h() const noexcept { return mean_h_; }
  const std::vector<double>& mean_v() const noexcept { return mean_v_; }

  double corrected_mean_h(std::size_t i) const noexcept { return mean_h_[i] - kOrderingHalf; }
  double corrected_mean_v(std::size_t i) const noexcept { return mean_v_[i] - kOrderingHalf; }
  double stderr_h(std::size_t i) const noexcept { return stderr_of(m2_h_[i]); }
  double stderr_v(std::size_t i) const noexcept { return stderr_of(m2_v_[i]); }

  /// Corrected Cov(N(p), N(mirror p)); NaN when p has no mirror.
  double pair_covariance(std::size_t i) const noexcept {
    if (mirror(i) == npos || count_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return co_n_[i] / static_cast<double>(count_ - 1);
  }

  /// Mean uncorrected H + V intensity image.
  std::vector<double> mean_total_image() const {
    std::vector<double> img(nx_ * ny_);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = mean_h_[i] + mean_v_[i];
    return img;
  }

 private:
  static void welford(double& mean, double& m2, double x, double inv_n) noexcept {
    const double d = x - mean;
    mean += d * inv_n;
    m2 += d * (x - mean);
  }
  static void chan(double& mean, double& m2, double mean_b, double m2_b, double na,
                   double nb) noexcept {
    const double n = na + nb;
    const double d = mean_b - mean;
    mean += d * (nb / n);
    m2 += m2_b + d * d * (na * nb / n);
  }
  double stderr_of(double m2) const noexcept {
    if (count_ < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(count_);
    return std::sqrt(m2 / (n - 1.0) / n);
  }

  std::size_t nx_, ny_;
  std::uint64_t count_ = 0;
  std::vector<double> mean_h_, m2_h_, mean_v_, m2_v_;
  std::vector<double> mean_n_, co_n_;
  std::vector<double> scratch_;
};

namespace spatial_detail {

/// 3x3 box average, truncated at the edges.
inline std::vector<double> box_smooth(const std::vector<double>& img, std::size_t nx,
                                      std::size_t ny) {
  std::vector<double> out(img.size());
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      double s = 0.0;
      int cnt = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const long xx = static_cast<long>(x) + dx, yy = static_cast<long>(y) + dy;
          if (xx < 0 || yy < 0 || xx >= static_cast<long>(nx) || yy >= static_cast<long>(ny)) continue;
          s += img[static_cast<std::size_t>(yy) * nx + static_cast<std::size_t>(xx)];
          ++cnt;
        }
      }
      out[y * nx + x] = s / cnt;
    }
  }
  return out;
}

inline double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace spatial_detail

struct IntersectionScanOptions {
  /// Rings must peak this many smoothed standard errors above zero.
  double ring_significance = 5.0;
  /// Fraction of each ring's maximum a pixel must reach.
  double ring_fraction = 0.5;
};

/// Symmetric pixel pair with the largest corrected Cov(N1, N2) among pixels
/// where both polarizations' smoothed mean intensities exceed half their
/// ring maxima, for the pixel and its mirror. pixel 1 is the left one.
inline PixelPairSelection scan_intersection_pixels(const SpatialAccumulator& acc,
                                                   const IntersectionScanOptions& opt = {}) {
  const std::size_t nx = acc.nx(), ny = acc.ny(), n = nx * ny;
  if (acc.count() < 2) throw StatisticsError("scan_intersection_pixels: no qualifying pair (no data)");

  std::vector<double> h(n), v(n), se_h(n), se_v(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = acc.corrected_mean_h(i);
    v[i] = acc.corrected_mean_v(i);
    se_h[i] = acc.stderr_h(i);
    se_v[i] = acc.stderr_v(i);
  }
  const auto sh = spatial_detail::box_smooth(h, nx, ny);
  const auto sv = spatial_detail::box_smooth(v, nx, ny);
  // Box of 9 independent pixels shrinks the noise by 3.
  const double noise_h = spatial_detail::median(se_h) / 3.0;
  const double noise_v = spatial_detail::median(se_v) / 3.0;
  const double max_h = *std::max_element(sh.begin(), sh.end());
  const double max_v = *std::max_element(sv.begin(), sv.end());
  if (!(max_h > opt.ring_significance * noise_h) || !(max_v > opt.ring_significance * noise_v)) {
    throw StatisticsError("scan_intersection_pixels: no qualifying pair (no ring above noise)");
  }

  auto on_both_rings = [&](std::size_t i) {
    return sh[i] >= opt.ring_fraction * max_h && sv[i] >= opt.ring_fraction * max_v;
  };
  std::size_t best = SpatialAccumulator::npos;
  double best_cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = acc.mirror(i);
    if (j == SpatialAccumulator::npos || j == i) continue;
    if (!on_both_rings(i) || !on_both_rings(j)) continue;
    const double c = acc.pair_covariance(i);
    if (c > best_cov) {
      best_cov = c;
      best = i;
    }
  }
  if (best == SpatialAccumulator::npos) {
    throw StatisticsError("scan_intersection_pixels: no qualifying pair");
  }
  const std::size_t j = acc.mirror(best);
  std::size_t a = best, b = j;
  if (a % nx > b % nx || (a % nx == b % nx && a / nx > b / nx)) std::swap(a, b);
  return {a % nx, a / nx, b % nx, b / nx};
}

// ---------------------------------------------------------------------------

/// Pixel-based geometry for a calibration-free demo crystal: the two rings
/// meet on the centre row at +-intersection_px, ring centres sit
/// +-center_offset_px off axis, and the amplified band reaches
/// band_fraction of the way to the Nyquist edge.
struct RingDesign {
  std::size_t n = 128;
  double dx = 1.0;
  double length = 1.0;
  int intersection_px = 20;
  int center_offset_px = 9;
  double band_fraction = 0.95;
  double diffraction_coeff = 0.5;
  double pump_waist = 256.0;
  /// Photons per mode at the intersection pixels.
  double target_photons = 0.01;
  double gain_threshold = 1e-3;
};

/// Mean square of the pump field over an n x n window.
inline double mean_square_pump(const CrystalParams& p, std::size_t n, double dx) {
  double s = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double f = p.pump(spatial_detail::pixel_position(x, n, dx),
                              spatial_detail::pixel_position(y, n, dx));
      s += f * f;
    }
  }
  return s / static_cast<double>(n * n);
}

inline CrystalParams design_crystal(const RingDesign& d) {
  if (!is_power_of_two(d.n)) throw ConfigError("design_crystal: n must be a power of two");
  CrystalParams p;
  p.length = d.length;
  p.pump_waist = d.pump_waist;
  p.diffraction_coeff = d.diffraction_coeff;
  p.gain_threshold = d.gain_threshold;

  // Low-gain far-field photons per mode ~ sinh^2(g L rms(pump)).
  p.gain = std::asinh(std::sqrt(d.target_photons)) /
           (d.length * std::sqrt(mean_square_pump(p, d.n, d.dx)));

  const double dq = 2.0 * std::numbers::pi / (static_cast<double>(d.n) * d.dx);
  const double qx = d.intersection_px * dq;
  const double half_offset = d.center_offset_px * dq;
  const double rho0_sq = qx * qx + half_offset * half_offset;
  const double q_nyquist = std::numbers::pi / d.dx;
  const double pump_spread =
      std::isfinite(d.pump_waist) ? std::sqrt(2.0 * std::log(1.0 / d.gain_threshold)) / d.pump_waist : 0.0;
  const double rho_band = d.band_fraction * (q_nyquist - half_offset) - pump_spread;
  if (!(rho_band * rho_band > rho0_sq)) throw ConfigError("design_crystal: rings do not fit the grid");

  const double delta_c = spatial_detail::cutoff_mismatch(p.gain, p.length, p.gain_threshold);
  const double a = delta_c / (2.0 * (rho_band * rho_band - rho0_sq));
  p.mismatch_coeff = a + d.diffraction_coeff;
  p.ring_offset = 2.0 * half_offset;
  p.ring_radius = std::sqrt(a * (rho0_sq + half_offset * half_offset) / p.mismatch_coeff);

  const double worst = spatial_detail::max_grid_mismatch(p, d.n, d.n, d.dx);
  const double steps = 1.05 * d.length * (worst + delta_c) / (2.0 * std::numbers::pi);
  p.nsteps = std::max(1, static_cast<int>(std::ceil(steps)));
  return p;
}

/// Intersection pixels implied by a RingDesign.
inline PixelPairSelection design_intersection(const RingDesign& d) {
  const std::size_t c = d.n / 2;
  const auto off = static_cast<std::size_t>(d.intersection_px);
  return {c - off, c, c + off, c};
}

}  // namespace wignerbell
