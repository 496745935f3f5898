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

// Bell estimators (CHSH B, Clauser-Horne C) over trajectory ensembles,
// their closed-form low-order predictions, and an exact Gaussian-moment
// oracle built on the Isserlis theorem.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>

#include "wignerbell/error.hpp"
#include "wignerbell/mode_engine.hpp"
#include "wignerbell/statistics.hpp"

namespace wignerbell {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
/// Quantum maximum of the Clauser-Horne ratio, (1 + sqrt 2) / 2.
inline constexpr double kClauserHorneMax = 0.5 * (1.0 + std::numbers::sqrt2);

struct BellResult {
  /// E at (theta1, theta2), (theta1, theta2'), (theta1', theta2), (theta1', theta2').
  std::array<double, 4> E{};
  double B = 0.0;
  double C = 0.0;
  double stderr_B = 0.0;
  double stderr_C = 0.0;
  double negative_fraction = 0.0;
  std::uint64_t n_trajectories = 0;
};

// ---------------------------------------------------------------------------
// Estimators on observable means

/// Normalized correlation at pixel-1 setting i and pixel-2 setting j:
/// mean[(I1+ - I1-)(I2+ - I2-)] / mean[(I1+ + I1-)(I2+ + I2-)], corrected.
inline double correlation_E(const ObservableVector& means, std::size_t i, std::size_t j) {
  const std::size_t k = obs::pair_index(i, j);
  const double den = means[obs::den(k)];
  if (!(den > 0.0)) {
    throw StatisticsError("correlation E: non-positive denominator " + std::to_string(den) +
                          " (insufficient statistics)");
  }
  return means[obs::num(k)] / den;
}

/// B = E(t1,t2) - E(t1,t2') + E(t1',t2') + E(t1',t2).
inline double chsh_B(double e11, double e12, double e21, double e22) noexcept {
  return e11 - e12 + e22 + e21;
}

inline double chsh_B(const ObservableVector& means) {
  return chsh_B(correlation_E(means, 0, 0), correlation_E(means, 0, 1),
                correlation_E(means, 1, 0), correlation_E(means, 1, 1));
}

/// Clauser-Horne ratio
///   [<N1+(t1)N2+(t2)> - <N1+(t1)N2+(t2')> + <N1+(t1')N2+(t2)> + <N1+(t1')N2+(t2')>]
///   / [<N1+(t1')> + <N2+(t2)>].
inline double ch_C(const ObservableVector& means) {
  using obs::coinc;
  using obs::pair_index;
  const double den = means[obs::single1p(1)] + means[obs::single2p(0)];
  if (!(den > 0.0)) {
    throw StatisticsError("Clauser-Horne C: non-positive singles denominator " +
                          std::to_string(den));
  }
  const double num = means[coinc(pair_index(0, 0))] - means[coinc(pair_index(0, 1))] +
                     means[coinc(pair_index(1, 0))] + means[coinc(pair_index(1, 1))];
  return num / den;
}

// ---------------------------------------------------------------------------
// Estimators on an accumulated ensemble

inline double correlation_E(const MomentAccumulator& acc, std::size_t i, std::size_t j) {
  return correlation_E(acc.total().moments.mean(), i, j);
}

inline double ch_C(const MomentAccumulator& acc) { return ch_C(acc.total().moments.mean()); }

/// Full estimate with delete-one-batch jackknife errors. Denominators must
/// exceed min_denominator_z of their own standard errors; the default only
/// requires them to be positive.
inline BellResult estimate_bell(const MomentAccumulator& acc, double min_denominator_z = 0.0) {
  const MomentBatch total = acc.total();
  const BellMoments& m = total.moments;
  if (total.count() == 0) throw StatisticsError("no trajectories accumulated");

  if (min_denominator_z > 0.0) {
    for (std::size_t k = 0; k < obs::kPairs; ++k) {
      const std::size_t d = obs::den(k);
      if (!(m.mean(d) > min_denominator_z * m.standard_error(d))) {
        throw StatisticsError("correlation E: denominator " + std::to_string(m.mean(d)) +
                              " not resolved above noise " + std::to_string(m.standard_error(d)));
      }
    }
    const double singles = m.mean(obs::single1p(1)) + m.mean(obs::single2p(0));
    const double singles_se = std::hypot(m.standard_error(obs::single1p(1)),
                                         m.standard_error(obs::single2p(0)));
    if (!(singles > min_denominator_z * singles_se)) {
      throw StatisticsError("Clauser-Horne C: singles denominator not resolved above noise");
    }
  }

  BellResult r;
  const ObservableVector& means = m.mean();
  r.E = {correlation_E(means, 0, 0), correlation_E(means, 0, 1), correlation_E(means, 1, 0),
         correlation_E(means, 1, 1)};
  const JackknifeResult b = jackknife(acc, [](const ObservableVector& v) { return chsh_B(v); });
  const JackknifeResult c = jackknife(acc, [](const ObservableVector& v) { return ch_C(v); });
  r.B = b.estimate;
  r.stderr_B = b.std_error;
  r.C = c.estimate;
  r.stderr_C = c.std_error;
  r.n_trajectories = total.count();
  r.negative_fraction =
      static_cast<double>(total.negatives) / static_cast<double>(total.count());
  return r;
}

// ---------------------------------------------------------------------------
// Closed-form predictions for the |psi+> source at gain G

struct AnalyticMoments {
  double mean_signal = 0.0;       ///< <N_S> = <N_I> = G
  double var_signal = 0.0;        ///< G + G^2 (thermal)
  double cov_signal_idler = 0.0;  ///< G + G^2 (pairs only)
  double mean_pixel = 0.0;        ///< <N1> = <N2> = 2G
  double var_pixel = 0.0;         ///< 2(G + G^2)
  double cov_pixels = 0.0;        ///< 2(G + G^2)
  double mean_pixel_product = 0.0;  ///< <N1 N2> = 2G + 6G^2

  /// <(N1+ - N1-)(N2+ - N2-)> = 2(G + G^2)(sin^2(t1 + t2) - cos^2(t1 + t2)).
  double difference_correlator(double theta1, double theta2) const noexcept {
    const double s = std::sin(theta1 + theta2);
    const double c = std::cos(theta1 + theta2);
    return cov_pixels * (s * s - c * c);
  }
};

inline AnalyticMoments analytic_moments(double G) {
  if (!(G >= 0.0)) throw ConfigError("analytic_moments: G must be >= 0");
  AnalyticMoments m;
  const double thermal = G + G * G;
  m.mean_signal = G;
  m.var_signal = thermal;
  m.cov_signal_idler = thermal;
  m.mean_pixel = 2.0 * G;
  m.var_pixel = 2.0 * thermal;
  m.cov_pixels = 2.0 * thermal;
  m.mean_pixel_product = 2.0 * G + 6.0 * G * G;
  return m;
}

/// Leading-order E(t1, t2) = -cos(2(t1 + t2)) (1 + G) / (1 + 3G).
inline double analytic_E(double G, double theta1, double theta2) {
  const AnalyticMoments m = analytic_moments(G);
  if (m.mean_pixel_product == 0.0) return 0.0;
  return m.difference_correlator(theta1, theta2) / m.mean_pixel_product;
}

/// CHSH value at the maximal-violation angles: 2 sqrt(2) (1 + G) / (1 + 3G).
inline double analytic_B(double G) {
  if (!(G >= 0.0)) throw ConfigError("analytic_B: G must be >= 0");
  return 2.0 * kSqrt2 * (1.0 + G) / (1.0 + 3.0 * G);
}

/// Leading form of the Clauser-Horne ratio, (1 + sqrt 2)/2 (1 + G) eta.
inline double analytic_C(double G, double eta) {
  if (!(G >= 0.0)) throw ConfigError("analytic_C: G must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("analytic_C: eta must lie in [0, 1]");
  return kClauserHorneMax * (1.0 + G) * eta;
}

/// Angles maximizing B for |psi+> under E = -cos(2(t1 + t2)):
/// (-pi/8, pi/8, pi/2, pi/4).
inline AnalyzerSetting optimal_angles() noexcept {
  using std::numbers::pi;
  return {-pi / 8.0, pi / 8.0, pi / 2.0, pi / 4.0};
}

/// The literal published set with theta2' = -pi/4, kept for audits. Gives
/// B = 0 for this source.
inline AnalyzerSetting literal_published_angles() noexcept {
  using std::numbers::pi;
  return {-pi / 8.0, pi / 8.0, pi / 2.0, -pi / 4.0};
}

// ---------------------------------------------------------------------------
// Exact Gaussian-moment oracle

/// Every ensemble expectation entering correlation_E and ch_C, computed
/// exactly. The eight source quadratures plus eight loss-port quadratures
/// form a zero-mean Gaussian vector; port amplitudes are real-linear in it,
/// and fourth moments follow from E[p^2 q^2] = s_pp s_qq + 2 s_pq^2.
struct WickPrediction {
  ObservableVector means{};
  std::array<double, 4> E{};
  double B = 0.0;
  double C = 0.0;
  /// False when some E or C denominator vanishes (no light).
  bool defined = false;
};

namespace wick_detail {

// Input complex modes: 0..3 source vacua (1H, 1V, 2H, 2V), 4..7 loss vacua
// feeding the ports (1+, 1-, 2+, 2-).
inline constexpr std::size_t kModes = 8;
inline constexpr std::size_t kReal = 2 * kModes;

/// z = sum_k u_k e_k + w_k conj(e_k) over the input modes e_k.
struct Linear {
  std::array<std::complex<double>, kModes> u{};
  std::array<std::complex<double>, kModes> w{};

  static Linear mode(std::size_t k) {
    Linear l;
    l.u[k] = 1.0;
    return l;
  }
  Linear conj() const {
    Linear l;
    for (std::size_t k = 0; k < kModes; ++k) {
      l.u[k] = std::conj(w[k]);
      l.w[k] = std::conj(u[k]);
    }
    return l;
  }
  friend Linear operator+(const Linear& a, const Linear& b) {
    Linear l;
    for (std::size_t k = 0; k < kModes; ++k) {
      l.u[k] = a.u[k] + b.u[k];
      l.w[k] = a.w[k] + b.w[k];
    }
    return l;
  }
  friend Linear operator*(double s, const Linear& a) {
    Linear l;
    for (std::size_t k = 0; k < kModes; ++k) {
      l.u[k] = s * a.u[k];
      l.w[k] = s * a.w[k];
    }
    return l;
  }
};

/// Real and imaginary parts as coefficient vectors over (x_0..x_7, y_0..y_7).
struct Quadratures {
  std::array<double, kReal> re{};
  std::array<double, kReal> im{};
};

inline Quadratures quadratures(const Linear& z) {
  Quadratures q;
  for (std::size_t k = 0; k < kModes; ++k) {
    const auto u = z.u[k];
    const auto w = z.w[k];
    q.re[k] = u.real() + w.real();
    q.re[kModes + k] = -u.imag() + w.imag();
    q.im[k] = u.imag() + w.imag();
    q.im[kModes + k] = u.real() - w.real();
  }
  return q;
}

inline double covariance(const std::array<double, kReal>& a, const std::array<double, kReal>& b) {
  double s = 0.0;
  for (std::size_t l = 0; l < kReal; ++l) s += a[l] * b[l];
  return 0.25 * s;
}

/// E[|z|^2], uncorrected.
inline double mean_intensity(const Quadratures& z) {
  return covariance(z.re, z.re) + covariance(z.im, z.im);
}

/// E[|za|^2 |zb|^2], uncorrected.
inline double mean_intensity_product(const Quadratures& a, const Quadratures& b) {
  double s = 0.0;
  for (const auto* p : {&a.re, &a.im}) {
    for (const auto* q : {&b.re, &b.im}) {
      const double spq = covariance(*p, *q);
      s += covariance(*p, *p) * covariance(*q, *q) + 2.0 * spq * spq;
    }
  }
  return s;
}

}  // namespace wick_detail

inline WickPrediction wick_oracle(double G, double eta, const AnalyzerSetting& angles) {
  using wick_detail::Linear;
  using wick_detail::Quadratures;
  if (!(G >= 0.0)) throw ConfigError("wick_oracle: G must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("wick_oracle: eta must lie in [0, 1]");

  const double r = std::asinh(std::sqrt(G));
  const double c = std::cosh(r);
  const double s = std::sinh(r);
  const Linear e1H = Linear::mode(0), e1V = Linear::mode(1);
  const Linear e2H = Linear::mode(2), e2V = Linear::mode(3);
  const Linear b1H = c * e1H + s * e2V.conj();
  const Linear b2V = c * e2V + s * e1H.conj();
  const Linear b1V = c * e1V + s * e2H.conj();
  const Linear b2H = c * e2H + s * e1V.conj();

  const double t = std::sqrt(eta);
  const double l = std::sqrt(1.0 - eta);
  auto port = [&](const Linear& h, const Linear& v, double theta, bool plus, std::size_t loss) {
    const double ct = std::cos(theta), st = std::sin(theta);
    const Linear field = plus ? ct * h + st * v : (-st) * h + ct * v;
    return wick_detail::quadratures(t * field + l * Linear::mode(4 + loss));
  };

  const double th1[2] = {angles.theta1, angles.theta1_prime};
  const double th2[2] = {angles.theta2, angles.theta2_prime};
  Quadratures p1[2], m1[2], p2[2], m2[2];
  for (std::size_t i = 0; i < 2; ++i) {
    p1[i] = port(b1H, b1V, th1[i], true, 0);
    m1[i] = port(b1H, b1V, th1[i], false, 1);
    p2[i] = port(b2H, b2V, th2[i], true, 2);
    m2[i] = port(b2H, b2V, th2[i], false, 3);
  }

  using wick_detail::mean_intensity;
  using wick_detail::mean_intensity_product;
  // Corrected products: <(Ia - 1/2)(Ib - 1/2)> = <Ia Ib> - (<Ia> + <Ib>)/2 + 1/4.
  auto corrected_product = [](const Quadratures& a, const Quadratures& b) {
    return mean_intensity_product(a, b) - 0.5 * (mean_intensity(a) + mean_intensity(b)) + 0.25;
  };

  WickPrediction out;
  for (std::size_t i = 0; i < 2; ++i) {
    out.means[obs::single1p(i)] = mean_intensity(p1[i]) - 0.5;
    out.means[obs::single1m(i)] = mean_intensity(m1[i]) - 0.5;
    out.means[obs::single2p(i)] = mean_intensity(p2[i]) - 0.5;
    out.means[obs::single2m(i)] = mean_intensity(m2[i]) - 0.5;
  }
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const std::size_t k = obs::pair_index(i, j);
      const double pp = corrected_product(p1[i], p2[j]);
      const double pm = corrected_product(p1[i], m2[j]);
      const double mp = corrected_product(m1[i], p2[j]);
      const double mm = corrected_product(m1[i], m2[j]);
      out.means[obs::num(k)] = pp - pm - mp + mm;
      out.means[obs::den(k)] = pp + pm + mp + mm;
      out.means[obs::coinc(k)] = pp;
    }
  }

  // Vanishing light shows up as denominators at round-off level.
  constexpr double kZero = 1e-14;
  bool defined = true;
  for (std::size_t k = 0; k < obs::kPairs; ++k) defined = defined && out.means[obs::den(k)] > kZero;
  defined = defined && out.means[obs::single1p(1)] + out.means[obs::single2p(0)] > kZero;
  out.defined = defined;
  if (defined) {
    out.E = {correlation_E(out.means, 0, 0), correlation_E(out.means, 0, 1),
             correlation_E(out.means, 1, 0), correlation_E(out.means, 1, 1)};
    out.B = chsh_B(out.E[0], out.E[1], out.E[2], out.E[3]);
    out.C = ch_C(out.means);
  }
  return out;
}

}  // namespace wignerbell
