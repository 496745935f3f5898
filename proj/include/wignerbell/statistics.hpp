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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "wignerbell/mode_engine.hpp"

namespace wignerbell {

/// Welford means and centered second moments of a fixed-size observable
/// vector. Merging uses the Chan et al. pairwise update, so a fixed merge
/// order gives bit-identical results.
template <std::size_t K>
class RunningMoments {
 public:
  using Vector = std::array<double, K>;

  void update(const Vector& x) noexcept {
    ++count_;
    const double inv_n = 1.0 / static_cast<double>(count_);
    for (std::size_t k = 0; k < K; ++k) {
      const double delta = x[k] - mean_[k];
      mean_[k] += delta * inv_n;
      m2_[k] += delta * (x[k] - mean_[k]);
    }
  }

  void merge(const RunningMoments& other) noexcept {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    for (std::size_t k = 0; k < K; ++k) {
      const double delta = other.mean_[k] - mean_[k];
      mean_[k] += delta * (nb / n);
      m2_[k] += other.m2_[k] + delta * delta * (na * nb / n);
    }
    count_ += other.count_;
  }

  std::uint64_t count() const noexcept { return count_; }
  const Vector& mean() const noexcept { return mean_; }
  double mean(std::size_t k) const noexcept { return mean_[k]; }
  /// Unbiased sample variance of observable k.
  double variance(std::size_t k) const noexcept {
    return count_ > 1 ? m2_[k] / static_cast<double>(count_ - 1)
                      : std::numeric_limits<double>::quiet_NaN();
  }
  /// Standard error of the mean of observable k.
  double standard_error(std::size_t k) const noexcept {
    return std::sqrt(variance(k) / static_cast<double>(count_));
  }

 private:
  std::uint64_t count_ = 0;
  Vector mean_{};
  Vector m2_{};
};

/// Per-trajectory quantities tracked for the Bell estimators. Index k = 2i + j
/// addresses the pixel-1 setting i (0: theta1, 1: theta1') and the pixel-2
/// setting j (0: theta2, 1: theta2'). All intensities are corrected.
namespace obs {
inline constexpr std::size_t kPairs = 4;
/// (I1+ - I1-)(I2+ - I2-)
constexpr std::size_t num(std::size_t k) { return k; }
/// (I1+ + I1-)(I2+ + I2-)
constexpr std::size_t den(std::size_t k) { return 4 + k; }
/// I1+ I2+
constexpr std::size_t coinc(std::size_t k) { return 8 + k; }
constexpr std::size_t single1p(std::size_t i) { return 12 + i; }
constexpr std::size_t single1m(std::size_t i) { return 14 + i; }
constexpr std::size_t single2p(std::size_t j) { return 16 + j; }
constexpr std::size_t single2m(std::size_t j) { return 18 + j; }
inline constexpr std::size_t kCount = 20;

constexpr std::size_t pair_index(std::size_t i, std::size_t j) { return 2 * i + j; }
}  // namespace obs

using ObservableVector = std::array<double, obs::kCount>;
using BellMoments = RunningMoments<obs::kCount>;

inline ObservableVector observables_of(const TrajectoryPorts& t) noexcept {
  ObservableVector x{};
  for (std::size_t i = 0; i < 2; ++i) {
    const PortIntensities& p1 = t.at[i];
    x[obs::single1p(i)] = p1.I1p;
    x[obs::single1m(i)] = p1.I1m;
    for (std::size_t j = 0; j < 2; ++j) {
      const PortIntensities& p2 = t.at[j];
      const std::size_t k = obs::pair_index(i, j);
      x[obs::num(k)] = (p1.I1p - p1.I1m) * (p2.I2p - p2.I2m);
      x[obs::den(k)] = (p1.I1p + p1.I1m) * (p2.I2p + p2.I2m);
      x[obs::coinc(k)] = p1.I1p * p2.I2p;
    }
  }
  for (std::size_t j = 0; j < 2; ++j) {
    x[obs::single2p(j)] = t.at[j].I2p;
    x[obs::single2m(j)] = t.at[j].I2m;
  }
  return x;
}

/// Trajectories whose corrected pixel totals have N1 N2 < 0, at the first
/// analyzer setting.
inline bool is_negative_trajectory(const TrajectoryPorts& t) noexcept {
  return t.at[0].pixel1() * t.at[0].pixel2() < 0.0;
}

/// Moments of one contiguous run of trajectories.
struct MomentBatch {
  std::uint64_t first_index = 0;
  BellMoments moments;
  std::uint64_t negatives = 0;

  std::uint64_t count() const noexcept { return moments.count(); }
  void update(const TrajectoryPorts& t) noexcept {
    moments.update(observables_of(t));
    if (is_negative_trajectory(t)) ++negatives;
  }
  void merge(const MomentBatch& other) noexcept {
    moments.merge(other.moments);
    negatives += other.negatives;
  }
};

/// Reduces batches left to right in a fixed binary tree.
inline MomentBatch reduce_batches(std::vector<MomentBatch> level) {
  if (level.empty()) return {};
  while (level.size() > 1) {
    std::vector<MomentBatch> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      MomentBatch m = level[i];
      m.merge(level[i + 1]);
      next.push_back(std::move(m));
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  return level.front();
}

/// Mergeable accumulator of all Bell-estimator moments for one analyzer
/// configuration. Keeps its trajectories as batches ordered by first
/// trajectory index; the batches are the jackknife groups, and totals are a
/// fixed-tree reduction over them, so merge(a, b) and merge(b, a) agree
/// bit for bit.
class MomentAccumulator {
 public:
  MomentAccumulator(AnalyzerSetting angles, double efficiency)
      : angles_(angles), efficiency_(efficiency) {}

  const AnalyzerSetting& angles() const noexcept { return angles_; }
  double efficiency() const noexcept { return efficiency_; }

  /// Opens a new batch starting at the given trajectory index.
  void begin_batch(std::uint64_t first_index) {
    if (!batches_.empty() && first_index < batches_.back().first_index + batches_.back().count()) {
      throw std::invalid_argument("begin_batch: batches must be opened in index order");
    }
    batches_.push_back(MomentBatch{first_index, {}, 0});
  }

  void update(const TrajectoryPorts& t) {
    if (batches_.empty()) begin_batch(0);
    batches_.back().update(t);
  }

  void add_batch(MomentBatch b) {
    MomentAccumulator one(angles_, efficiency_);
    one.batches_.push_back(std::move(b));
    merge(one);
  }

  /// Combines the trajectories of another accumulator of the same
  /// configuration. Index ranges must not overlap.
  void merge(const MomentAccumulator& other) {
    if (!(angles_ == other.angles_) || efficiency_ != other.efficiency_) {
      throw std::invalid_argument("MomentAccumulator::merge: configuration mismatch");
    }
    std::vector<MomentBatch> all;
    all.reserve(batches_.size() + other.batches_.size());
    std::merge(batches_.begin(), batches_.end(), other.batches_.begin(), other.batches_.end(),
               std::back_inserter(all),
               [](const MomentBatch& a, const MomentBatch& b) { return a.first_index < b.first_index; });
    for (std::size_t i = 1; i < all.size(); ++i) {
      if (all[i].first_index < all[i - 1].first_index + all[i - 1].count()) {
        throw std::invalid_argument("MomentAccumulator::merge: overlapping trajectory ranges");
      }
    }
    batches_ = std::move(all);
  }

  const std::vector<MomentBatch>& batches() const noexcept { return batches_; }

  MomentBatch total() const { return reduce_batches(batches_); }

  std::uint64_t count() const noexcept {
    std::uint64_t n = 0;
    for (const auto& b : batches_) n += b.count();
    return n;
  }

  double negative_fraction() const {
    const MomentBatch t = total();
    return t.count() ? static_cast<double>(t.negatives) / static_cast<double>(t.count()) : 0.0;
  }

 private:
  AnalyzerSetting angles_;
  double efficiency_;
  std::vector<MomentBatch> batches_;
};

struct JackknifeResult {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Delete-one-batch jackknife of a statistic of the observable means.
/// estimator is called on the full-ensemble means and on each
/// leave-one-batch-out set. Needs at least two non-empty batches; otherwise
/// stderr is NaN.
template <class Estimator>
JackknifeResult jackknife(const MomentAccumulator& acc, Estimator&& estimator) {
  const MomentBatch total = acc.total();
  JackknifeResult out;
  out.estimate = estimator(total.moments.mean());

  std::vector<const MomentBatch*> groups;
  for (const auto& b : acc.batches())
    if (b.count() > 0) groups.push_back(&b);
  const std::size_t g = groups.size();
  if (g < 2) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const double n = static_cast<double>(total.count());
  std::vector<double> replicates;
  replicates.reserve(g);
  for (const MomentBatch* b : groups) {
    const double nb = static_cast<double>(b->count());
    ObservableVector loo{};
    for (std::size_t k = 0; k < obs::kCount; ++k) {
      loo[k] = (n * total.moments.mean(k) - nb * b->moments.mean(k)) / (n - nb);
    }
    replicates.push_back(estimator(loo));
  }
  double mean = 0.0;
  for (double r : replicates) mean += r;
  mean /= static_cast<double>(g);
  double ss = 0.0;
  for (double r : replicates) ss += (r - mean) * (r - mean);
  out.std_error = std::sqrt(static_cast<double>(g - 1) / static_cast<double>(g) * ss);
  return out;
}

/// Standard error of a mean uncorrected pixel intensity (signal plus idler,
/// each thermal with standard deviation equal to its mean):
/// mean * sqrt(2) / sqrt(n).
inline double stderr_mean(double mean_uncorrected, double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("stderr_mean: n must be >= 1");
  return mean_uncorrected * std::sqrt(2.0) / std::sqrt(n);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const noexcept { return 0.5 * (hi - lo); }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Two-sided normal-approximation interval.
inline Interval confidence_interval(double estimate, double std_error, double level = 0.95) {
  if (!(std_error >= 0.0)) throw std::invalid_argument("confidence_interval: std_error must be >= 0");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence_interval: level must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> unit;
  const double z = boost::math::quantile(unit, 0.5 + 0.5 * level);
  return {estimate - z * std_error, estimate + z * std_error};
}

}  // namespace wignerbell
