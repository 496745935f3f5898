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
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace wignerbell {

/// Unnormalized in-place 2-D complex DFT over row-major (ny rows, nx
/// columns) data, backed by FFTW. Plans are created once per shape under a
/// global lock; execution is thread-safe. Plans use FFTW_ESTIMATE and
/// FFTW_UNALIGNED so the arithmetic does not depend on buffer alignment or
/// on timing, which keeps results bit-reproducible across threads.
class Fft2d {
 public:
  enum class Direction { kForward, kInverse };

  Fft2d(std::size_t nx, std::size_t ny)
      : nx_(nx), ny_(ny), forward_(plan(nx, ny, FFTW_FORWARD)), inverse_(plan(nx, ny, FFTW_BACKWARD)) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }

  void forward(std::span<std::complex<double>> data) const { run(forward_, data); }
  void inverse(std::span<std::complex<double>> data) const { run(inverse_, data); }
  void transform(std::span<std::complex<double>> data, Direction d) const {
    run(d == Direction::kForward ? forward_ : inverse_, data);
  }

 private:
  void run(fftw_plan p, std::span<std::complex<double>> data) const {
    if (data.size() != nx_ * ny_) throw std::invalid_argument("Fft2d: buffer size mismatch");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
  }

  static fftw_plan plan(std::size_t nx, std::size_t ny, int sign) {
    static std::mutex mutex;
    static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_tuple(nx, ny, sign);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    std::vector<std::complex<double>> scratch(nx * ny);
    auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), ptr, ptr, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw std::runtime_error("Fft2d: FFTW could not create a plan");
    cache.emplace(key, p);
    return p;
  }

  std::size_t nx_, ny_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

/// Signed frequency index of DFT bin k on an n-point axis, in [-n/2, n/2).
inline long signed_frequency_index(std::size_t k, std::size_t n) noexcept {
  const long kk = static_cast<long>(k);
  const long nn = static_cast<long>(n);
  return kk < (nn + 1) / 2 ? kk : kk - nn;
}

/// Moves the zero-frequency bin to index (nx/2, ny/2).
inline void fft_shift(std::span<std::complex<double>> data, std::size_t nx, std::size_t ny) {
  std::vector<std::complex<double>> out(data.size());
  for (std::size_t y = 0; y < ny; ++y) {
    const std::size_t ys = (y + ny / 2) % ny;
    for (std::size_t x = 0; x < nx; ++x) {
      out[ys * nx + (x + nx / 2) % nx] = data[y * nx + x];
    }
  }
  std::copy(out.begin(), out.end(), data.begin());
}

}  // namespace wignerbell
