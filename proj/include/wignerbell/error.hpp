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

#include <stdexcept>
#include <string>

namespace wignerbell {

/// Invalid run configuration or out-of-range parameter. CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// The transverse grid cannot represent the phase-matched band. CLI exit code 3.
class SamplingError : public std::runtime_error {
 public:
  explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

/// An estimator was asked for a ratio whose denominator is not positive,
/// usually because the ensemble carries no light. CLI exit code 4.
class StatisticsError : public std::runtime_error {
 public:
  explicit StatisticsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wignerbell
