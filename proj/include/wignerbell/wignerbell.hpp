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

#include "wignerbell/convergence.hpp"
#include "wignerbell/error.hpp"
#include "wignerbell/estimators.hpp"
#include "wignerbell/fft.hpp"
#include "wignerbell/mode_engine.hpp"
#include "wignerbell/phase_space.hpp"
#include "wignerbell/rng.hpp"
#include "wignerbell/runner.hpp"
#include "wignerbell/spatial_engine.hpp"
#include "wignerbell/statistics.hpp"
