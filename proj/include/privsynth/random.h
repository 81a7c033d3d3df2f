//
// Copyright 2026 The privsynth Authors
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
//

#ifndef PRIVSYNTH_RANDOM_H_
#define PRIVSYNTH_RANDOM_H_

#include <cstdint>
#include <random>

#include "privsynth/linalg.h"

namespace privsynth {

// Streams are keyed by (seed, run, tag) so every trajectory and every noise
// source draws from its own generator regardless of scheduling.
enum class StreamTag : std::uint32_t {
  kInitialState = 1,
  kProcessNoise = 2,
  kMeasurementNoise = 3,
  kOutputMechanism = 4,
  kInputMechanism = 5,
};

std::mt19937_64 MakeStream(std::uint64_t seed, std::uint64_t run, StreamTag tag);

// n independent N(0, 1) draws.
VectorXd StandardNormal(std::mt19937_64& rng, Eigen::Index n);

}  // namespace privsynth

#endif  // PRIVSYNTH_RANDOM_H_
