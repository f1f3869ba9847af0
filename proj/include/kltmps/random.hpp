// Copyright 2026 The kltmps Authors
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

// Random streams and the seed derivation scheme.
//
// Every experiment has one master seed. A stream is addressed by the tuple
// (repeat, stage, purpose) and its seed is
//
//   s = mix(mix(mix(mix(master) ^ repeat) ^ stage) ^ purpose)
//
// where mix is the SplitMix64 finalizer. Streams for different tuples are
// statistically independent, and the address of a stream never depends on
// how many draws another stream consumed, so repeats can run on any worker
// in any order and still reproduce bit-for-bit.

#ifndef KLTMPS_RANDOM_HPP_
#define KLTMPS_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace kltmps {

using Rng = std::mt19937_64;

enum class Stage : std::uint64_t {
  kTruth = 1,
  kFirst = 2,   // data collected with the reference policy
  kSecond = 3,  // data collected with the intermediate policy
  kEval = 4,
  kProbe = 5,
  kVerify = 6,
};

enum class Purpose : std::uint64_t {
  kContext = 1,
  kAction = 2,
  kFeedback = 3,
  kGeneric = 4,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repeat,
                                    Stage stage, Purpose purpose) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ repeat);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stage));
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

// The streams belonging to one repeat of one experiment.
class SeedScope {
 public:
  constexpr SeedScope(std::uint64_t master, std::uint64_t repeat = 0)
      : master_(master), repeat_(repeat) {}

  constexpr std::uint64_t master() const { return master_; }
  constexpr std::uint64_t repeat() const { return repeat_; }

  constexpr std::uint64_t seed(Stage stage, Purpose purpose) const {
    return derive_seed(master_, repeat_, stage, purpose);
  }

  Rng stream(Stage stage, Purpose purpose) const {
    return Rng(seed(stage, purpose));
  }

 private:
  std::uint64_t master_;
  std::uint64_t repeat_;
};

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace kltmps

#endif  // KLTMPS_RANDOM_HPP_
