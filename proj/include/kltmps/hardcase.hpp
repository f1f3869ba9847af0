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

// Lower-bound hard instances: M contexts, two actions, one good action per
// context with reward margin c.

#ifndef KLTMPS_HARDCASE_HPP_
#define KLTMPS_HARDCASE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kltmps/algo.hpp"
#include "kltmps/core.hpp"

namespace kltmps {

enum class HardFlavor { kRewardFeedback, kPreferenceFeedback };

struct HardInstanceSpec {
  int contexts = 2;                // M
  double gap = 0.1;                // c in (0, 1/4)
  std::vector<int> optimal_action;  // theta(x) in {0, 1}, one per context
  HardFlavor flavor = HardFlavor::kRewardFeedback;
};

void validate(const HardInstanceSpec& spec);

// Reward flavor: rewards 1/2 + c on theta(x) and 1/2 otherwise with Bernoulli
// feedback. Preference flavor: rewards c and 0. Uniform d0 and pi0, B = 1.
BanditInstance build_hard_instance(const HardInstanceSpec& spec);

// Uniformly random theta map for M contexts.
std::vector<int> random_optimal_actions(int contexts, Rng& rng);

double bernoulli_kl(double p, double q);

struct KlBoundRow {
  double c = 0.0;
  double reward_kl = 0.0;      // KL(Bern(1/2 - c) || Bern(1/2 + c))
  double reward_bound = 0.0;   // 16 c^2
  double preference_kl = 0.0;  // KL(Bern(sigma(c)) || Bern(sigma(-c)))
  double preference_bound = 0.0;  // c^2
  bool holds = false;
};

// Throws kOutOfRange unless every c lies in [0, 1/4).
std::vector<KlBoundRow> kl_bound_check(std::span<const double> c_grid);

struct ProbePoint {
  std::size_t total = 0;
  double mean_gap = 0.0;
  double std_error = 0.0;
  int repeats = 0;
};

struct ProbeReport {
  std::vector<ProbePoint> points;
  int cover_count = 0;        // N_R at the instance scale: M
  double model_count = 0.0;   // |Theta| = 2^M
};

// Runs `algorithm` on freshly drawn hard instances (theta map uniform per
// repeat) at each total budget and averages the exact gap. A total of zero
// returns pi0.
ProbeReport lower_bound_probe(const HardInstanceSpec& spec, Algorithm algorithm,
                              std::span<const std::size_t> totals, int repeats, double eta,
                              std::uint64_t seed, const FitConfig& fit = {});

}  // namespace kltmps

#endif  // KLTMPS_HARDCASE_HPP_
