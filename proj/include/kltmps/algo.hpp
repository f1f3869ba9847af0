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

// Two-stage mixed-policy sampling (reward and preference feedback), the
// one-stage offline baseline, and theory-prescribed sample sizes.

#ifndef KLTMPS_ALGO_HPP_
#define KLTMPS_ALGO_HPP_

#include <cstddef>
#include <optional>
#include <string>

#include "kltmps/core.hpp"
#include "kltmps/estimate.hpp"

namespace kltmps {

enum class Feedback { kReward, kPreference };
enum class Algorithm { kTmps, kTmpsPf, kOffline };

const char* to_string(Feedback feedback);
const char* to_string(Algorithm algorithm);
Feedback parse_feedback(const std::string& name);
Algorithm parse_algorithm(const std::string& name);

struct AlgoConfig {
  double eta = 1.0;
  std::size_t m = 1;  // samples from the reference policy
  std::size_t n = 0;  // samples from the intermediate policy
  Feedback feedback = Feedback::kReward;
  // When fit.param_bound is infinite the instance's B is used.
  FitConfig fit;
};

struct RunTrace {
  FitResult first_fit;  // theta_0 on the first-stage data
  FitResult final_fit;  // theta on the pooled data
  SampleBatch first_batch;
  SampleBatch second_batch;
};

struct RunResult {
  SoftmaxPolicy policy;
  SoftmaxPolicy intermediate;
  RunTrace trace;
};

// Reward feedback. Stage one draws m samples with a ~ pi0, stage two draws n
// samples with a ~ pi_{theta_0}; the final least-squares fit pools both.
RunResult tmps_run(const BanditInstance& instance, const AlgoConfig& cfg,
                   const SeedScope& seeds);

// Preference feedback; both actions of a pair are independent draws from the
// stage policy.
RunResult tmps_pf_run(const BanditInstance& instance, const AlgoConfig& cfg,
                      const SeedScope& seeds);

// One stage of m + n samples from pi0 with cfg.feedback, one fit, one plan.
RunResult offline_run(const BanditInstance& instance, const AlgoConfig& cfg,
                      const SeedScope& seeds);

RunResult run_algorithm(Algorithm algorithm, const BanditInstance& instance,
                        const AlgoConfig& cfg, const SeedScope& seeds);

struct TheoryBudget {
  double epsilon = 0.1;
  double delta = 0.1;
  double cover_count = 2.0;  // N_R(cover_radius)
  double cover_radius = 0.1;
  double coverage = 1.0;  // D^2
};

// Leading constants of the prescribed sizes. The reward constants and the
// preference first-stage constant come from the analysis; the preference
// second-stage constant is not pinned there and defaults to 1.
struct TheoryConstants {
  double reward_first = 128.0;
  double reward_second = 43.0;
  double preference_first = 32.0;
  double preference_second = 1.0;
};

struct SampleSizes {
  std::size_t m = 0;
  std::size_t n = 0;
  double m_raw = 0.0;  // before rounding up
  double n_raw = 0.0;
};

// Reward:     m = ceil(128 eta^2 D^2 B^2 log(2N/delta)),
//             n = ceil(43 (eta/eps) B^2 log(2N/delta)).
// Preference: B^2 -> e^B with constants 32 and 1.
SampleSizes theorem_sample_sizes(const TheoryBudget& budget, double eta, double bound,
                                 Feedback feedback, const TheoryConstants& constants = {});

}  // namespace kltmps

#endif  // KLTMPS_ALGO_HPP_
