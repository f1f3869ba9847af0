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

#include "kltmps/algo.hpp"

#include <cmath>

namespace kltmps {
namespace {

FitConfig resolve_fit(const BanditInstance& instance, const FitConfig& fit) {
  FitConfig out = fit;
  if (!std::isfinite(out.param_bound)) out.param_bound = instance.truth().bound();
  return out;
}

// Draws `count` samples with actions from `policy`. Contexts, actions and
// feedback each use their own stream of `stage`.
RewardBatch collect_rewards(const BanditInstance& instance, const Policy& policy,
                            std::size_t count, Rng& contexts, Rng& actions, Rng& feedback) {
  RewardBatch batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RewardSample s;
    s.x = sample_context(instance, contexts);
    s.action = policy.sample(s.x, actions);
    s.reward = sample_reward(instance, s.x, s.action, feedback);
    batch.push_back(std::move(s));
  }
  return batch;
}

PreferenceBatch collect_preferences(const BanditInstance& instance, const Policy& policy,
                                    std::size_t count, Rng& contexts, Rng& actions,
                                    Rng& feedback) {
  PreferenceBatch batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PreferenceSample s;
    s.x = sample_context(instance, contexts);
    const Eigen::VectorXd probs = policy.probabilities(s.x);
    s.first = sample_categorical(probs, actions);
    s.second = sample_categorical(probs, actions);
    s.label = preference_oracle(instance.truth(), s.x, s.first, s.second, feedback);
    batch.push_back(std::move(s));
  }
  return batch;
}

struct StageStreams {
  Rng contexts;
  Rng actions;
  Rng feedback;

  StageStreams(const SeedScope& seeds, Stage stage)
      : contexts(seeds.stream(stage, Purpose::kContext)),
        actions(seeds.stream(stage, Purpose::kAction)),
        feedback(seeds.stream(stage, Purpose::kFeedback)) {}
};

template <typename Batch>
Batch pooled(const Batch& first, const Batch& second) {
  Batch out;
  out.reserve(first.size() + second.size());
  out.insert(out.end(), first.begin(), first.end());
  out.insert(out.end(), second.begin(), second.end());
  return out;
}

template <typename Batch, typename Collect, typename Fit>
RunResult two_stage(const BanditInstance& instance, const AlgoConfig& cfg,
                    const SeedScope& seeds, Collect collect, Fit fit) {
  require(cfg.m >= 1, "the first stage needs m >= 1 samples");
  require(cfg.eta > 0.0, "eta must be positive");
  const ModelClass mc = ModelClass::of(instance);
  const FitConfig fit_cfg = resolve_fit(instance, cfg.fit);

  StageStreams first(seeds, Stage::kFirst);
  Batch first_batch = collect(instance, instance.reference(), cfg.m, first);
  FitResult first_fit = fit(first_batch, mc, fit_cfg);
  SoftmaxPolicy intermediate = planning_oracle(first_fit.model, instance.reference(), cfg.eta);

  StageStreams second(seeds, Stage::kSecond);
  Batch second_batch = collect(instance, intermediate, cfg.n, second);
  FitResult final_fit = cfg.n == 0 ? first_fit : fit(pooled(first_batch, second_batch), mc, fit_cfg);
  SoftmaxPolicy policy = planning_oracle(final_fit.model, instance.reference(), cfg.eta);

  return RunResult{std::move(policy), std::move(intermediate),
                   RunTrace{std::move(first_fit), std::move(final_fit),
                            std::move(first_batch), std::move(second_batch)}};
}

auto reward_collector() {
  return [](const BanditInstance& inst, const Policy& pol, std::size_t count, StageStreams& s) {
    return collect_rewards(inst, pol, count, s.contexts, s.actions, s.feedback);
  };
}

auto preference_collector() {
  return [](const BanditInstance& inst, const Policy& pol, std::size_t count, StageStreams& s) {
    return collect_preferences(inst, pol, count, s.contexts, s.actions, s.feedback);
  };
}

auto least_squares() {
  return [](const RewardBatch& b, const ModelClass& mc, const FitConfig& c) {
    return least_squares_fit(b, mc, c);
  };
}

auto bradley_terry() {
  return [](const PreferenceBatch& b, const ModelClass& mc, const FitConfig& c) {
    return bt_mle_fit(b, mc, c);
  };
}

}  // namespace

const char* to_string(Feedback feedback) {
  return feedback == Feedback::kReward ? "reward" : "preference";
}

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kTmps: return "tmps";
    case Algorithm::kTmpsPf: return "tmps_pf";
    case Algorithm::kOffline: return "offline";
  }
  return "?";
}

Feedback parse_feedback(const std::string& name) {
  if (name == "reward") return Feedback::kReward;
  if (name == "preference") return Feedback::kPreference;
  throw Error(ErrorKind::kInvalidArgument, "unknown feedback '" + name + "'");
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "tmps") return Algorithm::kTmps;
  if (name == "tmps_pf") return Algorithm::kTmpsPf;
  if (name == "offline") return Algorithm::kOffline;
  throw Error(ErrorKind::kInvalidArgument, "unknown algorithm '" + name + "'");
}

RunResult tmps_run(const BanditInstance& instance, const AlgoConfig& cfg,
                   const SeedScope& seeds) {
  require(cfg.feedback == Feedback::kReward, "tmps_run needs reward feedback");
  return two_stage<RewardBatch>(instance, cfg, seeds, reward_collector(), least_squares());
}

RunResult tmps_pf_run(const BanditInstance& instance, const AlgoConfig& cfg,
                      const SeedScope& seeds) {
  require(cfg.feedback == Feedback::kPreference, "tmps_pf_run needs preference feedback");
  require(instance.num_actions() >= 2, "preference feedback needs at least two actions");
  return two_stage<PreferenceBatch>(instance, cfg, seeds, preference_collector(),
                                    bradley_terry());
}

RunResult offline_run(const BanditInstance& instance, const AlgoConfig& cfg,
                      const SeedScope& seeds) {
  AlgoConfig single = cfg;
  single.m = cfg.m + cfg.n;
  single.n = 0;
  if (cfg.feedback == Feedback::kReward) {
    return two_stage<RewardBatch>(instance, single, seeds, reward_collector(), least_squares());
  }
  require(instance.num_actions() >= 2, "preference feedback needs at least two actions");
  return two_stage<PreferenceBatch>(instance, single, seeds, preference_collector(),
                                    bradley_terry());
}

RunResult run_algorithm(Algorithm algorithm, const BanditInstance& instance,
                        const AlgoConfig& cfg, const SeedScope& seeds) {
  switch (algorithm) {
    case Algorithm::kTmps: return tmps_run(instance, cfg, seeds);
    case Algorithm::kTmpsPf: return tmps_pf_run(instance, cfg, seeds);
    case Algorithm::kOffline: return offline_run(instance, cfg, seeds);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown algorithm");
}

SampleSizes theorem_sample_sizes(const TheoryBudget& b, double eta, double bound,
                                 Feedback feedback, const TheoryConstants& k) {
  require(b.epsilon > 0 && b.cover_count > 0 && b.cover_radius > 0 && b.coverage > 0,
          "theory budget entries must be positive");
  require(b.delta > 0 && b.delta < 0.2, "delta must lie in (0, 1/5)");
  require(eta > 0 && bound > 0, "eta and B must be positive");
  const double log_term = std::log(2.0 * b.cover_count / b.delta);
  const double scale = feedback == Feedback::kReward ? bound * bound : std::exp(bound);
  const double c_first = feedback == Feedback::kReward ? k.reward_first : k.preference_first;
  const double c_second = feedback == Feedback::kReward ? k.reward_second : k.preference_second;
  SampleSizes s;
  s.m_raw = c_first * eta * eta * b.coverage * scale * log_term;
  s.n_raw = c_second * (eta / b.epsilon) * scale * log_term;
  s.m = static_cast<std::size_t>(std::ceil(s.m_raw));
  s.n = static_cast<std::size_t>(std::ceil(s.n_raw));
  return s;
}

}  // namespace kltmps
