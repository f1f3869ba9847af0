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

#include "kltmps/hardcase.hpp"

#include <cmath>
#include <string>

#include "kltmps/eval.hpp"

namespace kltmps {

void validate(const HardInstanceSpec& spec) {
  require(spec.contexts >= 2, "hard instance needs M >= 2");
  require(spec.gap >= 0.0 && spec.gap < 0.25, "hard instance gap c must lie in [0, 1/4)");
  require(spec.optimal_action.size() == static_cast<std::size_t>(spec.contexts),
          "one optimal action per context required");
  for (int a : spec.optimal_action) require(a == 0 || a == 1, "optimal actions must be 0 or 1");
}

BanditInstance build_hard_instance(const HardInstanceSpec& spec) {
  validate(spec);
  const bool reward = spec.flavor == HardFlavor::kRewardFeedback;
  const double base = reward ? 0.5 : 0.0;
  Eigen::MatrixXd table = Eigen::MatrixXd::Constant(spec.contexts, 2, base);
  for (int x = 0; x < spec.contexts; ++x) table(x, spec.optimal_action[x]) = base + spec.gap;
  return BanditInstance(ContextSpace::uniform_finite(static_cast<std::size_t>(spec.contexts)), 2,
                        RewardModel::tabular(std::move(table), 1.0), NoiseModel::bernoulli(),
                        ReferencePolicy::uniform(2));
}

std::vector<int> random_optimal_actions(int contexts, Rng& rng) {
  std::vector<int> out(static_cast<std::size_t>(contexts));
  for (auto& a : out) a = static_cast<int>(rng() >> 63);
  return out;
}

double bernoulli_kl(double p, double q) {
  require(p >= 0.0 && p <= 1.0 && q > 0.0 && q < 1.0, "Bernoulli parameters out of range");
  double kl = 0.0;
  if (p > 0.0) kl += p * std::log(p / q);
  if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return kl;
}

std::vector<KlBoundRow> kl_bound_check(std::span<const double> c_grid) {
  std::vector<KlBoundRow> rows;
  rows.reserve(c_grid.size());
  for (double c : c_grid) {
    if (!(c >= 0.0 && c < 0.25)) {
      throw Error(ErrorKind::kOutOfRange, "c = " + std::to_string(c) + " outside [0, 1/4)");
    }
    KlBoundRow r;
    r.c = c;
    r.reward_kl = bernoulli_kl(0.5 - c, 0.5 + c);
    r.reward_bound = 16.0 * c * c;
    r.preference_kl = bernoulli_kl(sigmoid(c), sigmoid(-c));
    r.preference_bound = c * c;
    r.holds = r.reward_kl <= r.reward_bound && r.preference_kl <= r.preference_bound;
    rows.push_back(r);
  }
  return rows;
}

ProbeReport lower_bound_probe(const HardInstanceSpec& spec, Algorithm algorithm,
                              std::span<const std::size_t> totals, int repeats, double eta,
                              std::uint64_t seed, const FitConfig& fit) {
  require(repeats >= 1, "probe needs at least one repeat");
  require(eta > 0.0, "eta must be positive");
  HardInstanceSpec base = spec;
  Feedback feedback = spec.flavor == HardFlavor::kRewardFeedback ? Feedback::kReward
                                                                 : Feedback::kPreference;
  if (algorithm == Algorithm::kTmps) feedback = Feedback::kReward;
  if (algorithm == Algorithm::kTmpsPf) feedback = Feedback::kPreference;
  base.flavor = feedback == Feedback::kReward ? HardFlavor::kRewardFeedback
                                              : HardFlavor::kPreferenceFeedback;

  ProbeReport report;
  report.cover_count = spec.contexts;
  report.model_count = std::ldexp(1.0, spec.contexts);
  for (std::size_t total : totals) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const SeedScope seeds(seed, static_cast<std::uint64_t>(r));
      Rng theta_rng = seeds.stream(Stage::kProbe, Purpose::kGeneric);
      base.optimal_action = random_optimal_actions(spec.contexts, theta_rng);
      const BanditInstance instance = build_hard_instance(base);
      double gap = 0.0;
      if (total == 0) {
        gap = suboptimality_gap(instance, instance.reference(), eta).gap;
      } else {
        AlgoConfig cfg;
        cfg.eta = eta;
        cfg.feedback = feedback;
        cfg.fit = fit;
        if (algorithm == Algorithm::kOffline) {
          cfg.m = total;
          cfg.n = 0;
        } else {
          cfg.m = (total + 1) / 2;
          cfg.n = total - cfg.m;
        }
        const RunResult run = run_algorithm(algorithm, instance, cfg, seeds);
        gap = suboptimality_gap(instance, run.policy, eta).gap;
      }
      sum += gap;
      sum_sq += gap * gap;
    }
    const double n = static_cast<double>(repeats);
    ProbePoint p;
    p.total = total;
    p.repeats = repeats;
    p.mean_gap = sum / n;
    if (repeats > 1) {
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
      p.std_error = std::sqrt(var / n);
    }
    report.points.push_back(p);
  }
  return report;
}

}  // namespace kltmps
