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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "kltmps/algo.hpp"
#include "kltmps/eval.hpp"
#include "kltmps/instances.hpp"

using namespace kltmps;

namespace {

bool same_parameters(const RunResult& a, const RunResult& b) {
  const auto& p = a.policy.reward_estimate().parameters();
  const auto& q = b.policy.reward_estimate().parameters();
  return p.size() == q.size() && std::equal(p.data(), p.data() + p.size(), q.data());
}

}  // namespace

TEST_CASE("noiseless data recovers the optimal policy") {
  Rng rng(21);
  const BanditInstance linear = sphere_linear_instance(rng, 5, 3, 5.0, 0.0);
  AlgoConfig cfg;
  cfg.m = 300;
  const SeedScope seeds(1);
  for (auto algorithm : {Algorithm::kTmps, Algorithm::kOffline}) {
    const RunResult r = run_algorithm(algorithm, linear, cfg, seeds);
    const GapReport g = suboptimality_gap(linear, r.policy, cfg.eta, {20000, 3});
    CHECK(std::abs(g.gap) <= 1e-9);
  }
  Eigen::MatrixXd t(2, 2);
  t << 0.2, 0.8, 0.5, 0.1;
  const BanditInstance tab(ContextSpace::uniform_finite(2), 2, RewardModel::tabular(t, 1.0),
                           NoiseModel::gaussian(0.0), ReferencePolicy::uniform(2));
  cfg.m = 200;
  cfg.n = 50;
  const RunResult r = tmps_run(tab, cfg, seeds);
  CHECK(std::abs(suboptimality_gap(tab, r.policy, 1.0).gap) <= 1e-9);
}

TEST_CASE("the first stage needs samples") {
  Rng rng(22);
  const BanditInstance inst = random_tabular_instance(rng, 2, 2);
  AlgoConfig cfg;
  cfg.m = 0;
  CHECK_THROWS_AS(tmps_run(inst, cfg, SeedScope(1)), Error);
  cfg.feedback = Feedback::kPreference;
  CHECK_THROWS_AS(tmps_pf_run(inst, cfg, SeedScope(1)), Error);
}

TEST_CASE("feedback must match the algorithm") {
  Rng rng(23);
  const BanditInstance inst = random_tabular_instance(rng, 2, 2);
  AlgoConfig cfg;
  cfg.feedback = Feedback::kPreference;
  CHECK_THROWS_AS(tmps_run(inst, cfg, SeedScope(1)), Error);
  cfg.feedback = Feedback::kReward;
  CHECK_THROWS_AS(tmps_pf_run(inst, cfg, SeedScope(1)), Error);
}

TEST_CASE("runs are deterministic and n = 0 is the offline baseline") {
  Rng rng(24);
  const BanditInstance inst = random_tabular_instance(rng, 4, 3);
  AlgoConfig cfg;
  cfg.m = 50;
  cfg.n = 0;
  const SeedScope seeds(77, 3);
  CHECK(same_parameters(tmps_run(inst, cfg, seeds), tmps_run(inst, cfg, seeds)));
  CHECK(same_parameters(tmps_run(inst, cfg, seeds), offline_run(inst, cfg, seeds)));
  cfg.feedback = Feedback::kPreference;
  CHECK(same_parameters(tmps_pf_run(inst, cfg, seeds), offline_run(inst, cfg, seeds)));
  CHECK_FALSE(same_parameters(tmps_pf_run(inst, cfg, seeds), tmps_pf_run(inst, cfg, SeedScope(78, 3))));
}

TEST_CASE("stage batches have the configured sizes and sources") {
  Rng rng(25);
  const BanditInstance inst = random_tabular_instance(rng, 3, 3);
  AlgoConfig cfg;
  cfg.m = 40;
  cfg.n = 25;
  const RunResult r = tmps_run(inst, cfg, SeedScope(5));
  CHECK(std::get<RewardBatch>(r.trace.first_batch).size() == 40u);
  CHECK(std::get<RewardBatch>(r.trace.second_batch).size() == 25u);
  const RunResult off = offline_run(inst, cfg, SeedScope(5));
  CHECK(std::get<RewardBatch>(off.trace.first_batch).size() == 65u);
  // The offline batch starts with the same draws as stage one.
  const auto& a = std::get<RewardBatch>(r.trace.first_batch);
  const auto& b = std::get<RewardBatch>(off.trace.first_batch);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("equal rewards give back the reference policy") {
  const Eigen::MatrixXd t = Eigen::MatrixXd::Constant(3, 3, 0.4);
  const BanditInstance inst(ContextSpace::uniform_finite(3), 3, RewardModel::tabular(t, 1.0),
                            NoiseModel::bernoulli(), ReferencePolicy::uniform(3));
  AlgoConfig cfg;
  cfg.m = 10'000;
  cfg.n = 10'000;
  cfg.feedback = Feedback::kPreference;
  const RunResult r = tmps_pf_run(inst, cfg, SeedScope(9));
  double tv = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const Context x = inst.contexts().at(i);
    tv += 0.5 * (r.policy.probabilities(x) - inst.reference().probabilities(x)).cwiseAbs().sum() / 3.0;
  }
  CHECK(tv <= 0.02);
}

TEST_CASE("offline gaps shrink with the sample size") {
  Rng rng(26);
  const BanditInstance inst = sphere_linear_instance(rng);
  const std::vector<std::size_t> totals{128, 256, 512, 1024, 2048, 4096};
  std::vector<double> means;
  for (auto total : totals) {
    double sum = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      AlgoConfig cfg;
      cfg.m = total / 2;
      cfg.n = total / 2;
      const RunResult r = offline_run(inst, cfg, SeedScope(31, rep));
      sum += suboptimality_gap(inst, r.policy, 1.0, {20000, rep}).gap;
    }
    means.push_back(sum / 10);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < means.size(); ++i) inversions += means[i] > means[i - 1] ? 1 : 0;
  CHECK(inversions <= 1);
}

TEST_CASE("theorem sample sizes") {
  TheoryBudget b;
  b.epsilon = 0.1;
  b.delta = 0.1;
  b.coverage = 1.0;
  b.cover_count = 1.0;
  const SampleSizes s = theorem_sample_sizes(b, 1.0, 1.0, Feedback::kReward);
  CHECK(s.m == 384u);
  CHECK(s.m_raw == doctest::Approx(128.0 * std::log(20.0)));
  CHECK(s.n_raw == doctest::Approx(43.0 * 10.0 * std::log(20.0)));

  b.cover_count = 2.0;
  const SampleSizes two = theorem_sample_sizes(b, 1.0, 1.0, Feedback::kReward);
  CHECK(two.m == static_cast<std::size_t>(std::ceil(128.0 * std::log(40.0))));

  TheoryBudget half = b;
  half.epsilon = 0.05;
  const SampleSizes h = theorem_sample_sizes(half, 1.0, 1.0, Feedback::kReward);
  CHECK(h.m == two.m);
  CHECK(h.n_raw == doctest::Approx(2.0 * two.n_raw).epsilon(1e-15));

  const SampleSizes e = theorem_sample_sizes(b, 2.0, 1.0, Feedback::kReward);
  CHECK(e.m_raw == doctest::Approx(4.0 * two.m_raw).epsilon(1e-15));
  CHECK(e.n_raw == doctest::Approx(2.0 * two.n_raw).epsilon(1e-15));

  const SampleSizes p = theorem_sample_sizes(b, 1.0, 2.0, Feedback::kPreference);
  CHECK(p.m_raw == doctest::Approx(32.0 * std::exp(2.0) * std::log(40.0)));
  CHECK(p.n_raw == doctest::Approx(10.0 * std::exp(2.0) * std::log(40.0)));

  TheoryBudget bad = b;
  bad.delta = 0.2;
  CHECK_THROWS_AS(theorem_sample_sizes(bad, 1.0, 1.0, Feedback::kReward), Error);
}

TEST_CASE("names round trip") {
  for (auto a : {Algorithm::kTmps, Algorithm::kTmpsPf, Algorithm::kOffline}) {
    CHECK(parse_algorithm(to_string(a)) == a);
  }
  for (auto f : {Feedback::kReward, Feedback::kPreference}) CHECK(parse_feedback(to_string(f)) == f);
  CHECK_THROWS_AS(parse_algorithm("dpo"), Error);
}
