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

#include "doctest.h"
#include "kltmps/eval.hpp"
#include "kltmps/hardcase.hpp"

using namespace kltmps;

namespace {

HardInstanceSpec spec_of(int m, double c, HardFlavor flavor, std::uint64_t seed = 1) {
  Rng rng(seed);
  HardInstanceSpec s;
  s.contexts = m;
  s.gap = c;
  s.flavor = flavor;
  s.optimal_action = random_optimal_actions(m, rng);
  return s;
}

}  // namespace

TEST_CASE("reward flavor table") {
  const HardInstanceSpec s = spec_of(8, 0.1, HardFlavor::kRewardFeedback);
  const BanditInstance inst = build_hard_instance(s);
  const Eigen::MatrixXd& t = inst.truth().parameters();
  int high = 0;
  int low = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    high += t.data()[i] == doctest::Approx(0.6).epsilon(1e-15) ? 1 : 0;
    low += t.data()[i] == 0.5 ? 1 : 0;
  }
  CHECK(high == 8);
  CHECK(low == 8);
  for (int x = 0; x < 8; ++x) CHECK(t(x, s.optimal_action[x]) > t(x, 1 - s.optimal_action[x]));
  CHECK(inst.noise().kind() == NoiseModel::Kind::kBernoulli);
  CHECK(inst.truth().bound() == 1.0);
  CHECK(inst.reference().is_uniform());
}

TEST_CASE("preference flavor table") {
  const HardInstanceSpec s = spec_of(5, 0.2, HardFlavor::kPreferenceFeedback);
  const BanditInstance inst = build_hard_instance(s);
  const Eigen::MatrixXd& t = inst.truth().parameters();
  for (int x = 0; x < 5; ++x) {
    CHECK(t(x, s.optimal_action[x]) == 0.2);
    CHECK(t(x, 1 - s.optimal_action[x]) == 0.0);
  }
}

TEST_CASE("spec validation") {
  HardInstanceSpec s = spec_of(2, 0.1, HardFlavor::kRewardFeedback);
  s.gap = 0.25;
  CHECK_THROWS_AS(build_hard_instance(s), Error);
  s.gap = 0.1;
  s.contexts = 1;
  s.optimal_action = {0};
  CHECK_THROWS_AS(build_hard_instance(s), Error);
  s.contexts = 2;
  s.optimal_action = {0, 2};
  CHECK_THROWS_AS(build_hard_instance(s), Error);
}

TEST_CASE("the lower-bound gap choice stays below one quarter") {
  const double c = 8.0 * std::sqrt(0.001 / 4.0);
  CHECK(c == doctest::Approx(0.12649).epsilon(1e-4));
  CHECK(c < 0.25);
  CHECK_NOTHROW(build_hard_instance(spec_of(4, c, HardFlavor::kRewardFeedback)));
}

TEST_CASE("optimal policy closed form") {
  for (double eta : {0.5, 1.0, 4.0}) {
    for (auto flavor : {HardFlavor::kRewardFeedback, HardFlavor::kPreferenceFeedback}) {
      const HardInstanceSpec s = spec_of(6, 0.15, flavor);
      const BanditInstance inst = build_hard_instance(s);
      const SoftmaxPolicy star = planning_oracle(inst.truth(), inst.reference(), eta);
      const double expected = std::exp(eta * 0.15) / (std::exp(eta * 0.15) + 1.0);
      for (int x = 0; x < 6; ++x) {
        CHECK(star.probabilities(inst.contexts().at(x))(s.optimal_action[x]) ==
              doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("vanishing margin makes every policy optimal") {
  const BanditInstance inst = build_hard_instance(spec_of(4, 0.0, HardFlavor::kRewardFeedback));
  Eigen::MatrixXd skew(4, 2);
  skew << 3, 0, 0, 3, 1, 2, -1, 1;
  const SoftmaxPolicy p = planning_oracle(inst.truth().with_parameters(skew), inst.reference(), 1.0);
  const GapReport g = suboptimality_gap(inst, p, 1.0);
  CHECK(g.gap > 0.0);  // with c = 0 the optimum is pi0, so skewed policies lose only the KL
  const SoftmaxPolicy ref = planning_oracle(inst.truth(), inst.reference(), 1.0);
  CHECK(std::abs(suboptimality_gap(inst, ref, 1.0).gap) <= 1e-15);
  // c -> 0: the gap of a fixed policy shrinks with c.
  double previous = INFINITY;
  for (double c : {0.2, 0.1, 0.01, 0.001}) {
    const BanditInstance small = build_hard_instance(spec_of(4, c, HardFlavor::kRewardFeedback));
    const double gap = suboptimality_gap(small, small.reference(), 1.0).gap;
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous <= 1e-6);
}

TEST_CASE("Bernoulli KL") {
  CHECK(bernoulli_kl(0.3, 0.3) == 0.0);
  CHECK(bernoulli_kl(0.3, 0.7) == doctest::Approx(0.4 * std::log(7.0 / 3.0)).epsilon(1e-14));
  CHECK(bernoulli_kl(0.3, 0.7) == doctest::Approx(0.338919).epsilon(1e-5));
  CHECK(bernoulli_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("KL bounds on the margin grid") {
  std::vector<double> grid{0.0};
  for (int i = 1; i <= 24; ++i) grid.push_back(i / 100.0);
  const auto rows = kl_bound_check(grid);
  REQUIRE(rows.size() == grid.size());
  CHECK(rows[0].reward_kl == 0.0);
  CHECK(rows[0].preference_kl == 0.0);
  for (const auto& r : rows) {
    CHECK(r.holds);
    CHECK(r.reward_kl <= r.reward_bound);
    CHECK(r.preference_kl <= r.preference_bound);
    CHECK(r.reward_bound == doctest::Approx(16 * r.c * r.c));
    CHECK(r.preference_bound == doctest::Approx(r.c * r.c));
  }
  const auto& c20 = rows[20];
  CHECK(c20.c == doctest::Approx(0.2));
  CHECK(c20.reward_kl == doctest::Approx(0.4 * std::log(7.0 / 3.0)).epsilon(1e-12));
  CHECK(c20.reward_bound == doctest::Approx(0.64));
  const double bad[] = {0.25};
  try {
    kl_bound_check(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOutOfRange);
  }
}

TEST_CASE("probe with no data reports the reference gap") {
  const HardInstanceSpec s = spec_of(6, 0.2, HardFlavor::kRewardFeedback);
  const std::size_t totals[] = {0};
  const double eta = 2.0;
  const ProbeReport r = lower_bound_probe(s, Algorithm::kOffline, totals, 3, eta, 11);
  REQUIRE(r.points.size() == 1u);
  // KL(uniform || pi*) per context, identical for every theta map.
  const double p = std::exp(eta * 0.2) / (std::exp(eta * 0.2) + 1.0);
  const double kl = 0.5 * std::log(0.5 / p) + 0.5 * std::log(0.5 / (1.0 - p));
  CHECK(r.points[0].mean_gap == doctest::Approx(kl / eta).epsilon(1e-12));
  CHECK(r.cover_count == 6);
  CHECK(r.model_count == 64.0);
}

TEST_CASE("probe gaps fall with the budget and do not fall with more contexts") {
  const std::vector<std::size_t> totals{0, 16, 64, 256, 1024};
  const ProbeReport curve = lower_bound_probe(spec_of(4, 0.2, HardFlavor::kRewardFeedback),
                                              Algorithm::kOffline, totals, 10, 1.0, 21);
  int inversions = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    inversions += curve.points[i].mean_gap > curve.points[i - 1].mean_gap ? 1 : 0;
  }
  CHECK(inversions <= 1);

  const std::size_t fixed[] = {64};
  for (auto algorithm : {Algorithm::kOffline, Algorithm::kTmps}) {
    const ProbePoint small = lower_bound_probe(spec_of(4, 0.2, HardFlavor::kRewardFeedback),
                                               algorithm, fixed, 10, 1.0, 22).points[0];
    const ProbePoint large = lower_bound_probe(spec_of(8, 0.2, HardFlavor::kRewardFeedback),
                                               algorithm, fixed, 10, 1.0, 22).points[0];
    CHECK(large.mean_gap >= small.mean_gap - small.std_error);
  }
  const ProbeReport pf = lower_bound_probe(spec_of(4, 0.2, HardFlavor::kPreferenceFeedback),
                                           Algorithm::kTmpsPf, totals, 10, 1.0, 23);
  CHECK(pf.points.back().mean_gap < pf.points.front().mean_gap);
}
