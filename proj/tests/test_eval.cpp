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
#include "kltmps/instances.hpp"

using namespace kltmps;

namespace {

BanditInstance one_context(double r0, double r1) {
  Eigen::MatrixXd t(1, 2);
  t << r0, r1;
  return BanditInstance(ContextSpace::uniform_finite(1), 2, RewardModel::tabular(t, 1.0),
                        NoiseModel::bernoulli(), ReferencePolicy::uniform(2));
}

}  // namespace

TEST_CASE("objective of the optimal policy on one context") {
  const BanditInstance inst = one_context(1.0, 0.0);
  const SoftmaxPolicy star = planning_oracle(inst.truth(), inst.reference(), 1.0);
  const Estimate q = objective_q(inst, star, 1.0);
  CHECK(q.method == EvalMethod::kExactFinite);
  CHECK(q.value == doctest::Approx(std::log((std::exp(1.0) + 1.0) / 2.0)).epsilon(1e-14));
  CHECK(q.value == doctest::Approx(0.62011).epsilon(1e-5));
}

TEST_CASE("objective of the reference policy is its mean reward") {
  Rng rng(41);
  const BanditInstance inst = random_tabular_instance(rng, 4, 3);
  const SoftmaxPolicy same = planning_oracle(
      inst.truth().with_parameters(Eigen::MatrixXd::Zero(4, 3)), inst.reference(), 2.0);
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Context x = inst.contexts().at(i);
    expected += 0.25 * inst.reference().probabilities(x).dot(inst.truth().values(x));
  }
  CHECK(objective_q(inst, same, 2.0).value == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gap of the reference policy is its KL to the optimum") {
  const BanditInstance inst = one_context(1.0, 0.0);
  const SoftmaxPolicy ref = planning_oracle(inst.truth().with_parameters(Eigen::MatrixXd::Zero(1, 2)),
                                            inst.reference(), 1.0);
  const GapReport g = suboptimality_gap(inst, ref, 1.0);
  const double e = std::exp(1.0);
  const double kl = 0.5 * std::log(0.5 * (1 + e) / e) + 0.5 * std::log(0.5 * (1 + e));
  CHECK(g.gap == doctest::Approx(kl).epsilon(1e-14));
  CHECK(g.gap == doctest::Approx(0.12011).epsilon(1e-4));
  CHECK(std::abs(g.gap - g.kl_form) <= 1e-12);
}

TEST_CASE("the optimal policy has zero gap and any policy a nonnegative one") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const BanditInstance inst = random_tabular_instance(rng, 5, 4);
    const double eta = 0.5 + 3.0 * uniform01(rng);
    const GapReport star =
        suboptimality_gap(inst, planning_oracle(inst.truth(), inst.reference(), eta), eta);
    CHECK(std::abs(star.gap) <= 1e-9);
    Eigen::MatrixXd noise(5, 4);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = uniform01(rng);
    const GapReport other = suboptimality_gap(
        inst, planning_oracle(inst.truth().with_parameters(noise), inst.reference(), eta), eta);
    CHECK(other.gap >= -1e-9);
    CHECK(std::abs(other.gap - other.kl_form) <= 1e-9);
  }
}

TEST_CASE("monte carlo gaps on continuous contexts") {
  Rng rng(43);
  const BanditInstance inst = sphere_linear_instance(rng);
  const SoftmaxPolicy star = planning_oracle(inst.truth(), inst.reference(), 1.0);
  const GapReport zero = suboptimality_gap(inst, star, 1.0, {50000, 5});
  CHECK(zero.method == EvalMethod::kMonteCarlo);
  CHECK(zero.n_eval == 50000u);
  CHECK(std::abs(zero.gap) <= std::max(3 * zero.std_error, 1e-12));

  Eigen::MatrixXd perturbed = inst.truth().parameters();
  perturbed(0, 0) += 0.5;
  const SoftmaxPolicy hat = planning_oracle(inst.truth().with_parameters(perturbed), inst.reference(), 1.0);
  const GapReport g = suboptimality_gap(inst, hat, 1.0, {50000, 5});
  CHECK(g.gap > 0.0);
  CHECK(g.std_error > 0.0);
  CHECK(std::abs(g.gap - g.kl_form) <= 1e-9);
  // A larger evaluation sample agrees within a few standard errors.
  const GapReport big = suboptimality_gap(inst, hat, 1.0, {400000, 6});
  CHECK(std::abs(big.gap - g.gap) <= 4 * (g.std_error + big.std_error));
}

TEST_CASE("policies outside the reference support are rejected") {
  Eigen::MatrixXd rows(1, 2);
  rows << 1.0, 0.0;
  Eigen::MatrixXd t(1, 2);
  t << 0.5, 0.5;
  const BanditInstance inst(ContextSpace::uniform_finite(1), 2, RewardModel::tabular(t, 1.0),
                            NoiseModel::bernoulli(), ReferencePolicy::table(rows));
  const SoftmaxPolicy outside(ReferencePolicy::uniform(2), 1.0, inst.truth());
  try {
    objective_q(inst, outside, 1.0);
    FAIL("expected a support violation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSupportViolation);
  }
}

TEST_CASE("decomposition with the true parameters is trivial") {
  Rng rng(44);
  const BanditInstance inst = random_tabular_instance(rng, 3, 3);
  const Decomposition d = decomposition_check(inst, inst.truth(), 1.0);
  CHECK(std::abs(d.gap) <= 1e-12);
  CHECK(d.j_identity_residual <= 1e-12);
  CHECK(d.mvt_residual <= 1e-12);
  CHECK(d.second_moment_bound == 0.0);
}

TEST_CASE("decomposition identities on random tabular draws") {
  Rng rng(45);
  const double etas[] = {0.5, 1.0, 4.0};
  for (int draw = 0; draw < 50; ++draw) {
    const BanditInstance inst = random_tabular_instance(rng, 3, 3);
    Eigen::MatrixXd hat(3, 3);
    for (Eigen::Index i = 0; i < hat.size(); ++i) hat.data()[i] = uniform01(rng);
    const double eta = etas[draw % 3];
    const Decomposition d = decomposition_check(inst, inst.truth().with_parameters(hat), eta);
    CHECK(d.j_identity_residual <= 1e-9);
    CHECK(d.mvt_residual <= 1e-6 * (1.0 + d.gap));
    CHECK(d.mvt_gamma >= 0.0);
    CHECK(d.mvt_gamma <= 1.0);
    CHECK(d.gap <= d.second_moment_bound + 1e-6);
  }
}

TEST_CASE("decomposition needs finite contexts") {
  Rng rng(46);
  const BanditInstance inst = sphere_linear_instance(rng, 3, 2);
  try {
    decomposition_check(inst, inst.truth(), 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kContinuousContexts);
  }
}

TEST_CASE("coverage closed forms") {
  Rng rng(47);
  SUBCASE("single context, single action") {
    const BanditInstance inst = random_tabular_instance(rng, 1, 1);
    const CoverageReport c = coverage_coefficients(inst, ModelClass::of(inst));
    CHECK(c.d2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.c_global == 1.0);
  }
  SUBCASE("tabular uniform") {
    for (int m = 1; m <= 5; ++m) {
      for (int a = 1; a <= 4; ++a) {
        const BanditInstance inst = random_tabular_instance(rng, m, a);
        const CoverageReport c = coverage_coefficients(inst, ModelClass::of(inst), 1.5);
        CHECK(c.d2 == doctest::Approx(m * a).epsilon(1e-12));
        // Centered one-hot: block covariance (I - J/A)/(M A), leverage M (A - 1).
        CHECK(c.d2_centered == doctest::Approx(m * (a - 1)).epsilon(1e-9));
        CHECK(c.c_global == static_cast<double>(a));
        CHECK(c.rho == doctest::Approx(3.0));
        CHECK(c.c_local_bound == doctest::Approx(std::exp(3.0)));
        CHECK_FALSE(c.lower_estimate);
      }
    }
  }
  SUBCASE("M = 4, A = 2 is exactly 8") {
    const BanditInstance inst = random_tabular_instance(rng, 4, 2);
    CHECK(coverage_coefficients(inst, ModelClass::of(inst)).d2 == doctest::Approx(8.0).epsilon(1e-14));
  }
  SUBCASE("sphere contexts") {
    const BanditInstance inst = sphere_linear_instance(rng);
    const CoverageReport c = coverage_coefficients(inst, ModelClass::of(inst));
    CHECK(c.d2 >= 40.0);
    CHECK(c.d2 <= 60.0);
    CHECK(c.c_global == 5.0);
    CHECK(c.lower_estimate);
  }
  SUBCASE("non-uniform reference") {
    Eigen::MatrixXd rows(2, 2);
    rows << 0.25, 0.75, 0.5, 0.5;
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(2, 2, 0.5);
    const BanditInstance inst(ContextSpace::finite({0.5, 0.5}), 2, RewardModel::tabular(t, 1.0),
                              NoiseModel::bernoulli(), ReferencePolicy::table(rows));
    const CoverageReport c = coverage_coefficients(inst, ModelClass::of(inst));
    // Leverage of a one-hot cell is 1 / (d0(x) pi0(a|x)).
    CHECK(c.d2 == doctest::Approx(8.0));
    CHECK(c.c_global == 4.0);
  }
}

TEST_CASE("leverages match an explicit inverse and flag the null space") {
  Eigen::MatrixXd design(3, 2);
  design << 1, 0, 0, 2, 1, 1;
  Eigen::VectorXd w(3);
  w << 0.2, 0.3, 0.5;
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 3; ++i) sigma += w(i) * design.row(i).transpose() * design.row(i);
  const Eigen::Matrix2d inv = sigma.inverse();
  const Eigen::VectorXd lev = leverages(design, w, design);
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d psi = design.row(i).transpose();
    CHECK(lev(i) == doctest::Approx(psi.dot(inv * psi)).epsilon(1e-12));
  }
  Eigen::MatrixXd flat(2, 2);
  flat << 1, 0, 2, 0;
  Eigen::MatrixXd queries(2, 2);
  queries << 3, 0, 0, 1;
  const Eigen::VectorXd out = leverages(flat, Eigen::Vector2d(0.5, 0.5), queries);
  CHECK(out(0) == doctest::Approx(9.0 / 2.5));
  CHECK(std::isinf(out(1)));
}
