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

// Exact and Monte-Carlo evaluation of the KL-regularized objective,
// suboptimality gaps, the gap decomposition identities, and coverage
// coefficients.

#ifndef KLTMPS_EVAL_HPP_
#define KLTMPS_EVAL_HPP_

#include <cstddef>
#include <cstdint>

#include "kltmps/core.hpp"
#include "kltmps/estimate.hpp"

namespace kltmps {

enum class EvalMethod { kExactFinite, kMonteCarlo };

struct EvalConfig {
  std::size_t n_eval = 100'000;  // fresh contexts for continuous spaces
  std::uint64_t seed = 0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for exact sums
  EvalMethod method = EvalMethod::kExactFinite;
  std::size_t n_eval = 0;
};

struct GapReport {
  double gap = 0.0;      // Q(pi*) - Q(pi)
  double kl_form = 0.0;  // (1/eta) E_x KL(pi || pi*)
  double std_error = 0.0;
  EvalMethod method = EvalMethod::kExactFinite;
  std::size_t n_eval = 0;
};

// Q(pi) = E_x E_{a~pi}[R*(x,a) - (1/eta) log(pi(a|x) / pi0(a|x))].
// Throws kSupportViolation when pi puts mass outside the support of pi0.
Estimate objective_q(const BanditInstance& instance, const Policy& policy, double eta,
                     const EvalConfig& cfg = {});

GapReport suboptimality_gap(const BanditInstance& instance, const Policy& policy,
                            double eta, const EvalConfig& cfg = {});

struct Decomposition {
  double gap = 0.0;
  // |gap + (1/eta) E_x[J(x; theta_hat) - J(x; theta*)]|
  double j_identity_residual = 0.0;
  // gamma in [0, 1] with eta * gamma * E_x Var_{pi_f}(Delta) closest to gap,
  // f = gamma R(theta_hat) + (1 - gamma) R(theta*).
  double mvt_gamma = 0.0;
  double mvt_residual = 0.0;
  // eta * max over the gamma grid of E_x E_{pi_f}[Delta^2].
  double second_moment_bound = 0.0;
};

inline constexpr int kGammaGridPoints = 1001;

// Finite contexts only; throws kContinuousContexts otherwise.
Decomposition decomposition_check(const BanditInstance& instance,
                                  const RewardModel& theta_hat, double eta);

struct CoverageConfig {
  std::size_t pool = 10'000;  // sampled contexts for continuous spaces
  std::uint64_t seed = 0;
  double pinv_rtol = 1e-10;
};

struct CoverageReport {
  double d2 = 0.0;
  double d2_centered = 0.0;
  double c_global = 0.0;
  double c_local_bound = 0.0;  // e^{rho}
  double rho = 0.0;            // 2 eta B
  // True for continuous contexts: the suprema are taken over a sampled pool
  // and underestimate the true values.
  bool lower_estimate = false;
};

CoverageReport coverage_coefficients(const BanditInstance& instance,
                                     const ModelClass& model_class, double eta = 1.0,
                                     const CoverageConfig& cfg = {});

// psi^T Sigma^+ psi for every row psi of `queries`, where
// Sigma = sum_i weights_i design_i design_i^T. Queries with a component
// outside the range of Sigma get +infinity.
Eigen::VectorXd leverages(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                          const Eigen::MatrixXd& queries, double pinv_rtol = 1e-10);

}  // namespace kltmps

#endif  // KLTMPS_EVAL_HPP_
