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

// Reward-model estimation: least squares on reward feedback and
// Bradley-Terry maximum likelihood on preference feedback.

#ifndef KLTMPS_ESTIMATE_HPP_
#define KLTMPS_ESTIMATE_HPP_

#include <limits>
#include <span>

#include "kltmps/core.hpp"

namespace kltmps {

struct FitConfig {
  double ridge = 1e-8;
  double grad_tol = 1e-8;
  int max_iters = 10'000;
  // B used to clamp the fitted rewards; infinity disables clamping.
  double param_bound = std::numeric_limits<double>::infinity();
};

// The hypothesis class a fit searches over.
struct ModelClass {
  RewardModel::Kind kind = RewardModel::Kind::kTabular;
  int contexts = 0;  // tabular rows
  int actions = 0;
  int dim = 0;  // linear feature dimension

  static ModelClass tabular(int contexts, int actions);
  static ModelClass linear(int actions, int dim);
  // The class the instance's own truth belongs to.
  static ModelClass of(const BanditInstance& instance);

  int num_parameters() const;
};

struct FitResult {
  RewardModel model;      // centered (preference fits) and clamped
  RewardModel unclamped;  // the optimizer's output before any projection
  double objective = 0.0;       // value of the fitted objective at `unclamped`
  double grad_max_norm = 0.0;   // of the objective at `unclamped`
  int iterations = 0;
  bool converged = true;
  // Preference fits only: ridge is zero and the labels do not pin the
  // estimate (some pair seen with a single outcome, or divergence).
  bool separable = false;
};

// argmin sum_i (R(theta, x_i, a_i) - r_i)^2 + ridge ||theta||^2.
FitResult least_squares_fit(std::span<const RewardSample> batch,
                            const ModelClass& model_class,
                            const FitConfig& cfg = {});

// argmax sum_i log sigma(+-(R(x_i, a1_i) - R(x_i, a2_i))) - ridge ||theta||^2,
// solved by damped Newton ascent with backtracking.
FitResult bt_mle_fit(std::span<const PreferenceSample> batch,
                     const ModelClass& model_class, const FitConfig& cfg = {});

// Unregularized Bradley-Terry log-likelihood of `model` on `batch`.
double bt_log_likelihood(std::span<const PreferenceSample> batch,
                         const RewardModel& model);

// Sum of squared residuals of `model` on `batch`.
double squared_loss(std::span<const RewardSample> batch, const RewardModel& model);

// Removes the gauge: per-context mean for tabular models, mean embedding row
// for linear models.
RewardModel center(const RewardModel& model);

// Projects onto |R| <= bound: entrywise for tabular, row norm for linear.
RewardModel clamp_to_bound(const RewardModel& model, double bound);

}  // namespace kltmps

#endif  // KLTMPS_ESTIMATE_HPP_
