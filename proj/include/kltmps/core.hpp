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

// Domain types for KL-regularized contextual bandits: contexts, actions,
// reward models, reference and Gibbs policies, noise, and every sampling
// primitive the algorithms draw from.

#ifndef KLTMPS_CORE_HPP_
#define KLTMPS_CORE_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kltmps/error.hpp"
#include "kltmps/random.hpp"

namespace kltmps {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

// A single context. Finite spaces set `index`; feature-bearing spaces set
// `features` (unit norm). A finite space with features sets both.
struct Context {
  std::size_t index = kNoIndex;
  Eigen::VectorXd features;

  bool has_index() const { return index != kNoIndex; }
};

bool operator==(const Context& a, const Context& b);

class ContextSpace {
 public:
  enum class Mode { kFinite, kSphereGaussian };

  // Finite space over weights.size() contexts. `features` is either empty
  // (index-only contexts) or has one unit-norm row per context.
  static ContextSpace finite(std::vector<double> weights,
                             Eigen::MatrixXd features = {});
  static ContextSpace uniform_finite(std::size_t count,
                                     Eigen::MatrixXd features = {});
  // Standard Gaussian in `dim` dimensions projected onto the unit sphere.
  static ContextSpace sphere_gaussian(int dim);

  Mode mode() const { return mode_; }
  bool is_finite() const { return mode_ == Mode::kFinite; }
  std::size_t count() const { return weights_.size(); }
  // Feature dimension; 0 for index-only contexts.
  int dim() const { return dim_; }
  std::span<const double> weights() const { return weights_; }

  Context at(std::size_t i) const;
  Context sample(Rng& rng) const;

 private:
  ContextSpace() = default;

  Mode mode_ = Mode::kFinite;
  int dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  Eigen::MatrixXd features_;
};

// R(theta, x, a). Tabular: table(x, a) with one row per finite context.
// Linear: <x, phi(a)> with one embedding row per action.
class RewardModel {
 public:
  enum class Kind { kTabular, kLinear };

  static RewardModel tabular(Eigen::MatrixXd table, double bound);
  static RewardModel linear(Eigen::MatrixXd embedding, double bound);

  Kind kind() const { return kind_; }
  int num_actions() const;
  // Number of contexts (Tabular) or feature dimension (Linear).
  int context_extent() const;
  double bound() const { return bound_; }
  const Eigen::MatrixXd& parameters() const { return params_; }

  double value(const Context& x, int action) const;
  Eigen::VectorXd values(const Context& x) const;

  RewardModel with_parameters(Eigen::MatrixXd params) const;

 private:
  RewardModel(Kind kind, Eigen::MatrixXd params, double bound)
      : kind_(kind), params_(std::move(params)), bound_(bound) {}

  Kind kind_;
  Eigen::MatrixXd params_;
  double bound_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int num_actions() const = 0;
  virtual Eigen::VectorXd probabilities(const Context& x) const = 0;
  // Natural log of probabilities; -inf outside the support.
  virtual Eigen::VectorXd log_probabilities(const Context& x) const;

  int sample(const Context& x, Rng& rng) const;
};

// pi_0. A table policy is only meaningful over finite contexts.
class ReferencePolicy : public Policy {
 public:
  static ReferencePolicy uniform(int num_actions);
  static ReferencePolicy table(Eigen::MatrixXd rows);

  bool is_uniform() const { return uniform_; }
  int num_actions() const override { return num_actions_; }
  const Eigen::MatrixXd& rows() const { return rows_; }

  Eigen::VectorXd probabilities(const Context& x) const override;
  Eigen::VectorXd log_probabilities(const Context& x) const override;

 private:
  ReferencePolicy() = default;

  bool uniform_ = true;
  int num_actions_ = 0;
  Eigen::MatrixXd rows_;
};

// Gibbs distribution pi(a) ∝ exp(log_prior(a) + eta * reward(a)), computed
// with the maximum exponent subtracted. Actions with log_prior = -inf get
// probability zero.
struct Gibbs {
  Eigen::VectorXd log_probs;
  double log_normalizer = 0.0;  // log sum_a prior(a) exp(eta * reward(a))
};

Gibbs gibbs(const Eigen::VectorXd& log_prior, double eta,
            const Eigen::VectorXd& rewards);

// pi(a|x) = pi0(a|x) exp(eta R(x,a)) / Z(x).
class SoftmaxPolicy : public Policy {
 public:
  SoftmaxPolicy(ReferencePolicy reference, double eta, RewardModel estimate);

  const ReferencePolicy& reference() const { return reference_; }
  double eta() const { return eta_; }
  const RewardModel& reward_estimate() const { return estimate_; }

  int num_actions() const override { return reference_.num_actions(); }
  Eigen::VectorXd probabilities(const Context& x) const override;
  Eigen::VectorXd log_probabilities(const Context& x) const override;
  // log Z(x).
  double log_normalizer(const Context& x) const;

 private:
  ReferencePolicy reference_;
  double eta_;
  RewardModel estimate_;
};

class NoiseModel {
 public:
  enum class Kind { kGaussian, kBernoulli };

  static NoiseModel gaussian(double sigma);
  static NoiseModel bernoulli();

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }

  // One observation with conditional mean `mean`.
  double observe(double mean, Rng& rng) const;

 private:
  NoiseModel(Kind kind, double sigma) : kind_(kind), sigma_(sigma) {}

  Kind kind_;
  double sigma_;
};

// (X, A, d0, theta*, pi0) plus the observation noise.
class BanditInstance {
 public:
  BanditInstance(ContextSpace contexts, int num_actions, RewardModel truth,
                 NoiseModel noise, ReferencePolicy reference);

  const ContextSpace& contexts() const { return contexts_; }
  int num_actions() const { return num_actions_; }
  const RewardModel& truth() const { return truth_; }
  const NoiseModel& noise() const { return noise_; }
  const ReferencePolicy& reference() const { return reference_; }

 private:
  ContextSpace contexts_;
  int num_actions_;
  RewardModel truth_;
  NoiseModel noise_;
  ReferencePolicy reference_;
};

struct RewardSample {
  Context x;
  int action = 0;
  double reward = 0.0;
};

struct PreferenceSample {
  Context x;
  int first = 0;
  int second = 0;
  int label = 0;  // 1 when `first` is preferred
};

using RewardBatch = std::vector<RewardSample>;
using PreferenceBatch = std::vector<PreferenceSample>;
using SampleBatch = std::variant<RewardBatch, PreferenceBatch>;

bool operator==(const RewardSample& a, const RewardSample& b);
bool operator==(const PreferenceSample& a, const PreferenceSample& b);

// Checks action indices and labels; throws kInvalidArgument.
void validate_batch(const SampleBatch& batch, int num_actions);

inline double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log sigma(u) without overflow.
inline double log_sigmoid(double u) {
  if (u >= 0) return -std::log1p(std::exp(-u));
  return u - std::log1p(std::exp(u));
}

// Categorical draw by inverse CDF over `probs`.
int sample_categorical(const Eigen::VectorXd& probs, Rng& rng);

Context sample_context(const BanditInstance& instance, Rng& rng);

SoftmaxPolicy planning_oracle(const RewardModel& reward,
                              const ReferencePolicy& reference, double eta);

double sample_reward(const BanditInstance& instance, const Context& x,
                     int action, Rng& rng);

// P(y = 1) = sigma(R(x, a1) - R(x, a2)).
double preference_probability(const RewardModel& truth, const Context& x,
                              int a1, int a2);

int preference_oracle(const RewardModel& truth, const Context& x, int a1,
                      int a2, Rng& rng);

}  // namespace kltmps

#endif  // KLTMPS_CORE_HPP_
