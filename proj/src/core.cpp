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

#include "kltmps/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace kltmps {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_unit_rows(const Eigen::MatrixXd& features) {
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double norm = features.row(i).norm();
    require(std::abs(norm - 1.0) <= 1e-9,
            "context feature row " + std::to_string(i) + " has norm " +
                std::to_string(norm) + ", expected 1");
  }
}

}  // namespace

bool operator==(const Context& a, const Context& b) {
  if (a.index != b.index) return false;
  if (a.features.size() != b.features.size()) return false;
  return a.features.size() == 0 || a.features == b.features;
}

ContextSpace ContextSpace::finite(std::vector<double> weights,
                                  Eigen::MatrixXd features) {
  require(!weights.empty(), "finite context space needs at least one context");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), "context weights must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "context weights must sum to 1");
  if (features.size() > 0) {
    require(static_cast<std::size_t>(features.rows()) == weights.size(),
            "one feature row per context required");
    check_unit_rows(features);
  }
  ContextSpace space;
  space.mode_ = Mode::kFinite;
  space.dim_ = static_cast<int>(features.cols());
  space.cumulative_.resize(weights.size());
  std::partial_sum(weights.begin(), weights.end(), space.cumulative_.begin());
  space.weights_ = std::move(weights);
  space.features_ = std::move(features);
  return space;
}

ContextSpace ContextSpace::uniform_finite(std::size_t count,
                                          Eigen::MatrixXd features) {
  require(count > 0, "finite context space needs at least one context");
  return finite(std::vector<double>(count, 1.0 / static_cast<double>(count)),
                std::move(features));
}

ContextSpace ContextSpace::sphere_gaussian(int dim) {
  require(dim >= 1, "sphere dimension must be positive");
  ContextSpace space;
  space.mode_ = Mode::kSphereGaussian;
  space.dim_ = dim;
  return space;
}

Context ContextSpace::at(std::size_t i) const {
  require(is_finite() && i < weights_.size(), "context index out of range");
  Context x;
  x.index = i;
  if (dim_ > 0) x.features = features_.row(static_cast<Eigen::Index>(i)).transpose();
  return x;
}

Context ContextSpace::sample(Rng& rng) const {
  if (is_finite()) {
    if (weights_.size() == 1) return at(0);
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    i = std::min(i, weights_.size() - 1);
    // Skip zero-weight contexts that share a cumulative value.
    while (weights_[i] == 0.0 && i + 1 < weights_.size()) ++i;
    return at(i);
  }
  std::normal_distribution<double> normal;
  Context x;
  x.features.resize(dim_);
  double norm = 0.0;
  do {
    for (int k = 0; k < dim_; ++k) x.features[k] = normal(rng);
    norm = x.features.norm();
  } while (norm == 0.0);
  x.features /= norm;
  return x;
}

RewardModel RewardModel::tabular(Eigen::MatrixXd table, double bound) {
  require(table.rows() >= 1 && table.cols() >= 1, "empty reward table");
  require(bound > 0.0, "reward bound must be positive");
  return RewardModel(Kind::kTabular, std::move(table), bound);
}

RewardModel RewardModel::linear(Eigen::MatrixXd embedding, double bound) {
  require(embedding.rows() >= 1 && embedding.cols() >= 1, "empty embedding");
  require(bound > 0.0, "reward bound must be positive");
  return RewardModel(Kind::kLinear, std::move(embedding), bound);
}

int RewardModel::num_actions() const {
  return static_cast<int>(kind_ == Kind::kTabular ? params_.cols() : params_.rows());
}

int RewardModel::context_extent() const {
  return static_cast<int>(kind_ == Kind::kTabular ? params_.rows() : params_.cols());
}

double RewardModel::value(const Context& x, int action) const {
  if (kind_ == Kind::kTabular) {
    return params_(static_cast<Eigen::Index>(x.index), action);
  }
  return params_.row(action).dot(x.features);
}

Eigen::VectorXd RewardModel::values(const Context& x) const {
  if (kind_ == Kind::kTabular) {
    require(x.has_index() && x.index < static_cast<std::size_t>(params_.rows()),
            "tabular reward needs a finite context index");
    return params_.row(static_cast<Eigen::Index>(x.index)).transpose();
  }
  require(x.features.size() == params_.cols(),
          "context dimension does not match the linear embedding");
  return params_ * x.features;
}

RewardModel RewardModel::with_parameters(Eigen::MatrixXd params) const {
  require(params.rows() == params_.rows() && params.cols() == params_.cols(),
          "parameter shape mismatch");
  return RewardModel(kind_, std::move(params), bound_);
}

Eigen::VectorXd Policy::log_probabilities(const Context& x) const {
  Eigen::VectorXd p = probabilities(x);
  return p.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
}

int Policy::sample(const Context& x, Rng& rng) const {
  return sample_categorical(probabilities(x), rng);
}

ReferencePolicy ReferencePolicy::uniform(int num_actions) {
  require(num_actions >= 1, "need at least one action");
  ReferencePolicy p;
  p.uniform_ = true;
  p.num_actions_ = num_actions;
  return p;
}

ReferencePolicy ReferencePolicy::table(Eigen::MatrixXd rows) {
  require(rows.rows() >= 1 && rows.cols() >= 1, "empty policy table");
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    require((rows.row(i).array() >= 0.0).all(), "policy entries must be >= 0");
    require(std::abs(rows.row(i).sum() - 1.0) <= 1e-12,
            "policy row " + std::to_string(i) + " does not sum to 1");
  }
  ReferencePolicy p;
  p.uniform_ = false;
  p.num_actions_ = static_cast<int>(rows.cols());
  p.rows_ = std::move(rows);
  return p;
}

Eigen::VectorXd ReferencePolicy::probabilities(const Context& x) const {
  if (uniform_) return Eigen::VectorXd::Constant(num_actions_, 1.0 / num_actions_);
  require(x.has_index() && x.index < static_cast<std::size_t>(rows_.rows()),
          "table reference policy needs a finite context index");
  return rows_.row(static_cast<Eigen::Index>(x.index)).transpose();
}

Eigen::VectorXd ReferencePolicy::log_probabilities(const Context& x) const {
  if (uniform_) {
    return Eigen::VectorXd::Constant(num_actions_, -std::log(static_cast<double>(num_actions_)));
  }
  return Policy::log_probabilities(x);
}

Gibbs gibbs(const Eigen::VectorXd& log_prior, double eta,
            const Eigen::VectorXd& rewards) {
  const Eigen::Index n = log_prior.size();
  Eigen::VectorXd exponent(n);
  double top = kNegInf;
  for (Eigen::Index a = 0; a < n; ++a) {
    exponent[a] = log_prior[a] == kNegInf ? kNegInf : log_prior[a] + eta * rewards[a];
    top = std::max(top, exponent[a]);
  }
  double sum = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (exponent[a] != kNegInf) sum += std::exp(exponent[a] - top);
  }
  Gibbs out;
  out.log_normalizer = top + std::log(sum);
  out.log_probs.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    out.log_probs[a] = exponent[a] == kNegInf ? kNegInf : exponent[a] - out.log_normalizer;
  }
  return out;
}

SoftmaxPolicy::SoftmaxPolicy(ReferencePolicy reference, double eta,
                             RewardModel estimate)
    : reference_(std::move(reference)), eta_(eta), estimate_(std::move(estimate)) {
  require(eta_ > 0.0 && std::isfinite(eta_), "eta must be positive");
  require(estimate_.num_actions() == reference_.num_actions(),
          "reward model and reference policy disagree on the action count");
}

Eigen::VectorXd SoftmaxPolicy::log_probabilities(const Context& x) const {
  return gibbs(reference_.log_probabilities(x), eta_, estimate_.values(x)).log_probs;
}

Eigen::VectorXd SoftmaxPolicy::probabilities(const Context& x) const {
  return log_probabilities(x).array().exp();
}

double SoftmaxPolicy::log_normalizer(const Context& x) const {
  return gibbs(reference_.log_probabilities(x), eta_, estimate_.values(x)).log_normalizer;
}

NoiseModel NoiseModel::gaussian(double sigma) {
  require(sigma >= 0.0 && std::isfinite(sigma), "noise sigma must be >= 0");
  return NoiseModel(Kind::kGaussian, sigma);
}

NoiseModel NoiseModel::bernoulli() { return NoiseModel(Kind::kBernoulli, 0.0); }

double NoiseModel::observe(double mean, Rng& rng) const {
  if (kind_ == Kind::kBernoulli) return uniform01(rng) < mean ? 1.0 : 0.0;
  if (sigma_ == 0.0) return mean;
  std::normal_distribution<double> normal(0.0, sigma_);
  return mean + normal(rng);
}

BanditInstance::BanditInstance(ContextSpace contexts, int num_actions,
                               RewardModel truth, NoiseModel noise,
                               ReferencePolicy reference)
    : contexts_(std::move(contexts)),
      num_actions_(num_actions),
      truth_(std::move(truth)),
      noise_(noise),
      reference_(std::move(reference)) {
  require(num_actions_ >= 1, "need at least one action");
  require(truth_.num_actions() == num_actions_,
          "truth action count does not match the action space");
  require(reference_.num_actions() == num_actions_,
          "reference action count does not match the action space");
  const double bound = truth_.bound();
  if (truth_.kind() == RewardModel::Kind::kTabular) {
    require(contexts_.is_finite() &&
                static_cast<std::size_t>(truth_.context_extent()) == contexts_.count(),
            "tabular truth needs one row per finite context");
    const auto& t = truth_.parameters();
    require((t.array() >= 0.0).all() && (t.array() <= bound).all(),
            "tabular truth entries must lie in [0, B]");
    if (noise_.kind() == NoiseModel::Kind::kBernoulli) {
      require((t.array() <= 1.0).all(), "Bernoulli noise needs rewards in [0, 1]");
    }
  } else {
    require(truth_.context_extent() == contexts_.dim(),
            "linear truth dimension does not match the contexts");
    const auto& phi = truth_.parameters();
    for (Eigen::Index a = 0; a < phi.rows(); ++a) {
      require(phi.row(a).norm() <= bound * (1.0 + 1e-12),
              "linear truth row norm exceeds B");
    }
    require(noise_.kind() != NoiseModel::Kind::kBernoulli,
            "Bernoulli noise is only supported for tabular truth");
  }
  if (!reference_.is_uniform()) {
    require(contexts_.is_finite() &&
                static_cast<std::size_t>(reference_.rows().rows()) == contexts_.count(),
            "table reference policy needs one row per finite context");
  }
}

bool operator==(const RewardSample& a, const RewardSample& b) {
  return a.x == b.x && a.action == b.action && a.reward == b.reward;
}

bool operator==(const PreferenceSample& a, const PreferenceSample& b) {
  return a.x == b.x && a.first == b.first && a.second == b.second && a.label == b.label;
}

void validate_batch(const SampleBatch& batch, int num_actions) {
  auto valid = [num_actions](int a) { return a >= 0 && a < num_actions; };
  if (const auto* rewards = std::get_if<RewardBatch>(&batch)) {
    for (const auto& s : *rewards) require(valid(s.action), "invalid action index in batch");
    return;
  }
  for (const auto& s : std::get<PreferenceBatch>(batch)) {
    require(valid(s.first) && valid(s.second), "invalid action index in batch");
    require(s.label == 0 || s.label == 1, "preference labels must be binary");
  }
}

int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    acc += probs[a];
    last = static_cast<int>(a);
    if (u < acc) return last;
  }
  require(last >= 0, "cannot sample from an all-zero distribution");
  return last;
}

Context sample_context(const BanditInstance& instance, Rng& rng) {
  return instance.contexts().sample(rng);
}

SoftmaxPolicy planning_oracle(const RewardModel& reward,
                              const ReferencePolicy& reference, double eta) {
  return SoftmaxPolicy(reference, eta, reward);
}

double sample_reward(const BanditInstance& instance, const Context& x,
                     int action, Rng& rng) {
  return instance.noise().observe(instance.truth().value(x, action), rng);
}

double preference_probability(const RewardModel& truth, const Context& x,
                              int a1, int a2) {
  return sigmoid(truth.value(x, a1) - truth.value(x, a2));
}

int preference_oracle(const RewardModel& truth, const Context& x, int a1,
                      int a2, Rng& rng) {
  return uniform01(rng) < preference_probability(truth, x, a1, a2) ? 1 : 0;
}

}  // namespace kltmps
