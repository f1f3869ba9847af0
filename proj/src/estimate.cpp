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

#include "kltmps/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace kltmps {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Where the features of (x, a) live in the flat parameter vector. Tabular
// cells are a block of length 1 holding the value 1; linear actions are a
// block of length d holding x.
struct FeatureBlock {
  Eigen::Index offset = 0;
  Eigen::Index length = 1;
};

FeatureBlock feature_block(const ModelClass& mc, const Context& x, int action) {
  if (mc.kind == RewardModel::Kind::kTabular) {
    require(x.has_index() && x.index < static_cast<std::size_t>(mc.contexts),
            "tabular fit needs finite context indices");
    return {static_cast<Eigen::Index>(x.index) * mc.actions + action, 1};
  }
  require(x.features.size() == mc.dim, "context dimension does not match the model class");
  return {static_cast<Eigen::Index>(action) * mc.dim, mc.dim};
}

double block_dot(const Eigen::VectorXd& theta, const FeatureBlock& b, const Context& x,
                 RewardModel::Kind kind) {
  if (kind == RewardModel::Kind::kTabular) return theta[b.offset];
  return theta.segment(b.offset, b.length).dot(x.features);
}

RewardModel to_model(const ModelClass& mc, const Eigen::VectorXd& theta, double bound) {
  const double stored = std::isfinite(bound) ? bound : std::numeric_limits<double>::infinity();
  if (mc.kind == RewardModel::Kind::kTabular) {
    RowMajor t = Eigen::Map<const RowMajor>(theta.data(), mc.contexts, mc.actions);
    return RewardModel::tabular(Eigen::MatrixXd(t), stored);
  }
  RowMajor phi = Eigen::Map<const RowMajor>(theta.data(), mc.actions, mc.dim);
  return RewardModel::linear(Eigen::MatrixXd(phi), stored);
}

void validate(const ModelClass& mc, const FitConfig& cfg) {
  require(mc.actions >= 1, "model class needs actions");
  require(mc.kind == RewardModel::Kind::kLinear ? mc.dim >= 1 : mc.contexts >= 1,
          "model class has no parameters");
  require(cfg.ridge >= 0.0, "ridge must be >= 0");
  require(cfg.grad_tol > 0.0, "grad_tol must be positive");
  require(cfg.max_iters >= 1, "max_iters must be positive");
  require(cfg.param_bound > 0.0, "param_bound must be positive");
}

struct BtState {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  double max_abs_margin = 0.0;
};

// Objective and gradient of the ridge-penalized BT log-likelihood.
BtState bt_state(std::span<const PreferenceSample> batch, const ModelClass& mc,
                 const Eigen::VectorXd& theta, double ridge) {
  BtState s;
  s.gradient = -2.0 * ridge * theta;
  s.objective = -ridge * theta.squaredNorm();
  for (const auto& p : batch) {
    if (p.first == p.second) {
      // A tie only adds log(1/2); its gradient cancels.
      s.objective += log_sigmoid(0.0);
      continue;
    }
    const FeatureBlock b1 = feature_block(mc, p.x, p.first);
    const FeatureBlock b2 = feature_block(mc, p.x, p.second);
    const double margin = block_dot(theta, b1, p.x, mc.kind) - block_dot(theta, b2, p.x, mc.kind);
    s.max_abs_margin = std::max(s.max_abs_margin, std::abs(margin));
    s.objective += p.label == 1 ? log_sigmoid(margin) : log_sigmoid(-margin);
    const double residual = static_cast<double>(p.label) - sigmoid(margin);
    if (mc.kind == RewardModel::Kind::kTabular) {
      s.gradient[b1.offset] += residual;
      s.gradient[b2.offset] -= residual;
    } else {
      s.gradient.segment(b1.offset, b1.length) += residual * p.x.features;
      s.gradient.segment(b2.offset, b2.length) -= residual * p.x.features;
    }
  }
  return s;
}

// Negative Hessian of the penalized log-likelihood (positive semidefinite).
Eigen::MatrixXd bt_curvature(std::span<const PreferenceSample> batch, const ModelClass& mc,
                             const Eigen::VectorXd& theta, double ridge) {
  const Eigen::Index p_count = theta.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p_count, p_count) * (2.0 * ridge);
  for (const auto& p : batch) {
    if (p.first == p.second) continue;
    const FeatureBlock b1 = feature_block(mc, p.x, p.first);
    const FeatureBlock b2 = feature_block(mc, p.x, p.second);
    const double margin = block_dot(theta, b1, p.x, mc.kind) - block_dot(theta, b2, p.x, mc.kind);
    const double q = sigmoid(margin);
    const double w = q * (1.0 - q);
    if (mc.kind == RewardModel::Kind::kTabular) {
      h(b1.offset, b1.offset) += w;
      h(b2.offset, b2.offset) += w;
      h(b1.offset, b2.offset) -= w;
      h(b2.offset, b1.offset) -= w;
    } else {
      const Eigen::MatrixXd outer = w * p.x.features * p.x.features.transpose();
      h.block(b1.offset, b1.offset, b1.length, b1.length) += outer;
      h.block(b2.offset, b2.offset, b2.length, b2.length) += outer;
      h.block(b1.offset, b2.offset, b1.length, b2.length) -= outer;
      h.block(b2.offset, b1.offset, b2.length, b1.length) -= outer;
    }
  }
  return h;
}

bool pair_seen_one_way(std::span<const PreferenceSample> batch) {
  // (context, low action, high action) -> bitmask of winners (1 = low, 2 = high).
  std::map<std::tuple<std::size_t, int, int>, int> outcomes;
  for (const auto& p : batch) {
    if (p.first == p.second) continue;
    const int lo = std::min(p.first, p.second);
    const int hi = std::max(p.first, p.second);
    const int winner = p.label == 1 ? p.first : p.second;
    outcomes[{p.x.index, lo, hi}] |= (winner == lo ? 1 : 2);
  }
  return std::any_of(outcomes.begin(), outcomes.end(),
                     [](const auto& kv) { return kv.second != 3; });
}

}  // namespace

ModelClass ModelClass::tabular(int contexts, int actions) {
  require(contexts >= 1 && actions >= 1, "tabular class needs contexts and actions");
  return {RewardModel::Kind::kTabular, contexts, actions, 0};
}

ModelClass ModelClass::linear(int actions, int dim) {
  require(actions >= 1 && dim >= 1, "linear class needs actions and a dimension");
  return {RewardModel::Kind::kLinear, 0, actions, dim};
}

ModelClass ModelClass::of(const BanditInstance& instance) {
  const auto& truth = instance.truth();
  if (truth.kind() == RewardModel::Kind::kTabular) {
    return tabular(truth.context_extent(), truth.num_actions());
  }
  return linear(truth.num_actions(), truth.context_extent());
}

int ModelClass::num_parameters() const {
  return kind == RewardModel::Kind::kTabular ? contexts * actions : actions * dim;
}

RewardModel center(const RewardModel& model) {
  Eigen::MatrixXd p = model.parameters();
  if (model.kind() == RewardModel::Kind::kTabular) {
    p.colwise() -= p.rowwise().mean();
  } else {
    p.rowwise() -= p.colwise().mean();
  }
  return model.with_parameters(std::move(p));
}

RewardModel clamp_to_bound(const RewardModel& model, double bound) {
  if (!std::isfinite(bound)) return model;
  Eigen::MatrixXd p = model.parameters();
  if (model.kind() == RewardModel::Kind::kTabular) {
    p = p.cwiseMax(-bound).cwiseMin(bound);
  } else {
    for (Eigen::Index a = 0; a < p.rows(); ++a) {
      const double norm = p.row(a).norm();
      if (norm > bound) p.row(a) *= bound / norm;
    }
  }
  return model.with_parameters(std::move(p));
}

double bt_log_likelihood(std::span<const PreferenceSample> batch, const RewardModel& model) {
  double ll = 0.0;
  for (const auto& p : batch) {
    const double margin = model.value(p.x, p.first) - model.value(p.x, p.second);
    ll += p.label == 1 ? log_sigmoid(margin) : log_sigmoid(-margin);
  }
  return ll;
}

double squared_loss(std::span<const RewardSample> batch, const RewardModel& model) {
  double loss = 0.0;
  for (const auto& s : batch) {
    const double r = model.value(s.x, s.action) - s.reward;
    loss += r * r;
  }
  return loss;
}

FitResult least_squares_fit(std::span<const RewardSample> batch,
                            const ModelClass& mc, const FitConfig& cfg) {
  validate(mc, cfg);
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "least squares on an empty batch");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(mc.num_parameters());

  if (mc.kind == RewardModel::Kind::kTabular) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(theta.size());
    for (const auto& s : batch) {
      require(s.action >= 0 && s.action < mc.actions, "invalid action index in batch");
      const FeatureBlock b = feature_block(mc, s.x, s.action);
      sums[b.offset] += s.reward;
      counts[b.offset] += 1.0;
    }
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (counts[i] > 0.0) theta[i] = sums[i] / (counts[i] + cfg.ridge);
    }
  } else {
    const int d = mc.dim;
    std::vector<Eigen::MatrixXd> gram(mc.actions, Eigen::MatrixXd::Zero(d, d));
    std::vector<Eigen::VectorXd> moment(mc.actions, Eigen::VectorXd::Zero(d));
    for (const auto& s : batch) {
      require(s.action >= 0 && s.action < mc.actions, "invalid action index in batch");
      require(s.x.features.size() == d, "context dimension does not match the model class");
      gram[s.action].selfadjointView<Eigen::Lower>().rankUpdate(s.x.features);
      moment[s.action] += s.reward * s.x.features;
    }
    for (int a = 0; a < mc.actions; ++a) {
      Eigen::MatrixXd g = gram[a].selfadjointView<Eigen::Lower>();
      g.diagonal().array() += cfg.ridge;
      if (cfg.ridge == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
        if (lu.rank() < d) {
          throw Error(ErrorKind::kSingularDesign,
                      "design for action " + std::to_string(a) + " is rank deficient");
        }
        theta.segment(static_cast<Eigen::Index>(a) * d, d) = lu.solve(moment[a]);
      } else {
        theta.segment(static_cast<Eigen::Index>(a) * d, d) = g.ldlt().solve(moment[a]);
      }
    }
  }

  FitResult out{to_model(mc, theta, cfg.param_bound), to_model(mc, theta, cfg.param_bound)};
  out.objective = squared_loss(batch, out.unclamped) + cfg.ridge * theta.squaredNorm();
  out.model = clamp_to_bound(out.unclamped, cfg.param_bound);
  return out;
}

FitResult bt_mle_fit(std::span<const PreferenceSample> batch, const ModelClass& mc,
                     const FitConfig& cfg) {
  validate(mc, cfg);
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "MLE on an empty batch");
  for (const auto& p : batch) {
    require(p.first >= 0 && p.first < mc.actions && p.second >= 0 && p.second < mc.actions,
            "invalid action index in batch");
    require(p.label == 0 || p.label == 1, "preference labels must be binary");
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(mc.num_parameters());
  BtState state = bt_state(batch, mc, theta, cfg.ridge);
  int iter = 0;
  bool converged = false;
  double damping = 0.0;
  for (; iter < cfg.max_iters; ++iter) {
    const double gnorm = state.gradient.lpNorm<Eigen::Infinity>();
    if (gnorm <= cfg.grad_tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd h = bt_curvature(batch, mc, theta, cfg.ridge);
    const double scale = std::max(1.0, h.diagonal().maxCoeff());
    // The gauge direction is flat when ridge is zero; a vanishing shift keeps
    // the factorization well posed without moving the fixed point.
    const double floor = 1e-13 * scale;
    h.diagonal().array() += std::max(damping, floor);
    Eigen::VectorXd step = h.ldlt().solve(state.gradient);
    if (!step.allFinite()) {
      damping = std::max(1e-8 * scale, damping * 10.0);
      continue;
    }

    const double slope = state.gradient.dot(step);
    double t = 1.0;
    bool accepted = false;
    BtState trial;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      trial = bt_state(batch, mc, theta + t * step, cfg.ridge);
      if (trial.objective >= state.objective + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // Within rounding of the optimum the objective cannot resolve the
      // improvement; accept a full step that shrinks the gradient.
      if (t == 1.0 &&
          std::abs(trial.objective - state.objective) <= 1e-12 * (1.0 + std::abs(state.objective)) &&
          trial.gradient.lpNorm<Eigen::Infinity>() < gnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (damping > 1e6 * scale) break;
      damping = std::max(1e-8 * scale, damping * 10.0);
      continue;
    }
    theta += t * step;
    state = std::move(trial);
    damping = damping * 0.1;
    if (damping < 1e-10 * scale) damping = 0.0;
  }

  FitResult out{to_model(mc, theta, cfg.param_bound), to_model(mc, theta, cfg.param_bound)};
  out.objective = state.objective;
  out.grad_max_norm = state.gradient.lpNorm<Eigen::Infinity>();
  out.iterations = iter;
  out.converged = converged;
  if (cfg.ridge == 0.0) {
    const bool pairs = mc.kind == RewardModel::Kind::kTabular && pair_seen_one_way(batch);
    out.separable = pairs || state.max_abs_margin > 30.0;
  }
  out.model = clamp_to_bound(center(out.unclamped), cfg.param_bound);
  return out;
}

}  // namespace kltmps
