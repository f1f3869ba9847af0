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

#include "kltmps/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace kltmps {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_a pi(a) [r(a) - (1/eta)(log pi(a) - log pi0(a))] at one context.
double context_objective(const Eigen::VectorXd& probs, const Eigen::VectorXd& log_probs,
                         const Eigen::VectorXd& log_prior, const Eigen::VectorXd& rewards,
                         double eta) {
  double q = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    if (log_prior[a] == -kInf) {
      throw Error(ErrorKind::kSupportViolation,
                  "policy puts mass on an action outside the reference support");
    }
    q += probs[a] * (rewards[a] - (log_probs[a] - log_prior[a]) / eta);
  }
  return q;
}

double context_kl(const Eigen::VectorXd& probs, const Eigen::VectorXd& log_probs,
                  const Eigen::VectorXd& log_target) {
  double kl = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    if (probs[a] > 0.0) kl += probs[a] * (log_probs[a] - log_target[a]);
  }
  return kl;
}

// Weighted mean and its standard error over per-context values.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
  double std_error() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    return std::sqrt(var / n);
  }
};

// Calls fn(context, weight) for each finite context with positive weight, or
// for n_eval sampled contexts with weight 1/n_eval.
template <typename Fn>
EvalMethod for_each_context(const ContextSpace& space, const EvalConfig& cfg, Fn fn) {
  if (space.is_finite()) {
    const auto w = space.weights();
    for (std::size_t i = 0; i < space.count(); ++i) {
      if (w[i] > 0.0) fn(space.at(i), w[i]);
    }
    return EvalMethod::kExactFinite;
  }
  require(cfg.n_eval >= 1, "n_eval must be positive");
  Rng rng(cfg.seed);
  const double w = 1.0 / static_cast<double>(cfg.n_eval);
  for (std::size_t i = 0; i < cfg.n_eval; ++i) fn(space.sample(rng), w);
  return EvalMethod::kMonteCarlo;
}

struct ContextTerms {
  Eigen::VectorXd log_prior;
  Eigen::VectorXd truth;
  Eigen::VectorXd estimate;
};

double policy_variance(const Eigen::VectorXd& log_probs, const Eigen::VectorXd& delta) {
  const Eigen::ArrayXd p = log_probs.array().exp();
  const double mean = (p * delta.array()).sum();
  return (p * (delta.array() - mean).square()).sum();
}

double policy_second_moment(const Eigen::VectorXd& log_probs, const Eigen::VectorXd& delta) {
  return (log_probs.array().exp() * delta.array().square()).sum();
}

}  // namespace

Estimate objective_q(const BanditInstance& instance, const Policy& policy, double eta,
                     const EvalConfig& cfg) {
  require(eta > 0.0, "eta must be positive");
  const RewardModel& truth = instance.truth();
  const ReferencePolicy& ref = instance.reference();
  Estimate out;
  if (instance.contexts().is_finite()) {
    double total = 0.0;
    out.method = for_each_context(instance.contexts(), cfg, [&](const Context& x, double w) {
      total += w * context_objective(policy.probabilities(x), policy.log_probabilities(x),
                                     ref.log_probabilities(x), truth.values(x), eta);
    });
    out.value = total;
    return out;
  }
  Accumulator acc;
  out.method = for_each_context(instance.contexts(), cfg, [&](const Context& x, double) {
    acc.add(context_objective(policy.probabilities(x), policy.log_probabilities(x),
                              ref.log_probabilities(x), truth.values(x), eta));
  });
  out.value = acc.mean();
  out.std_error = acc.std_error();
  out.n_eval = acc.count;
  return out;
}

GapReport suboptimality_gap(const BanditInstance& instance, const Policy& policy, double eta,
                            const EvalConfig& cfg) {
  require(eta > 0.0, "eta must be positive");
  const SoftmaxPolicy optimal = planning_oracle(instance.truth(), instance.reference(), eta);
  const ReferencePolicy& ref = instance.reference();
  double gap = 0.0;
  double kl = 0.0;
  Accumulator acc;
  GapReport out;
  out.method = for_each_context(instance.contexts(), cfg, [&](const Context& x, double w) {
    const Eigen::VectorXd log_prior = ref.log_probabilities(x);
    const Eigen::VectorXd rewards = instance.truth().values(x);
    const Eigen::VectorXd star_log = optimal.log_probabilities(x);
    const Eigen::VectorXd star = star_log.array().exp();
    const Eigen::VectorXd log_p = policy.log_probabilities(x);
    const Eigen::VectorXd p = policy.probabilities(x);
    const double direct = context_objective(star, star_log, log_prior, rewards, eta) -
                          context_objective(p, log_p, log_prior, rewards, eta);
    gap += w * direct;
    kl += w * context_kl(p, log_p, star_log) / eta;
    acc.add(direct);
  });
  out.gap = gap;
  out.kl_form = kl;
  if (out.method == EvalMethod::kMonteCarlo) {
    out.std_error = acc.std_error();
    out.n_eval = acc.count;
  }
  return out;
}

Decomposition decomposition_check(const BanditInstance& instance, const RewardModel& theta_hat,
                                  double eta) {
  require(eta > 0.0, "eta must be positive");
  const ContextSpace& space = instance.contexts();
  if (!space.is_finite()) {
    throw Error(ErrorKind::kContinuousContexts, "decomposition needs exact context sums");
  }
  std::vector<ContextTerms> terms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < space.count(); ++i) {
    if (space.weights()[i] <= 0.0) continue;
    const Context x = space.at(i);
    terms.push_back({instance.reference().log_probabilities(x), instance.truth().values(x),
                     theta_hat.values(x)});
    weights.push_back(space.weights()[i]);
  }

  Decomposition out;
  double j_gap = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    const Gibbs star = gibbs(t.log_prior, eta, t.truth);
    const Gibbs hat = gibbs(t.log_prior, eta, t.estimate);
    const Eigen::VectorXd p_star = star.log_probs.array().exp();
    const Eigen::VectorXd p_hat = hat.log_probs.array().exp();
    out.gap += weights[k] * (context_objective(p_star, star.log_probs, t.log_prior, t.truth, eta) -
                             context_objective(p_hat, hat.log_probs, t.log_prior, t.truth, eta));
    // J(x; theta) = log Z_theta(x) - eta E_{pi_theta}[R(theta) - R*]; J(x; theta*) = log Z*.
    const double j_hat = hat.log_normalizer - eta * p_hat.dot(t.estimate - t.truth);
    j_gap += weights[k] * (j_hat - star.log_normalizer);
  }
  out.j_identity_residual = std::abs(out.gap + j_gap / eta);

  auto moments = [&](double gamma, double* variance, double* second) {
    double v = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& t = terms[k];
      const Eigen::VectorXd f = gamma * t.estimate + (1.0 - gamma) * t.truth;
      const Eigen::VectorXd delta = t.estimate - t.truth;
      const Gibbs g = gibbs(t.log_prior, eta, f);
      v += weights[k] * policy_variance(g.log_probs, delta);
      s += weights[k] * policy_second_moment(g.log_probs, delta);
    }
    if (variance) *variance = v;
    if (second) *second = s;
  };
  auto h = [&](double gamma) {
    double v = 0.0;
    moments(gamma, &v, nullptr);
    return eta * gamma * v - out.gap;
  };

  std::vector<double> grid(kGammaGridPoints);
  std::vector<double> values(kGammaGridPoints);
  double max_second = 0.0;
  for (int i = 0; i < kGammaGridPoints; ++i) {
    grid[i] = static_cast<double>(i) / (kGammaGridPoints - 1);
    double v = 0.0;
    double s = 0.0;
    moments(grid[i], &v, &s);
    values[i] = eta * grid[i] * v - out.gap;
    max_second = std::max(max_second, s);
  }
  out.second_moment_bound = eta * max_second;

  int best = 0;
  for (int i = 1; i < kGammaGridPoints; ++i) {
    if (std::abs(values[i]) < std::abs(values[best])) best = i;
  }
  out.mvt_gamma = grid[best];
  out.mvt_residual = std::abs(values[best]);

  // Bisection on the first bracketing interval.
  for (int i = 0; i + 1 < kGammaGridPoints && out.mvt_residual > 0.0; ++i) {
    if ((values[i] < 0.0) == (values[i + 1] < 0.0)) continue;
    double lo = grid[i];
    double hi = grid[i + 1];
    double f_lo = values[i];
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = h(mid);
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    for (double g : {lo, hi}) {
      const double r = std::abs(h(g));
      if (r < out.mvt_residual) {
        out.mvt_residual = r;
        out.mvt_gamma = g;
      }
    }
    break;
  }
  return out;
}

Eigen::VectorXd leverages(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                          const Eigen::MatrixXd& queries, double pinv_rtol) {
  require(design.rows() == weights.size(), "one weight per design row");
  require(design.cols() == queries.cols(), "design and queries disagree on dimension");
  const Eigen::MatrixXd sigma = design.transpose() * weights.asDiagonal() * design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (top > 0.0 && lambda[i] > pinv_rtol * top) kept.push_back(i);
  }
  Eigen::MatrixXd basis(sigma.rows(), static_cast<Eigen::Index>(kept.size()));
  Eigen::VectorXd inv(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    basis.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(kept[j]);
    inv[static_cast<Eigen::Index>(j)] = 1.0 / lambda[kept[j]];
  }
  Eigen::VectorXd out(queries.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::VectorXd psi = queries.row(q).transpose();
    const Eigen::VectorXd coords = basis.transpose() * psi;
    const double outside = (psi - basis * coords).norm();
    if (outside > 1e-8 * std::max(1.0, psi.norm())) {
      out[q] = kInf;
    } else {
      out[q] = (coords.array().square() * inv.array()).sum();
    }
  }
  return out;
}

CoverageReport coverage_coefficients(const BanditInstance& instance, const ModelClass& mc,
                                     double eta, const CoverageConfig& cfg) {
  require(eta > 0.0, "eta must be positive");
  const int actions = instance.num_actions();
  require(mc.actions == actions, "model class action count does not match the instance");
  const ContextSpace& space = instance.contexts();
  if (mc.kind == RewardModel::Kind::kTabular) {
    require(space.is_finite() && static_cast<std::size_t>(mc.contexts) == space.count(),
            "tabular coverage needs the instance's finite contexts");
  } else {
    require(space.dim() == mc.dim, "linear coverage needs context features of matching dimension");
  }
  const Eigen::Index dim = mc.num_parameters();

  std::vector<Context> contexts;
  std::vector<double> context_weights;
  if (space.is_finite()) {
    for (std::size_t i = 0; i < space.count(); ++i) {
      if (space.weights()[i] > 0.0) {
        contexts.push_back(space.at(i));
        context_weights.push_back(space.weights()[i]);
      }
    }
  } else {
    require(cfg.pool >= 1, "coverage pool must be positive");
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < cfg.pool; ++i) contexts.push_back(space.sample(rng));
    context_weights.assign(cfg.pool, 1.0 / static_cast<double>(cfg.pool));
  }

  auto feature = [&](const Context& x, int a) {
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(dim);
    if (mc.kind == RewardModel::Kind::kTabular) {
      psi[static_cast<Eigen::Index>(x.index) * actions + a] = 1.0;
    } else {
      psi.segment(static_cast<Eigen::Index>(a) * mc.dim, mc.dim) = x.features;
    }
    return psi;
  };

  // Rows: every supported (x, a), weighted by d0(x) pi0(a|x).
  std::vector<Eigen::VectorXd> raw;
  std::vector<Eigen::VectorXd> centered;
  std::vector<double> weight;
  double c_global = 0.0;
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    const Context& x = contexts[k];
    const Eigen::VectorXd pi0 = instance.reference().probabilities(x);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (int a = 0; a < actions; ++a) {
      if (pi0[a] > 0.0) mean += pi0[a] * feature(x, a);
    }
    for (int a = 0; a < actions; ++a) {
      if (pi0[a] <= 0.0) continue;
      Eigen::VectorXd psi = feature(x, a);
      centered.push_back(psi - mean);
      raw.push_back(std::move(psi));
      weight.push_back(context_weights[k] * pi0[a]);
      c_global = std::max(c_global, 1.0 / pi0[a]);
    }
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(raw.size());
  Eigen::MatrixXd design(rows, dim);
  Eigen::MatrixXd design_centered(rows, dim);
  Eigen::VectorXd w(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    design.row(i) = raw[static_cast<std::size_t>(i)].transpose();
    design_centered.row(i) = centered[static_cast<std::size_t>(i)].transpose();
    w[i] = weight[static_cast<std::size_t>(i)];
  }

  CoverageReport out;
  out.d2 = leverages(design, w, design, cfg.pinv_rtol).maxCoeff();
  out.d2_centered = leverages(design_centered, w, design_centered, cfg.pinv_rtol).maxCoeff();
  out.c_global = c_global;
  out.rho = 2.0 * eta * instance.truth().bound();
  out.c_local_bound = std::exp(out.rho);
  out.lower_estimate = !space.is_finite();
  return out;
}

}  // namespace kltmps
