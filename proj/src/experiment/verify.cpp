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

#include "kltmps/verify.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "kltmps/algo.hpp"
#include "kltmps/estimate.hpp"
#include "kltmps/eval.hpp"
#include "kltmps/experiment.hpp"
#include "kltmps/hardcase.hpp"
#include "kltmps/instances.hpp"

namespace kltmps {
namespace {

constexpr std::uint64_t kVerifySeed = 0x6b6c746d7073ULL;
constexpr double kEtas[] = {0.25, 1.0, 4.0};

class Check {
 public:
  Check(std::string suite, std::string name, double tolerance)
      : result_{std::move(suite), std::move(name), true, 0, 0.0, tolerance, {}} {}

  void observe(double residual, const std::string& context = {}) {
    if (std::isnan(residual) || residual > result_.residual || std::isnan(result_.residual)) {
      result_.residual = residual;
    }
    if (!(residual <= result_.tolerance)) fail(context);
  }
  void fail(const std::string& context) {
    if (result_.passed) result_.detail = context;
    result_.passed = false;
  }
  void count() { ++result_.draws; }
  PropertyResult result() const { return result_; }

 private:
  PropertyResult result_;
};

class Runner {
 public:
  Runner(VerifyLevel level, const VerifyHooks& hooks, std::ostream* log)
      : level_(level), hooks_(hooks), log_(log) {}

  int draws(int full) const { return level_ == VerifyLevel::kFast ? std::min(full, 10) : full; }

  Rng rng(int property, int draw) const {
    return SeedScope(kVerifySeed + static_cast<std::uint64_t>(property),
                     static_cast<std::uint64_t>(draw))
        .stream(Stage::kVerify, Purpose::kGeneric);
  }

  Eigen::VectorXd probabilities(const SoftmaxPolicy& policy, const Context& x) const {
    return hooks_.policy_probabilities ? hooks_.policy_probabilities(policy, x)
                                       : policy.probabilities(x);
  }

  void record(const Check& check) {
    results_.push_back(check.result());
    if (log_) *log_ << format_result(results_.back()) << '\n' << std::flush;
  }

  std::vector<PropertyResult> take() { return std::move(results_); }

 private:
  VerifyLevel level_;
  const VerifyHooks& hooks_;
  std::ostream* log_;
  std::vector<PropertyResult> results_;
};

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, lo, hi);
  }
  return m;
}

// Finite contexts with random d0, random table truth in [0, 1] and a random
// positive reference table.
BanditInstance random_finite(Rng& rng, int max_contexts = 6, int max_actions = 4,
                             int min_actions = 1) {
  const int contexts = uniform_int(rng, 1, max_contexts);
  const int actions = uniform_int(rng, min_actions, max_actions);
  std::vector<double> w(contexts);
  double sum = 0.0;
  for (auto& v : w) sum += (v = uniform(rng, 0.1, 1.0));
  for (auto& v : w) v /= sum;
  return BanditInstance(ContextSpace::finite(w), actions,
                        RewardModel::tabular(random_matrix(rng, contexts, actions, 0.0, 1.0), 1.0),
                        NoiseModel::bernoulli(), random_reference_table(rng, contexts, actions));
}

RewardModel random_estimate(Rng& rng, const BanditInstance& instance, double scale) {
  const RewardModel& t = instance.truth();
  return t.with_parameters(
      random_matrix(rng, static_cast<int>(t.parameters().rows()),
                    static_cast<int>(t.parameters().cols()), -scale, scale));
}

std::vector<Context> finite_contexts(const BanditInstance& instance) {
  std::vector<Context> out;
  for (std::size_t i = 0; i < instance.contexts().count(); ++i) {
    out.push_back(instance.contexts().at(i));
  }
  return out;
}

PreferenceBatch reference_preferences(const BanditInstance& instance, std::size_t size, Rng& rng) {
  PreferenceBatch batch;
  batch.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    PreferenceSample s;
    s.x = sample_context(instance, rng);
    s.first = instance.reference().sample(s.x, rng);
    s.second = instance.reference().sample(s.x, rng);
    s.label = preference_oracle(instance.truth(), s.x, s.first, s.second, rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

RewardBatch reference_rewards(const BanditInstance& instance, std::size_t size, Rng& rng) {
  RewardBatch batch;
  batch.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    RewardSample s;
    s.x = sample_context(instance, rng);
    s.action = instance.reference().sample(s.x, rng);
    s.reward = sample_reward(instance, s.x, s.action, rng);
    batch.push_back(std::move(s));
  }
  return batch;
}

// Adds a per-context constant: one per table row, or a shared vector added to
// every embedding row (shift <x, c>).
RewardModel gauge_shift(const RewardModel& model, Rng& rng) {
  Eigen::MatrixXd p = model.parameters();
  if (model.kind() == RewardModel::Kind::kTabular) {
    for (Eigen::Index x = 0; x < p.rows(); ++x) p.row(x).array() += uniform(rng, -3.0, 3.0);
  } else {
    const Eigen::RowVectorXd c = random_matrix(rng, 1, static_cast<int>(p.cols()), -3.0, 3.0);
    p.rowwise() += c;
  }
  return model.with_parameters(std::move(p));
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

// ---------------------------------------------------------------------------
// core

void core_suite(Runner& run) {
  {
    Check check("core", "softmax_normalization", 1e-10);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(1, d);
      const double eta = kEtas[d % 3];
      std::vector<Context> xs;
      std::optional<BanditInstance> instance;
      if (d % 2 == 0) {
        instance.emplace(random_finite(rng));
        xs = finite_contexts(*instance);
      } else {
        instance.emplace(sphere_linear_instance(rng, uniform_int(rng, 2, 6), uniform_int(rng, 1, 5)));
        for (int i = 0; i < 20; ++i) xs.push_back(sample_context(*instance, rng));
      }
      const SoftmaxPolicy policy(instance->reference(), eta, random_estimate(rng, *instance, 3.0));
      for (const auto& x : xs) {
        const Eigen::VectorXd p = run.probabilities(policy, x);
        const double range = std::max({0.0, -p.minCoeff(), p.maxCoeff() - 1.0});
        check.observe(std::max(std::abs(p.sum() - 1.0), range), fmt::format("draw {}", d));
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("core", "small_eta_matches_reference", 1e-6);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(2, d);
      const BanditInstance instance = random_finite(rng);
      const SoftmaxPolicy policy =
          planning_oracle(random_estimate(rng, instance, 5.0), instance.reference(), 1e-8);
      for (const auto& x : finite_contexts(instance)) {
        check.observe(max_abs_diff(run.probabilities(policy, x),
                                   instance.reference().probabilities(x)),
                      fmt::format("draw {}", d));
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("core", "preference_antisymmetry", 4 * DBL_EPSILON);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(3, d);
      const BanditInstance instance = random_finite(rng, 6, 4, 2);
      const RewardModel r = random_estimate(rng, instance, 5.0);
      for (const auto& x : finite_contexts(instance)) {
        for (int a1 = 0; a1 < instance.num_actions(); ++a1) {
          for (int a2 = 0; a2 < instance.num_actions(); ++a2) {
            check.observe(std::abs(preference_probability(r, x, a1, a2) +
                                   preference_probability(r, x, a2, a1) - 1.0),
                          fmt::format("draw {}", d));
          }
        }
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("core", "sampling_reproducible", 0.0);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(4, d);
      const BanditInstance instance = random_finite(rng, 6, 4, 2);
      const SeedScope seeds(rng(), static_cast<std::uint64_t>(d));
      AlgoConfig cfg;
      cfg.m = 20;
      cfg.n = 20;
      const RunResult a = tmps_run(instance, cfg, seeds);
      const RunResult b = tmps_run(instance, cfg, seeds);
      cfg.feedback = Feedback::kPreference;
      const RunResult c = tmps_pf_run(instance, cfg, seeds);
      const RunResult e = tmps_pf_run(instance, cfg, seeds);
      const bool same = a.trace.first_batch == b.trace.first_batch &&
                        a.trace.second_batch == b.trace.second_batch &&
                        c.trace.first_batch == e.trace.first_batch &&
                        c.trace.second_batch == e.trace.second_batch;
      check.observe(same ? 0.0 : 1.0, fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
}

// ---------------------------------------------------------------------------
// estimate

void estimate_suite(Runner& run) {
  {
    const FitConfig fit;
    Check check("estimate", "bt_gradient_at_optimum", fit.grad_tol);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(10, d);
      const BanditInstance instance = random_finite(rng, 6, 4, 2);
      const PreferenceBatch batch = reference_preferences(instance, 500, rng);
      const FitResult r = bt_mle_fit(batch, ModelClass::of(instance), fit);
      check.observe(r.converged ? r.grad_max_norm : INFINITY, fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("estimate", "mle_dominates_truth", 1e-9);
    FitConfig fit;
    fit.ridge = 0.0;
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(11, d);
      for (int attempt = 0; attempt < 20; ++attempt) {
        const BanditInstance instance = random_finite(rng, 3, 3, 2);
        const PreferenceBatch batch = reference_preferences(instance, 3000, rng);
        const FitResult r = bt_mle_fit(batch, ModelClass::of(instance), fit);
        if (r.separable) continue;
        const double ll_hat = bt_log_likelihood(batch, r.unclamped);
        const double ll_star = bt_log_likelihood(batch, instance.truth());
        check.observe(std::max(0.0, ll_star - ll_hat), fmt::format("draw {}", d));
        check.count();
        break;
      }
    }
    run.record(check);
  }
  {
    Check check("estimate", "least_squares_residual_orthogonal", 1e-8);
    FitConfig fit;
    fit.ridge = 0.0;
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(12, d);
      const BanditInstance instance =
          sphere_linear_instance(rng, uniform_int(rng, 2, 6), uniform_int(rng, 2, 5));
      const RewardBatch batch = reference_rewards(instance, 200, rng);
      std::optional<FitResult> r;
      try {
        r = least_squares_fit(batch, ModelClass::of(instance), fit);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kSingularDesign) throw;
        continue;
      }
      Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(instance.num_actions(), instance.contexts().dim());
      for (const auto& s : batch) {
        moment.row(s.action) +=
            (r->unclamped.value(s.x, s.action) - s.reward) * s.x.features.transpose();
      }
      check.observe(moment.cwiseAbs().maxCoeff(), fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("estimate", "planning_gauge_invariant", 1e-12);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(13, d);
      const bool linear = d % 2 == 1;
      const BanditInstance instance =
          linear ? sphere_linear_instance(rng, uniform_int(rng, 2, 5), uniform_int(rng, 2, 4), 2.0)
                 : random_finite(rng, 6, 4, 2);
      const PreferenceBatch batch = reference_preferences(instance, 400, rng);
      const FitResult r = bt_mle_fit(batch, ModelClass::of(instance));
      const double eta = kEtas[d % 3];
      const SoftmaxPolicy base = planning_oracle(r.model, instance.reference(), eta);
      const SoftmaxPolicy shifted =
          planning_oracle(gauge_shift(r.model, rng), instance.reference(), eta);
      std::vector<Context> xs;
      if (linear) {
        for (int i = 0; i < 20; ++i) xs.push_back(sample_context(instance, rng));
      } else {
        xs = finite_contexts(instance);
      }
      for (const auto& x : xs) {
        check.observe(max_abs_diff(run.probabilities(base, x), run.probabilities(shifted, x)),
                      fmt::format("draw {}", d));
      }
      check.count();
    }
    run.record(check);
  }
}

// ---------------------------------------------------------------------------
// algo

void algo_suite(Runner& run) {
  {
    Check check("algo", "two_stage_deterministic", 0.0);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(20, d);
      const BanditInstance instance = random_finite(rng, 6, 4, 2);
      const SeedScope seeds(rng(), 0);
      AlgoConfig cfg;
      cfg.m = 30;
      cfg.n = 30;
      bool same = true;
      for (auto algorithm : {Algorithm::kTmps, Algorithm::kTmpsPf, Algorithm::kOffline}) {
        cfg.feedback = algorithm == Algorithm::kTmpsPf ? Feedback::kPreference : Feedback::kReward;
        const RunResult a = run_algorithm(algorithm, instance, cfg, seeds);
        const RunResult b = run_algorithm(algorithm, instance, cfg, seeds);
        same = same && bitwise_equal(a.policy.reward_estimate().parameters(),
                                     b.policy.reward_estimate().parameters());
      }
      check.observe(same ? 0.0 : 1.0, fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("algo", "empty_second_stage_is_offline", 0.0);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(21, d);
      const BanditInstance instance = random_finite(rng, 6, 4, 2);
      const SeedScope seeds(rng(), 0);
      AlgoConfig cfg;
      cfg.m = 40;
      cfg.n = 0;
      const RunResult a = tmps_run(instance, cfg, seeds);
      const RunResult b = offline_run(instance, cfg, seeds);
      check.observe(bitwise_equal(a.policy.reward_estimate().parameters(),
                                  b.policy.reward_estimate().parameters())
                        ? 0.0
                        : 1.0,
                    fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("algo", "pooled_fit_no_worse", 1e-10);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(22, d);
      const bool linear = d % 2 == 1;
      const BanditInstance instance =
          linear ? sphere_linear_instance(rng, uniform_int(rng, 2, 5), uniform_int(rng, 2, 4))
                 : random_finite(rng, 6, 4, 2);
      AlgoConfig cfg;
      cfg.m = 60;
      cfg.n = 60;
      const RunResult r = tmps_run(instance, cfg, SeedScope(rng(), 0));
      RewardBatch pooled = std::get<RewardBatch>(r.trace.first_batch);
      const auto& second = std::get<RewardBatch>(r.trace.second_batch);
      pooled.insert(pooled.end(), second.begin(), second.end());
      auto objective = [&](const RewardModel& m) {
        return squared_loss(pooled, m) + cfg.fit.ridge * m.parameters().squaredNorm();
      };
      const double first = objective(r.trace.first_fit.unclamped);
      const double final = objective(r.trace.final_fit.unclamped);
      check.observe(std::max(0.0, final - first) / (1.0 + first), fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("algo", "intermediate_policy_coverage", std::exp(4.0) * 1.1);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(23, d);
      const BanditInstance instance = random_tabular_instance(rng, 2, 2);
      const double eta = 1.0;
      TheoryBudget budget;
      budget.coverage = coverage_coefficients(instance, ModelClass::of(instance), eta).d2;
      const SampleSizes sizes =
          theorem_sample_sizes(budget, eta, instance.truth().bound(), Feedback::kReward);
      AlgoConfig cfg;
      cfg.eta = eta;
      cfg.m = sizes.m;
      cfg.n = sizes.n;
      const RunResult r = tmps_run(instance, cfg, SeedScope(rng(), 0));
      const Eigen::MatrixXd& hat = r.trace.final_fit.model.parameters();
      const Eigen::MatrixXd& star = instance.truth().parameters();
      double worst = 0.0;
      for (int g = 0; g <= 10; ++g) {
        const double gamma = g / 10.0;
        const SoftmaxPolicy f = planning_oracle(
            instance.truth().with_parameters(gamma * hat + (1.0 - gamma) * star),
            instance.reference(), eta);
        for (const auto& x : finite_contexts(instance)) {
          const Eigen::VectorXd ratio =
              run.probabilities(f, x).array() / run.probabilities(r.intermediate, x).array();
          worst = std::max(worst, ratio.maxCoeff());
        }
      }
      check.observe(worst, fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
}

// ---------------------------------------------------------------------------
// eval

// (1/eta) sum_x d0(x) log sum_a pi0(a|x) exp(eta R(x, a)), written out.
double log_partition_value(const BanditInstance& instance, double eta) {
  double total = 0.0;
  for (std::size_t i = 0; i < instance.contexts().count(); ++i) {
    const Context x = instance.contexts().at(i);
    const Eigen::VectorXd p0 = instance.reference().probabilities(x);
    const Eigen::VectorXd r = instance.truth().values(x);
    const double top = (eta * r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index a = 0; a < r.size(); ++a) s += p0(a) * std::exp(eta * r(a) - top);
    total += instance.contexts().weights()[i] * (top + std::log(s));
  }
  return total / eta;
}

void eval_suite(Runner& run) {
  {
    Check check("eval", "gap_matches_kl_form", 1e-9);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(30, d);
      const BanditInstance instance = random_finite(rng);
      const RewardModel estimate = random_estimate(rng, instance, 1.0);
      for (double eta : kEtas) {
        const GapReport g =
            suboptimality_gap(instance, planning_oracle(estimate, instance.reference(), eta), eta);
        check.observe(std::abs(g.gap - g.kl_form), fmt::format("draw {} eta {}", d, eta));
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("eval", "optimal_value_log_partition", 1e-9);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(31, d);
      const BanditInstance instance = random_finite(rng);
      for (double eta : kEtas) {
        const Estimate q = objective_q(
            instance, planning_oracle(instance.truth(), instance.reference(), eta), eta);
        check.observe(std::abs(q.value - log_partition_value(instance, eta)),
                      fmt::format("draw {} eta {}", d, eta));
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check j_check("eval", "j_identity", 1e-9);
    Check mvt_check("eval", "mean_value_gamma_exists", 1e-6);
    Check bound_check("eval", "gap_below_second_moment", 1e-6);
    for (int d = 0; d < run.draws(50); ++d) {
      Rng rng = run.rng(32, d);
      const BanditInstance instance = random_finite(rng);
      const double eta = std::exp(uniform(rng, std::log(0.25), std::log(4.0)));
      const Decomposition dec =
          decomposition_check(instance, random_estimate(rng, instance, 1.0), eta);
      const std::string ctx = fmt::format("draw {} eta {:.4g}", d, eta);
      j_check.observe(dec.j_identity_residual, ctx);
      mvt_check.observe(dec.mvt_residual / (1.0 + dec.gap), ctx);
      bound_check.observe(dec.gap - dec.second_moment_bound, ctx);
      j_check.count();
      mvt_check.count();
      bound_check.count();
    }
    run.record(j_check);
    run.record(mvt_check);
    run.record(bound_check);
  }
  {
    // Adding design mass on new support points never raises the leverage of
    // the original ones. Tabular designs are one-hot cells; dense designs are
    // random feature rows.
    Check check("eval", "d2_monotone_in_support", 1e-9);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(33, d);
      const bool tabular = d % 2 == 0;
      const int dim = uniform_int(rng, 2, 12);
      const int original = uniform_int(rng, 1, dim);
      const int extra = uniform_int(rng, 1, dim);
      Eigen::MatrixXd design(original + extra, dim);
      if (tabular) {
        design.setZero();
        for (int i = 0; i < original + extra; ++i) design(i, i % dim) = 1.0;
      } else {
        design = random_matrix(rng, original + extra, dim, -1.0, 1.0);
      }
      Eigen::VectorXd w(original + extra);
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform(rng, 0.05, 1.0);
      const Eigen::MatrixXd queries = design.topRows(original);
      const Eigen::VectorXd before =
          leverages(queries, w.head(original), queries);
      const Eigen::VectorXd after = leverages(design, w, queries);
      const double d2_before = before.maxCoeff();
      const double d2_after = after.maxCoeff();
      double worst = (d2_after - d2_before) / std::max(1.0, d2_before);
      for (Eigen::Index i = 0; i < before.size(); ++i) {
        worst = std::max(worst, (after(i) - before(i)) / std::max(1.0, before(i)));
      }
      check.observe(std::max(0.0, worst), fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
  {
    Check check("eval", "gap_report_gauge_invariant", 1e-12);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(34, d);
      const BanditInstance instance = random_finite(rng);
      const RewardModel estimate = random_estimate(rng, instance, 1.0);
      const double eta = kEtas[d % 3];
      const GapReport a =
          suboptimality_gap(instance, planning_oracle(estimate, instance.reference(), eta), eta);
      const GapReport b = suboptimality_gap(
          instance, planning_oracle(gauge_shift(estimate, rng), instance.reference(), eta), eta);
      check.observe(std::max({std::abs(a.gap - b.gap), std::abs(a.kl_form - b.kl_form),
                              std::abs(a.std_error - b.std_error)}),
                    fmt::format("draw {}", d));
      check.count();
    }
    run.record(check);
  }
}

// ---------------------------------------------------------------------------
// hardcase

void hardcase_suite(Runner& run) {
  {
    Check check("hardcase", "optimal_policy_closed_form", 1e-12);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(40, d);
      HardInstanceSpec spec;
      spec.contexts = uniform_int(rng, 2, 8);
      spec.gap = uniform(rng, 0.0, 0.25);
      spec.optimal_action = random_optimal_actions(spec.contexts, rng);
      const double eta = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
      const double expected = std::exp(eta * spec.gap) / (std::exp(eta * spec.gap) + 1.0);
      for (auto flavor : {HardFlavor::kRewardFeedback, HardFlavor::kPreferenceFeedback}) {
        spec.flavor = flavor;
        const BanditInstance instance = build_hard_instance(spec);
        const SoftmaxPolicy star = planning_oracle(instance.truth(), instance.reference(), eta);
        for (int x = 0; x < spec.contexts; ++x) {
          const Eigen::VectorXd p = run.probabilities(star, instance.contexts().at(x));
          check.observe(std::abs(p(spec.optimal_action[x]) - expected),
                        fmt::format("draw {} context {}", d, x));
        }
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("hardcase", "flavors_share_optimal_policy", 4 * DBL_EPSILON);
    for (int d = 0; d < run.draws(100); ++d) {
      Rng rng = run.rng(41, d);
      HardInstanceSpec spec;
      spec.contexts = uniform_int(rng, 2, 8);
      spec.gap = uniform(rng, 0.0, 0.25);
      spec.optimal_action = random_optimal_actions(spec.contexts, rng);
      const double eta = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
      spec.flavor = HardFlavor::kRewardFeedback;
      const BanditInstance reward = build_hard_instance(spec);
      spec.flavor = HardFlavor::kPreferenceFeedback;
      const BanditInstance preference = build_hard_instance(spec);
      const SoftmaxPolicy a = planning_oracle(reward.truth(), reward.reference(), eta);
      const SoftmaxPolicy b = planning_oracle(preference.truth(), preference.reference(), eta);
      for (int x = 0; x < spec.contexts; ++x) {
        const Context cx = reward.contexts().at(x);
        check.observe(max_abs_diff(run.probabilities(a, cx), run.probabilities(b, cx)),
                      fmt::format("draw {} context {}", d, x));
      }
      check.count();
    }
    run.record(check);
  }
  {
    Check check("hardcase", "kl_bounds", 0.0);
    std::vector<double> grid;
    for (int i = 1; i <= 24; ++i) grid.push_back(i / 100.0);
    for (const auto& row : kl_bound_check(grid)) {
      const double excess = std::max(row.reward_kl - row.reward_bound,
                                     row.preference_kl - row.preference_bound);
      check.observe(std::max(0.0, excess), fmt::format("c {}", row.c));
      check.count();
    }
    run.record(check);
  }
}

// ---------------------------------------------------------------------------
// cli

ExperimentConfig tiny_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.instance.contexts = InstanceSpec::ContextKind::kFinite;
  cfg.instance.count = 3;
  cfg.instance.actions = 3;
  cfg.instance.truth = InstanceSpec::TruthKind::kUniformTable;
  cfg.grid = {{8, 8}, {16, 16}};
  cfg.repeats = 3;
  cfg.seed = seed;
  return cfg;
}

void cli_suite(Runner& run) {
  Check round_trip("cli", "csv_round_trip", 0.0);
  Check recompute("cli", "summary_recomputes_from_raw", 1e-12);
  for (int d = 0; d < run.draws(10); ++d) {
    Rng rng = run.rng(50, d);
    const ExperimentResult result = run_experiment(tiny_config(rng()));
    std::stringstream raw;
    std::stringstream summary;
    write_raw_csv(raw, result.rows);
    write_summary_csv(summary, result.summary, {"verify"});
    const auto raw_back = read_raw_csv(raw);
    const auto summary_back = read_summary_csv(summary);
    round_trip.observe(raw_back == result.rows && summary_back == result.summary ? 0.0 : 1.0,
                       fmt::format("draw {}", d));

    // Extreme magnitudes survive the text form too.
    for (int i = 0; i < 100; ++i) {
      const double v = std::ldexp(uniform(rng, -1.0, 1.0), uniform_int(rng, -1000, 1000));
      round_trip.observe(std::stod(format_double(v)) == v ? 0.0 : 1.0, format_double(v));
    }
    const auto again = summarize(raw_back);
    double worst = again.size() == summary_back.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(again.size(), summary_back.size()); ++i) {
      worst = std::max({worst, std::abs(again[i].gap_mean - summary_back[i].gap_mean),
                        std::abs(again[i].gap_std - summary_back[i].gap_std)});
    }
    recompute.observe(worst, fmt::format("draw {}", d));
    round_trip.count();
    recompute.count();
  }
  run.record(round_trip);
  run.record(recompute);
}

}  // namespace

VerifyLevel parse_level(const std::string& name) {
  if (name == "fast") return VerifyLevel::kFast;
  if (name == "full") return VerifyLevel::kFull;
  throw Error(ErrorKind::kConfig, "level must be 'fast' or 'full', got '" + name + "'");
}

const char* to_string(VerifyLevel level) {
  return level == VerifyLevel::kFast ? "fast" : "full";
}

std::string format_result(const PropertyResult& r) {
  std::string line = fmt::format("{} {}.{} draws={} residual={:.3g} tol={:.3g}",
                                 r.passed ? "PASS" : "FAIL", r.suite, r.name, r.draws,
                                 r.residual, r.tolerance);
  if (!r.passed && !r.detail.empty()) line += " at " + r.detail;
  return line;
}

std::vector<PropertyResult> run_verify(VerifyLevel level, const VerifyHooks& hooks,
                                       std::ostream* log) {
  Runner run(level, hooks, log);
  core_suite(run);
  estimate_suite(run);
  algo_suite(run);
  eval_suite(run);
  hardcase_suite(run);
  cli_suite(run);
  return run.take();
}

}  // namespace kltmps
