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
#include "kltmps/estimate.hpp"
#include "kltmps/instances.hpp"

using namespace kltmps;

namespace {

Context ctx(std::size_t i) { return Context{i, {}}; }

Context feat(std::initializer_list<double> v) {
  Context c;
  c.features = Eigen::VectorXd(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) c.features(i++) = x;
  c.features.normalize();
  return c;
}

FitConfig exact() {
  FitConfig c;
  c.ridge = 0.0;
  return c;
}

// Gaussian elimination with partial pivoting on the normal equations of one
// action, written without Eigen's decompositions.
std::vector<double> brute_force_normal_equations(const std::vector<std::vector<double>>& x,
                                                 const std::vector<double>& y) {
  const std::size_t d = x.front().size();
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) a[r][c] += x[i][r] * x[i][c];
      a[r][d] += x[i][r] * y[i];
    }
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= d; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> out(d);
  for (std::size_t r = 0; r < d; ++r) out[r] = a[r][d] / a[r][r];
  return out;
}

// Regularized BT objective written directly from the definition.
double bt_objective(const PreferenceBatch& batch, const RewardModel& m, double ridge) {
  double ll = 0.0;
  for (const auto& p : batch) {
    const double u = m.value(p.x, p.first) - m.value(p.x, p.second);
    ll += p.label == 1 ? std::log(1.0 / (1.0 + std::exp(-u))) : std::log(1.0 / (1.0 + std::exp(u)));
  }
  return ll - ridge * m.parameters().squaredNorm();
}

bool throws_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("tabular least squares is the per-cell mean") {
  RewardBatch batch{{ctx(0), 1, 1.0}, {ctx(0), 1, 3.0}};
  FitConfig cfg = exact();
  cfg.param_bound = 5.0;
  const FitResult r = least_squares_fit(batch, ModelClass::tabular(2, 2), cfg);
  CHECK(r.model.parameters()(0, 1) == 2.0);
  CHECK(r.model.parameters()(0, 0) == 0.0);  // unobserved cell
  CHECK(r.model.parameters()(1, 1) == 0.0);
}

TEST_CASE("tabular least squares clamps entrywise") {
  RewardBatch batch{{ctx(0), 0, 4.0}, {ctx(0), 1, -4.0}};
  FitConfig cfg = exact();
  cfg.param_bound = 1.0;
  const FitResult r = least_squares_fit(batch, ModelClass::tabular(1, 2), cfg);
  CHECK(r.unclamped.parameters()(0, 0) == 4.0);
  CHECK(r.model.parameters()(0, 0) == 1.0);
  CHECK(r.model.parameters()(0, 1) == -1.0);
}

TEST_CASE("ridge shrinks tabular cells toward zero") {
  RewardBatch batch{{ctx(0), 0, 1.0}};
  FitConfig cfg;
  cfg.ridge = 1.0;
  const FitResult r = least_squares_fit(batch, ModelClass::tabular(1, 1), cfg);
  CHECK(r.model.parameters()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("empty batches and rank-deficient designs are reported") {
  CHECK(throws_kind(ErrorKind::kEmptyBatch,
                    [] { least_squares_fit(RewardBatch{}, ModelClass::tabular(1, 1)); }));
  CHECK(throws_kind(ErrorKind::kEmptyBatch,
                    [] { bt_mle_fit(PreferenceBatch{}, ModelClass::tabular(1, 2)); }));
  RewardBatch one{{feat({1.0, 0.0}), 0, 1.0}};
  CHECK(throws_kind(ErrorKind::kSingularDesign,
                    [&] { least_squares_fit(one, ModelClass::linear(1, 2), exact()); }));
  CHECK_NOTHROW(least_squares_fit(one, ModelClass::linear(1, 2), FitConfig{}));
}

TEST_CASE("linear least squares matches a brute-force normal-equation solve") {
  // Four orthogonal contexts in two dimensions (two pairs of antipodes).
  const std::vector<Context> xs{feat({1, 0}), feat({0, 1}), feat({-1, 0}), feat({0, -1}),
                                feat({1, 1}), feat({1, -1})};
  RewardBatch batch;
  std::vector<std::vector<double>> design[2];
  std::vector<double> target[2];
  Rng rng(11);
  for (int rep = 0; rep < 3; ++rep) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (int a = 0; a < 2; ++a) {
        const double r = uniform01(rng) * 2.0 - 1.0;
        batch.push_back({xs[i], a, r});
        design[a].push_back({xs[i].features(0), xs[i].features(1)});
        target[a].push_back(r);
      }
    }
  }
  FitConfig cfg = exact();
  cfg.param_bound = 100.0;
  const FitResult fit = least_squares_fit(batch, ModelClass::linear(2, 2), cfg);
  for (int a = 0; a < 2; ++a) {
    const auto oracle = brute_force_normal_equations(design[a], target[a]);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(fit.unclamped.parameters()(a, j) - oracle[j]) <= 1e-10);
    }
  }
}

TEST_CASE("noiseless least squares recovers the truth") {
  Rng rng(12);
  const BanditInstance inst = sphere_linear_instance(rng, 6, 4, 5.0, 0.0);
  RewardBatch batch;
  for (int i = 0; i < 400; ++i) {
    const Context x = sample_context(inst, rng);
    const int a = static_cast<int>(rng() % 4);
    batch.push_back({x, a, sample_reward(inst, x, a, rng)});
  }
  FitConfig cfg = exact();
  const FitResult r = least_squares_fit(batch, ModelClass::of(inst), cfg);
  CHECK((r.unclamped.parameters() - inst.truth().parameters()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("linear least squares projects rows onto the bound") {
  RewardBatch batch{{feat({1, 0}), 0, 10.0}, {feat({0, 1}), 0, 0.0}};
  FitConfig cfg = exact();
  cfg.param_bound = 2.0;
  const FitResult r = least_squares_fit(batch, ModelClass::linear(1, 2), cfg);
  CHECK(r.unclamped.parameters()(0, 0) == doctest::Approx(10.0));
  CHECK(r.model.parameters().row(0).norm() == doctest::Approx(2.0));
}

TEST_CASE("bt mle recovers the empirical logit of a single pair") {
  PreferenceBatch batch;
  for (int i = 0; i < 100; ++i) batch.push_back({ctx(0), 0, 1, i < 75 ? 1 : 0});
  FitConfig cfg = exact();
  cfg.param_bound = 10.0;
  const FitResult r = bt_mle_fit(batch, ModelClass::tabular(1, 2), cfg);
  const auto& p = r.model.parameters();
  CHECK(p(0, 0) - p(0, 1) == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(std::log(3.0) == doctest::Approx(1.0986).epsilon(1e-4));
  // Centered: per-context mean removed.
  CHECK(std::abs(p.row(0).sum()) <= 1e-12);
  CHECK(r.converged);
  CHECK_FALSE(r.separable);
}

TEST_CASE("balanced labels give zero reward differences") {
  PreferenceBatch batch;
  for (int i = 0; i < 50; ++i) {
    for (auto [a, b] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
      batch.push_back({ctx(0), a, b, i % 2});
    }
  }
  const FitResult r = bt_mle_fit(batch, ModelClass::tabular(1, 3), exact());
  CHECK(r.model.parameters().cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("bt gradient vanishes at the optimum and matches finite differences") {
  Rng rng(13);
  const BanditInstance inst = random_tabular_instance(rng, 3, 3);
  PreferenceBatch batch;
  for (int i = 0; i < 2000; ++i) {
    const Context x = sample_context(inst, rng);
    const int a = static_cast<int>(rng() % 3);
    const int b = static_cast<int>(rng() % 3);
    batch.push_back({x, a, b, preference_oracle(inst.truth(), x, a, b, rng)});
  }
  const FitConfig cfg;
  const FitResult r = bt_mle_fit(batch, ModelClass::of(inst), cfg);
  CHECK(r.converged);
  CHECK(r.grad_max_norm <= cfg.grad_tol);
  CHECK(r.objective == doctest::Approx(bt_objective(batch, r.unclamped, cfg.ridge)).epsilon(1e-12));

  // Central differences of the objective at the returned point.
  const Eigen::MatrixXd theta = r.unclamped.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::MatrixXd up = theta;
    Eigen::MatrixXd down = theta;
    const double h = 1e-5;
    up.data()[i] += h;
    down.data()[i] -= h;
    const double g = (bt_objective(batch, r.unclamped.with_parameters(up), cfg.ridge) -
                      bt_objective(batch, r.unclamped.with_parameters(down), cfg.ridge)) /
                     (2 * h);
    worst = std::max(worst, std::abs(g));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("bt mle is consistent on a small instance") {
  Rng rng(14);
  const BanditInstance inst = random_tabular_instance(rng, 3, 3);
  PreferenceBatch batch;
  for (int i = 0; i < 50'000; ++i) {
    const Context x = sample_context(inst, rng);
    const int a = inst.reference().sample(x, rng);
    const int b = inst.reference().sample(x, rng);
    batch.push_back({x, a, b, preference_oracle(inst.truth(), x, a, b, rng)});
  }
  const FitResult r = bt_mle_fit(batch, ModelClass::of(inst));
  const Eigen::MatrixXd truth = center(inst.truth()).parameters();
  CHECK((r.model.parameters() - truth).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("one-sided pairs are flagged separable without ridge") {
  PreferenceBatch batch{{ctx(0), 0, 1, 1}, {ctx(0), 0, 1, 1}};
  FitConfig cfg = exact();
  cfg.max_iters = 200;
  cfg.param_bound = 1.0;
  const FitResult r = bt_mle_fit(batch, ModelClass::tabular(1, 2), cfg);
  CHECK(r.separable);
  CHECK(r.model.parameters().cwiseAbs().maxCoeff() <= 1.0);
  const FitResult ridged = bt_mle_fit(batch, ModelClass::tabular(1, 2), FitConfig{});
  CHECK_FALSE(ridged.separable);
}

TEST_CASE("linear bt mle centers the embedding") {
  Rng rng(15);
  const BanditInstance inst = sphere_linear_instance(rng, 3, 3, 1.0);
  PreferenceBatch batch;
  for (int i = 0; i < 3000; ++i) {
    const Context x = sample_context(inst, rng);
    const int a = static_cast<int>(rng() % 3);
    const int b = static_cast<int>(rng() % 3);
    batch.push_back({x, a, b, preference_oracle(inst.truth(), x, a, b, rng)});
  }
  const FitResult r = bt_mle_fit(batch, ModelClass::of(inst));
  CHECK(r.converged);
  CHECK(r.model.parameters().colwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("center removes the gauge") {
  Eigen::MatrixXd t(2, 3);
  t << 1, 2, 3, 4, 4, 4;
  const RewardModel c = center(RewardModel::tabular(t, 5.0));
  CHECK(c.parameters()(0, 0) == -1.0);
  CHECK(c.parameters()(0, 2) == 1.0);
  CHECK(c.parameters().row(1).cwiseAbs().maxCoeff() == 0.0);
}
