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

#include "kltmps/instances.hpp"

namespace kltmps {

Eigen::VectorXd sphere_point(Rng& rng, int dim, double radius) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int k = 0; k < dim; ++k) v[k] = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v * (radius / norm);
}

BanditInstance sphere_linear_instance(Rng& rng, int dim, int actions, double radius,
                                      double sigma) {
  Eigen::MatrixXd phi(actions, dim);
  for (int a = 0; a < actions; ++a) phi.row(a) = sphere_point(rng, dim, radius).transpose();
  return BanditInstance(ContextSpace::sphere_gaussian(dim), actions,
                        RewardModel::linear(std::move(phi), radius), NoiseModel::gaussian(sigma),
                        ReferencePolicy::uniform(actions));
}

BanditInstance random_tabular_instance(Rng& rng, int contexts, int actions, double bound,
                                       NoiseModel noise) {
  Eigen::MatrixXd table(contexts, actions);
  for (int x = 0; x < contexts; ++x) {
    for (int a = 0; a < actions; ++a) table(x, a) = bound * uniform01(rng);
  }
  return BanditInstance(ContextSpace::uniform_finite(static_cast<std::size_t>(contexts)), actions,
                        RewardModel::tabular(std::move(table), bound), noise,
                        ReferencePolicy::uniform(actions));
}

ReferencePolicy random_reference_table(Rng& rng, int contexts, int actions) {
  Eigen::MatrixXd rows(contexts, actions);
  for (int x = 0; x < contexts; ++x) {
    for (int a = 0; a < actions; ++a) rows(x, a) = 0.05 + uniform01(rng);
    rows.row(x) /= rows.row(x).sum();
    // Exact unit row sums: fold the rounding residue into the last entry.
    rows(x, actions - 1) = 1.0 - (rows.row(x).sum() - rows(x, actions - 1));
  }
  return ReferencePolicy::table(std::move(rows));
}

}  // namespace kltmps
