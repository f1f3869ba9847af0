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

// Instance generators used by experiments, the verification suite and tests.

#ifndef KLTMPS_INSTANCES_HPP_
#define KLTMPS_INSTANCES_HPP_

#include "kltmps/core.hpp"

namespace kltmps {

// Unit-sphere contexts in `dim` dimensions, `actions` actions, embeddings
// phi*(a) drawn from the sphere of radius `radius` (also the bound B),
// uniform reference, Gaussian noise.
BanditInstance sphere_linear_instance(Rng& rng, int dim = 10, int actions = 5,
                                      double radius = 5.0, double sigma = 0.1);

// Uniform finite contexts, table entries uniform on [0, bound], uniform
// reference. Noise defaults to Bernoulli, which needs bound <= 1.
BanditInstance random_tabular_instance(Rng& rng, int contexts, int actions,
                                       double bound = 1.0,
                                       NoiseModel noise = NoiseModel::bernoulli());

// Row-stochastic table with strictly positive entries.
ReferencePolicy random_reference_table(Rng& rng, int contexts, int actions);

// Point uniformly distributed on the sphere of the given radius.
Eigen::VectorXd sphere_point(Rng& rng, int dim, double radius = 1.0);

}  // namespace kltmps

#endif  // KLTMPS_INSTANCES_HPP_
