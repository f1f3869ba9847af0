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

// Property suites over every module. Each property draws its random cases
// from the verify stream of a fixed master seed, so a report is reproducible.

#ifndef KLTMPS_VERIFY_HPP_
#define KLTMPS_VERIFY_HPP_

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kltmps/core.hpp"

namespace kltmps {

enum class VerifyLevel { kFast, kFull };

VerifyLevel parse_level(const std::string& name);
const char* to_string(VerifyLevel level);

struct PropertyResult {
  std::string suite;
  std::string name;
  bool passed = false;
  int draws = 0;
  double residual = 0.0;  // worst case over the draws
  double tolerance = 0.0;
  std::string detail;
};

// Test seams. A set hook replaces the library call inside the suites.
struct VerifyHooks {
  std::function<Eigen::VectorXd(const SoftmaxPolicy&, const Context&)> policy_probabilities;
};

// Fast caps every suite at 10 random draws; full uses each property's own
// count. When `log` is set one line per property is printed as it finishes.
std::vector<PropertyResult> run_verify(VerifyLevel level, const VerifyHooks& hooks = {},
                                       std::ostream* log = nullptr);

std::string format_result(const PropertyResult& result);

}  // namespace kltmps

#endif  // KLTMPS_VERIFY_HPP_
