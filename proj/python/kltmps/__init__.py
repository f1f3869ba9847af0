# Copyright 2026 The kltmps Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the kltmps library."""

from ._core import (
    ConfigError,
    KltmpsError,
    bernoulli_kl,
    coverage,
    derive_seed,
    figures,
    gibbs,
    kl_bound_check,
    run,
    theorem_sample_sizes,
    verify,
)

__all__ = [
    "ConfigError",
    "KltmpsError",
    "bernoulli_kl",
    "coverage",
    "derive_seed",
    "figures",
    "gibbs",
    "kl_bound_check",
    "run",
    "theorem_sample_sizes",
    "verify",
]
