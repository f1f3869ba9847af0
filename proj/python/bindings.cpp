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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "kltmps/experiment.hpp"
#include "kltmps/verify.hpp"

namespace py = pybind11;
using namespace kltmps;

namespace {

py::dict raw_dict(const RawRow& r) {
  py::dict d;
  d["algorithm"] = r.algorithm;
  d["feedback"] = r.feedback;
  d["eta"] = r.eta;
  d["m"] = r.m;
  d["n"] = r.n;
  d["total"] = r.total;
  d["repeat"] = r.repeat;
  d["seed"] = r.seed;
  d["gap"] = r.gap;
  d["gap_stderr"] = r.gap_stderr;
  d["wall_ms"] = r.wall_ms;
  return d;
}

py::dict summary_dict(const SummaryRow& r) {
  py::dict d;
  d["algorithm"] = r.algorithm;
  d["feedback"] = r.feedback;
  d["eta"] = r.eta;
  d["m"] = r.m;
  d["n"] = r.n;
  d["total"] = r.total;
  d["repeats"] = r.repeats;
  d["gap_mean"] = r.gap_mean;
  d["gap_std"] = r.gap_std;
  return d;
}

ExperimentConfig configure(const std::string& json_text, std::optional<std::uint64_t> seed,
                           std::optional<int> workers) {
  ExperimentConfig cfg = parse_config(json_text);
  if (seed) cfg.seed = *seed;
  if (workers) {
    if (*workers < 1) throw ConfigError("workers must be >= 1");
    cfg.workers = *workers;
  }
  return cfg;
}

template <typename Row, typename Fn>
py::list to_list(const std::vector<Row>& rows, Fn fn) {
  py::list out;
  for (const auto& r : rows) out.append(fn(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-stage mixed sampling for KL-regularized contextual bandits";

  static py::exception<Error> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<Error> library_error(m, "KltmpsError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kConfig) {
        config_error(e.what());
      } else {
        library_error(e.what());
      }
    }
  });

  m.def(
      "run",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> workers) {
        const ExperimentConfig cfg = configure(config, seed, workers);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        std::ostringstream raw;
        std::ostringstream summary;
        write_raw_csv(raw, r.rows);
        write_summary_csv(summary, r.summary, seed_metadata(cfg));
        py::dict out;
        out["raw"] = to_list(r.rows, raw_dict);
        out["summary"] = to_list(r.summary, summary_dict);
        out["raw_csv"] = raw.str();
        out["summary_csv"] = summary.str();
        return out;
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none(),
      "Run the sweep described by a JSON config string.");

  m.def(
      "coverage",
      [](const std::string& config, std::optional<std::uint64_t> seed) {
        const ExperimentConfig cfg = configure(config, seed, std::nullopt);
        py::list out;
        for (const auto& r : run_coverage(cfg)) {
          py::dict d;
          d["name"] = r.name;
          d["model_class"] = r.model_class;
          d["contexts"] = r.contexts;
          d["actions"] = r.actions;
          d["dim"] = r.dim;
          d["d2"] = r.report.d2;
          d["d2_centered"] = r.report.d2_centered;
          d["c_global"] = r.report.c_global;
          d["c_local_bound"] = r.report.c_local_bound;
          d["rho"] = r.report.rho;
          d["lower_estimate"] = r.report.lower_estimate;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("seed") = py::none());

  m.def(
      "figures",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> workers) {
        const ExperimentConfig cfg = configure(config, seed, workers);
        FigureTables t;
        {
          py::gil_scoped_release release;
          t = run_figures(cfg);
        }
        std::ostringstream a;
        std::ostringstream b;
        write_figure_csv(a, t.panel_a);
        write_figure_csv(b, t.panel_b);
        py::dict out;
        out["prefix"] = figure_prefix(cfg.feedback);
        out["a_csv"] = a.str();
        out["b_csv"] = b.str();
        return out;
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none());

  m.def(
      "verify",
      [](const std::string& level) {
        const VerifyLevel lv = parse_level(level);
        py::list out;
        for (const auto& r : run_verify(lv, {})) {
          py::dict d;
          d["suite"] = r.suite;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["draws"] = r.draws;
          d["residual"] = r.residual;
          d["tolerance"] = r.tolerance;
          out.append(d);
        }
        return out;
      },
      py::arg("level") = "fast");

  m.def(
      "gibbs",
      [](const Eigen::VectorXd& log_prior, double eta, const Eigen::VectorXd& rewards) {
        const Gibbs g = gibbs(log_prior, eta, rewards);
        return py::make_tuple(g.log_probs, g.log_normalizer);
      },
      py::arg("log_prior"), py::arg("eta"), py::arg("rewards"),
      "Log-probabilities of prior * exp(eta * rewards) and the log normalizer.");

  m.def(
      "kl_bound_check",
      [](const std::vector<double>& c_grid) {
        py::list out;
        for (const auto& r : kl_bound_check(c_grid)) {
          py::dict d;
          d["c"] = r.c;
          d["reward_kl"] = r.reward_kl;
          d["reward_bound"] = r.reward_bound;
          d["preference_kl"] = r.preference_kl;
          d["preference_bound"] = r.preference_bound;
          d["holds"] = r.holds;
          out.append(d);
        }
        return out;
      },
      py::arg("c_grid"));

  m.def("bernoulli_kl", &bernoulli_kl, py::arg("p"), py::arg("q"));

  m.def(
      "theorem_sample_sizes",
      [](double epsilon, double delta, double cover_count, double coverage, double eta,
         double bound, const std::string& feedback) {
        TheoryBudget b;
        b.epsilon = epsilon;
        b.delta = delta;
        b.cover_count = cover_count;
        b.coverage = coverage;
        const SampleSizes s = theorem_sample_sizes(b, eta, bound, parse_feedback(feedback));
        return py::make_tuple(s.m, s.n);
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("cover_count"), py::arg("coverage"),
      py::arg("eta"), py::arg("bound"), py::arg("feedback") = "reward");

  m.def(
      "derive_seed",
      [](std::uint64_t master, std::uint64_t repeat, std::uint64_t stage, std::uint64_t purpose) {
        return derive_seed(master, repeat, static_cast<Stage>(stage), static_cast<Purpose>(purpose));
      },
      py::arg("master"), py::arg("repeat"), py::arg("stage"), py::arg("purpose"));
}
