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

// Experiment harness: configuration, sweeps, CSV emission and the figure
// and coverage tables.
//
// Configuration is a JSON document. Every object rejects unknown keys. See
// README.md for the schema.

#ifndef KLTMPS_EXPERIMENT_HPP_
#define KLTMPS_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kltmps/algo.hpp"
#include "kltmps/core.hpp"
#include "kltmps/eval.hpp"
#include "kltmps/hardcase.hpp"

namespace kltmps {

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

struct InstanceSpec {
  enum class ContextKind { kSphere, kFinite };
  enum class FeatureKind { kNone, kSphere, kExplicit };
  enum class TruthKind { kSphereEmbedding, kUniformTable, kHard, kTable, kEmbedding };

  std::string name = "instance";
  ContextKind contexts = ContextKind::kSphere;
  int dim = 10;             // sphere contexts, or finite contexts with features
  int count = 1;            // finite contexts
  std::vector<double> weights;  // finite; empty means uniform
  FeatureKind features = FeatureKind::kNone;
  Eigen::MatrixXd feature_rows;  // FeatureKind::kExplicit
  int actions = 5;

  TruthKind truth = TruthKind::kSphereEmbedding;
  double radius = 5.0;  // sphere embedding radius (= B)
  double bound = 1.0;   // B for tables
  double hard_gap = 0.1;
  HardFlavor hard_flavor = HardFlavor::kRewardFeedback;
  Eigen::MatrixXd truth_values;  // kTable / kEmbedding

  std::optional<NoiseModel> noise;  // default: Gaussian(0.1) linear, Bernoulli tabular
  Eigen::MatrixXd reference_rows;   // empty means uniform
  bool truth_per_repeat = true;
};

// Builds the instance for one repeat. Random parts (features, truth) come
// from the (repeat, truth) stream; with truth_per_repeat = false every repeat
// uses repeat 0's draw.
BanditInstance build_instance(const InstanceSpec& spec, std::uint64_t master_seed,
                              std::uint64_t repeat);

struct GridPoint {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t total() const { return m + n; }
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<InstanceSpec> extra_instances;  // coverage only
  Feedback feedback = Feedback::kReward;
  std::vector<Algorithm> algorithms{Algorithm::kTmps, Algorithm::kOffline};
  std::vector<double> etas{1.0};
  std::vector<GridPoint> grid;
  int repeats = 10;
  std::uint64_t seed = 0;
  std::size_t n_eval = 100'000;
  std::string out;
  bool record_wall_time = false;
  int workers = 1;
  FitConfig fit;
  // figures
  double panel_a_eta = 1.0;
  std::vector<double> panel_b_etas{0.5, 1.0, 2.0, 4.0};
  // coverage
  std::size_t coverage_pool = 10'000;
  double coverage_eta = 1.0;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RawRow {
  std::string algorithm;
  std::string feedback;
  double eta = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t total = 0;
  std::uint64_t repeat = 0;
  std::uint64_t seed = 0;
  double gap = 0.0;
  double gap_stderr = 0.0;
  double wall_ms = 0.0;

  bool operator==(const RawRow&) const = default;
};

struct SummaryRow {
  std::string algorithm;
  std::string feedback;
  double eta = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t total = 0;
  int repeats = 0;
  double gap_mean = 0.0;
  double gap_std = 0.0;  // sample standard deviation over repeats

  bool operator==(const SummaryRow&) const = default;
};

struct ExperimentResult {
  std::vector<RawRow> rows;
  std::vector<SummaryRow> summary;
};

struct SweepSpec {
  std::vector<Algorithm> algorithms;
  std::vector<double> etas;
};

// Runs every (eta, grid point, algorithm, repeat) cell. Rows come back in
// that nesting order regardless of the worker count.
std::vector<RawRow> run_sweep(const ExperimentConfig& cfg, const SweepSpec& sweep);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Groups rows by (algorithm, feedback, eta, m, n, total) in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<RawRow>& rows);

// Gap of one cell; exposed for the acceptance suite.
RawRow run_cell(const ExperimentConfig& cfg, Algorithm algorithm, double eta,
                const GridPoint& point, std::uint64_t repeat);

// CSV: comma separated, header row, %.17g floats, LF line endings.
void write_raw_csv(std::ostream& out, const std::vector<RawRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows,
                       const std::vector<std::string>& metadata = {});
std::vector<RawRow> read_raw_csv(std::istream& in);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

// Metadata comment lines describing the seed derivation.
std::vector<std::string> seed_metadata(const ExperimentConfig& cfg);

struct CoverageRow {
  std::string name;
  std::string model_class;
  std::size_t contexts = 0;  // 0 for continuous contexts
  int actions = 0;
  int dim = 0;  // feature dimension, 0 without features
  CoverageReport report;
};

std::vector<CoverageRow> run_coverage(const ExperimentConfig& cfg);
void write_coverage_csv(std::ostream& out, const std::vector<CoverageRow>& rows);

struct FigureRow {
  std::string panel;  // "a" or "b"
  SummaryRow summary;
};

struct FigureTables {
  std::vector<FigureRow> panel_a;  // mixed vs offline at panel_a_eta
  std::vector<FigureRow> panel_b;  // mixed across panel_b_etas
};

FigureTables run_figures(const ExperimentConfig& cfg);
void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows);
// "fig_r" or "fig_p".
std::string figure_prefix(Feedback feedback);

std::string format_double(double v);

}  // namespace kltmps

#endif  // KLTMPS_EXPERIMENT_HPP_
