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

// kltmps: run sweeps, verify invariants, report coverage, emit figure tables.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration or usage
// error, 3 I/O or runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kltmps/experiment.hpp"
#include "kltmps/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace kltmps;

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

constexpr const char* kOutEnv = "KLTMPS_OUT_DIR";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string level = "fast";
};

// --out, then the config's "out", then $KLTMPS_OUT_DIR, then ./out.
fs::path output_dir(const Options& opt, const ExperimentConfig* cfg) {
  if (!opt.out.empty()) return opt.out;
  if (cfg && !cfg->out.empty()) return cfg->out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "out";
}

ExperimentConfig load(const Options& opt) {
  ExperimentConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  body(out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "failed writing '" + path.string() + "'");
  std::cout << "wrote " << path.string() << '\n';
}

fs::path prepare_out(const Options& opt, const ExperimentConfig* cfg) {
  const fs::path dir = output_dir(opt, cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

int cmd_run(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const fs::path dir = prepare_out(opt, &cfg);
  const ExperimentResult result = run_experiment(cfg);
  write_file(dir / "raw.csv", [&](std::ostream& o) { write_raw_csv(o, result.rows); });
  write_file(dir / "summary.csv", [&](std::ostream& o) {
    write_summary_csv(o, result.summary, seed_metadata(cfg));
  });
  return kExitOk;
}

int cmd_verify(const Options& opt) {
  const VerifyLevel level = parse_level(opt.level);
  const auto results = run_verify(level, {}, &std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (failed ? "FAILED " : "ok ") << results.size() - failed << "/" << results.size()
            << " properties passed (" << to_string(level) << ")\n";
  return failed ? kExitVerify : kExitOk;
}

int cmd_coverage(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const fs::path dir = prepare_out(opt, &cfg);
  const auto rows = run_coverage(cfg);
  write_file(dir / "coverage.csv", [&](std::ostream& o) { write_coverage_csv(o, rows); });
  return kExitOk;
}

int cmd_figures(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const fs::path dir = prepare_out(opt, &cfg);
  const FigureTables tables = run_figures(cfg);
  const std::string prefix = figure_prefix(cfg.feedback);
  write_file(dir / (prefix + "_a.csv"), [&](std::ostream& o) { write_figure_csv(o, tables.panel_a); });
  write_file(dir / (prefix + "_b.csv"), [&](std::ostream& o) { write_figure_csv(o, tables.panel_b); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage mixed-policy sampling for KL-regularized bandits"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int workers = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* config = sub->add_option("--config", opt.config, "experiment config (JSON)");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--workers", workers, "concurrent sweep cells")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out,
                    std::string("output directory (default: config 'out', then $") + kOutEnv +
                        ", then ./out)");
  };
  auto* run = app.add_subcommand("run", "run the sweep; writes raw.csv and summary.csv");
  add_common(run, true);
  auto* verify = app.add_subcommand("verify", "run every invariant suite");
  add_common(verify, false);
  verify->add_option("--level", opt.level, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));
  auto* coverage = app.add_subcommand("coverage", "coverage coefficients; writes coverage.csv");
  add_common(coverage, true);
  auto* figures = app.add_subcommand("figures", "figure tables; writes fig_{r,p}_{a,b}.csv");
  add_common(figures, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--workers")) opt.workers = workers;

  try {
    if (sub == run) return cmd_run(opt);
    if (sub == verify) return cmd_verify(opt);
    if (sub == coverage) return cmd_coverage(opt);
    return cmd_figures(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? kExitConfig : kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
