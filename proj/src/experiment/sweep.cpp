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

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "kltmps/experiment.hpp"

namespace kltmps {
namespace {

// Root seed of one repeat, recorded in the raw rows.
std::uint64_t repeat_seed(std::uint64_t master, std::uint64_t repeat) {
  return splitmix64(splitmix64(master) ^ repeat);
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

RawRow run_cell(const ExperimentConfig& cfg, Algorithm algorithm, double eta,
                const GridPoint& point, std::uint64_t repeat) {
  const auto start = std::chrono::steady_clock::now();
  const BanditInstance instance = build_instance(cfg.instance, cfg.seed, repeat);
  const SeedScope seeds(cfg.seed, repeat);
  AlgoConfig algo;
  algo.eta = eta;
  algo.m = point.m;
  algo.n = point.n;
  algo.feedback = cfg.feedback;
  algo.fit = cfg.fit;
  const RunResult result = run_algorithm(algorithm, instance, algo, seeds);
  const GapReport report = suboptimality_gap(
      instance, result.policy, eta, {cfg.n_eval, seeds.seed(Stage::kEval, Purpose::kContext)});

  RawRow row;
  row.algorithm = to_string(algorithm);
  row.feedback = to_string(cfg.feedback);
  row.eta = eta;
  row.m = point.m;
  row.n = point.n;
  row.total = point.total();
  row.repeat = repeat;
  row.seed = repeat_seed(cfg.seed, repeat);
  row.gap = report.gap;
  row.gap_stderr = report.std_error;
  if (cfg.record_wall_time) {
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
  }
  return row;
}

std::vector<RawRow> run_sweep(const ExperimentConfig& cfg, const SweepSpec& sweep) {
  struct Cell {
    Algorithm algorithm;
    double eta;
    GridPoint point;
    std::uint64_t repeat;
  };
  std::vector<Cell> cells;
  for (double eta : sweep.etas) {
    for (const auto& point : cfg.grid) {
      for (auto algorithm : sweep.algorithms) {
        for (int r = 0; r < cfg.repeats; ++r) {
          cells.push_back({algorithm, eta, point, static_cast<std::uint64_t>(r)});
        }
      }
    }
  }
  std::vector<RawRow> rows(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](std::size_t i) {
    const Cell& c = cells[i];
    rows[i] = run_cell(cfg, c.algorithm, c.eta, c.point, c.repeat);
  });
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.rows = run_sweep(cfg, {cfg.algorithms, cfg.etas});
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<RawRow>& rows) {
  using Key = std::tuple<std::string, std::string, double, std::size_t, std::size_t, std::size_t>;
  std::map<Key, std::size_t> slot;
  std::vector<std::vector<double>> gaps;
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    Key key{r.algorithm, r.feedback, r.eta, r.m, r.n, r.total};
    auto [it, inserted] = slot.emplace(key, out.size());
    if (inserted) {
      SummaryRow s;
      s.algorithm = r.algorithm;
      s.feedback = r.feedback;
      s.eta = r.eta;
      s.m = r.m;
      s.n = r.n;
      s.total = r.total;
      out.push_back(s);
      gaps.emplace_back();
    }
    gaps[it->second].push_back(r.gap);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& g = gaps[i];
    double sum = 0.0;
    for (double v : g) sum += v;
    const double mean = sum / static_cast<double>(g.size());
    double ss = 0.0;
    for (double v : g) ss += (v - mean) * (v - mean);
    out[i].repeats = static_cast<int>(g.size());
    out[i].gap_mean = mean;
    out[i].gap_std = g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0;
  }
  return out;
}

std::vector<std::string> seed_metadata(const ExperimentConfig& cfg) {
  return {
      "master_seed=" + std::to_string(cfg.seed),
      "seed_rule=mix(mix(mix(mix(master)^repeat)^stage)^purpose), mix=splitmix64 finalizer",
      "stages=truth:1,first:2,second:3,eval:4,probe:5,verify:6",
      "purposes=context:1,action:2,feedback:3,generic:4",
      "rng=mt19937_64 seeded with the derived value",
      "raw_seed_column=mix(mix(master)^repeat)",
      "repeats=" + std::to_string(cfg.repeats),
      "n_eval=" + std::to_string(cfg.n_eval),
  };
}

std::vector<CoverageRow> run_coverage(const ExperimentConfig& cfg) {
  std::vector<const InstanceSpec*> specs{&cfg.instance};
  for (const auto& s : cfg.extra_instances) specs.push_back(&s);
  std::vector<CoverageRow> rows(specs.size());
  const SeedScope seeds(cfg.seed, 0);
  parallel_for(specs.size(), cfg.workers, [&](std::size_t i) {
    const BanditInstance instance = build_instance(*specs[i], cfg.seed, 0);
    const ModelClass mc = ModelClass::of(instance);
    CoverageConfig cc;
    cc.pool = cfg.coverage_pool;
    cc.seed = seeds.seed(Stage::kEval, Purpose::kGeneric);
    rows[i].name = specs[i]->name;
    rows[i].model_class = mc.kind == RewardModel::Kind::kTabular ? "tabular" : "linear";
    rows[i].contexts = instance.contexts().is_finite() ? instance.contexts().count() : 0;
    rows[i].actions = instance.num_actions();
    rows[i].dim = instance.contexts().dim();
    rows[i].report = coverage_coefficients(instance, mc, cfg.coverage_eta, cc);
  });
  return rows;
}

std::string figure_prefix(Feedback feedback) {
  return feedback == Feedback::kReward ? "fig_r" : "fig_p";
}

FigureTables run_figures(const ExperimentConfig& cfg) {
  const Algorithm mixed =
      cfg.feedback == Feedback::kReward ? Algorithm::kTmps : Algorithm::kTmpsPf;
  FigureTables tables;
  for (const auto& s : summarize(run_sweep(cfg, {{mixed, Algorithm::kOffline}, {cfg.panel_a_eta}}))) {
    tables.panel_a.push_back({"a", s});
  }
  for (const auto& s : summarize(run_sweep(cfg, {{mixed}, cfg.panel_b_etas}))) {
    tables.panel_b.push_back({"b", s});
  }
  return tables;
}

}  // namespace kltmps
