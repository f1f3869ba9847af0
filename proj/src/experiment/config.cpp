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

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kltmps/experiment.hpp"
#include "kltmps/instances.hpp"

namespace kltmps {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + where + key + "' has the wrong type");
  }
}

Eigen::MatrixXd parse_matrix(const json& value, const std::string& key) {
  if (!value.is_array() || value.empty() || !value[0].is_array()) {
    throw ConfigError("key '" + key + "' must be a nonempty array of rows");
  }
  const auto rows = value.size();
  const auto cols = value[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!value[i].is_array() || value[i].size() != cols) {
      throw ConfigError("key '" + key + "' rows must have equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!value[i][j].is_number()) throw ConfigError("key '" + key + "' must hold numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value[i][j].get<double>();
    }
  }
  return m;
}

InstanceSpec parse_instance(const json& j, const std::string& where) {
  check_keys(j, where, {"name", "contexts", "actions", "truth", "noise", "reference",
                        "truth_per_repeat"});
  const std::string p = where + ".";
  InstanceSpec s;
  s.name = get<std::string>(j, "name", p, s.name);
  if (s.name.empty() || s.name.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError("key '" + p + "name' must be nonempty without commas, quotes or newlines");
  }
  s.actions = get<int>(j, "actions", p, s.actions);
  if (s.actions < 1) throw ConfigError("key '" + p + "actions' must be >= 1");
  s.truth_per_repeat = get<bool>(j, "truth_per_repeat", p, s.truth_per_repeat);

  if (j.contains("contexts")) {
    const json& c = j.at("contexts");
    const std::string cp = p + "contexts.";
    check_keys(c, p + "contexts", {"kind", "dim", "count", "weights", "features"});
    const auto kind = get<std::string>(c, "kind", cp, "sphere");
    if (kind == "sphere") {
      s.contexts = InstanceSpec::ContextKind::kSphere;
      s.dim = get<int>(c, "dim", cp, s.dim);
      if (s.dim < 1) throw ConfigError("key '" + cp + "dim' must be >= 1");
    } else if (kind == "finite") {
      s.contexts = InstanceSpec::ContextKind::kFinite;
      s.count = get<int>(c, "count", cp, s.count);
      if (s.count < 1) throw ConfigError("key '" + cp + "count' must be >= 1");
      s.weights = get<std::vector<double>>(c, "weights", cp, {});
      if (!s.weights.empty() && s.weights.size() != static_cast<std::size_t>(s.count)) {
        throw ConfigError("key '" + cp + "weights' needs one weight per context");
      }
      if (c.contains("features")) {
        const json& f = c.at("features");
        if (f.is_string() && f.get<std::string>() == "none") {
          s.features = InstanceSpec::FeatureKind::kNone;
        } else if (f.is_string() && f.get<std::string>() == "sphere") {
          s.features = InstanceSpec::FeatureKind::kSphere;
          s.dim = get<int>(c, "dim", cp, s.dim);
        } else {
          s.features = InstanceSpec::FeatureKind::kExplicit;
          s.feature_rows = parse_matrix(f, cp + "features");
          s.dim = static_cast<int>(s.feature_rows.cols());
        }
      }
    } else {
      throw ConfigError("key '" + cp + "kind' must be 'sphere' or 'finite'");
    }
  }

  if (j.contains("truth")) {
    const json& t = j.at("truth");
    const std::string tp = p + "truth.";
    check_keys(t, p + "truth", {"kind", "radius", "bound", "gap", "flavor", "values"});
    const auto kind = get<std::string>(t, "kind", tp, "sphere_embedding");
    if (kind == "sphere_embedding") {
      s.truth = InstanceSpec::TruthKind::kSphereEmbedding;
      s.radius = get<double>(t, "radius", tp, s.radius);
    } else if (kind == "uniform_table") {
      s.truth = InstanceSpec::TruthKind::kUniformTable;
      s.bound = get<double>(t, "bound", tp, s.bound);
    } else if (kind == "hard") {
      s.truth = InstanceSpec::TruthKind::kHard;
      s.hard_gap = get<double>(t, "gap", tp, s.hard_gap);
      const auto flavor = get<std::string>(t, "flavor", tp, "reward");
      if (flavor == "reward") {
        s.hard_flavor = HardFlavor::kRewardFeedback;
      } else if (flavor == "preference") {
        s.hard_flavor = HardFlavor::kPreferenceFeedback;
      } else {
        throw ConfigError("key '" + tp + "flavor' must be 'reward' or 'preference'");
      }
    } else if (kind == "table" || kind == "embedding") {
      s.truth = kind == "table" ? InstanceSpec::TruthKind::kTable
                                : InstanceSpec::TruthKind::kEmbedding;
      if (!t.contains("values")) throw ConfigError("key '" + tp + "values' is required");
      s.truth_values = parse_matrix(t.at("values"), tp + "values");
      s.bound = get<double>(t, "bound", tp, s.bound);
    } else {
      throw ConfigError("key '" + tp + "kind' is not a known truth rule");
    }
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const std::string np = p + "noise.";
    check_keys(n, p + "noise", {"kind", "sigma"});
    const auto kind = get<std::string>(n, "kind", np, "gaussian");
    if (kind == "gaussian") {
      s.noise = NoiseModel::gaussian(get<double>(n, "sigma", np, 0.1));
    } else if (kind == "bernoulli") {
      s.noise = NoiseModel::bernoulli();
    } else {
      throw ConfigError("key '" + np + "kind' must be 'gaussian' or 'bernoulli'");
    }
  }

  if (j.contains("reference")) {
    const json& r = j.at("reference");
    if (r.is_string()) {
      if (r.get<std::string>() != "uniform") {
        throw ConfigError("key '" + p + "reference' must be 'uniform' or a table");
      }
    } else {
      s.reference_rows = parse_matrix(r, p + "reference");
    }
  }
  return s;
}

std::vector<GridPoint> parse_grid(const json& g) {
  std::vector<GridPoint> grid;
  if (g.is_object()) {
    check_keys(g, "grid", {"totals", "split"});
    const auto split = get<std::string>(g, "split", "grid.", "equal");
    if (split != "equal") throw ConfigError("key 'grid.split' must be 'equal'");
    for (auto total : get<std::vector<std::size_t>>(g, "totals", "grid.", {})) {
      if (total < 2) throw ConfigError("key 'grid.totals' entries must be >= 2");
      grid.push_back({total / 2, total - total / 2});
    }
  } else if (g.is_array()) {
    for (const auto& point : g) {
      check_keys(point, "grid[]", {"m", "n"});
      GridPoint p{get<std::size_t>(point, "m", "grid[].", 0),
                  get<std::size_t>(point, "n", "grid[].", 0)};
      if (p.m < 1) throw ConfigError("key 'grid[].m' must be >= 1");
      grid.push_back(p);
    }
  } else {
    throw ConfigError("key 'grid' must be an object or an array");
  }
  if (grid.empty()) throw ConfigError("key 'grid' must not be empty");
  return grid;
}

}  // namespace

BanditInstance build_instance(const InstanceSpec& spec, std::uint64_t master_seed,
                              std::uint64_t repeat) {
  const SeedScope seeds(master_seed, spec.truth_per_repeat ? repeat : 0);
  Rng rng = seeds.stream(Stage::kTruth, Purpose::kGeneric);
  try {
    using T = InstanceSpec::TruthKind;
    if (spec.truth == T::kHard) {
      require(spec.contexts == InstanceSpec::ContextKind::kFinite,
              "hard instances need finite contexts");
      require(spec.actions == 2, "hard instances have two actions");
      HardInstanceSpec hard;
      hard.contexts = spec.count;
      hard.gap = spec.hard_gap;
      hard.flavor = spec.hard_flavor;
      hard.optimal_action = random_optimal_actions(spec.count, rng);
      return build_hard_instance(hard);
    }

    Eigen::MatrixXd features;
    if (spec.contexts == InstanceSpec::ContextKind::kFinite) {
      if (spec.features == InstanceSpec::FeatureKind::kSphere) {
        features.resize(spec.count, spec.dim);
        for (int i = 0; i < spec.count; ++i) features.row(i) = sphere_point(rng, spec.dim).transpose();
      } else if (spec.features == InstanceSpec::FeatureKind::kExplicit) {
        features = spec.feature_rows;
      }
    }
    ContextSpace contexts =
        spec.contexts == InstanceSpec::ContextKind::kSphere
            ? ContextSpace::sphere_gaussian(spec.dim)
            : (spec.weights.empty()
                   ? ContextSpace::uniform_finite(static_cast<std::size_t>(spec.count), features)
                   : ContextSpace::finite(spec.weights, features));
    const int feature_dim = contexts.dim();

    std::optional<RewardModel> truth;
    switch (spec.truth) {
      case T::kSphereEmbedding: {
        require(feature_dim >= 1, "sphere embeddings need context features");
        Eigen::MatrixXd phi(spec.actions, feature_dim);
        for (int a = 0; a < spec.actions; ++a) {
          phi.row(a) = sphere_point(rng, feature_dim, spec.radius).transpose();
        }
        truth = RewardModel::linear(std::move(phi), spec.radius);
        break;
      }
      case T::kUniformTable: {
        require(contexts.is_finite(), "tables need finite contexts");
        Eigen::MatrixXd table(spec.count, spec.actions);
        for (int x = 0; x < spec.count; ++x) {
          for (int a = 0; a < spec.actions; ++a) table(x, a) = spec.bound * uniform01(rng);
        }
        truth = RewardModel::tabular(std::move(table), spec.bound);
        break;
      }
      case T::kTable:
        truth = RewardModel::tabular(spec.truth_values, spec.bound);
        break;
      case T::kEmbedding:
        truth = RewardModel::linear(spec.truth_values, spec.bound);
        break;
      case T::kHard:
        break;
    }
    const bool tabular = truth->kind() == RewardModel::Kind::kTabular;
    const NoiseModel noise =
        spec.noise.value_or(tabular ? NoiseModel::bernoulli() : NoiseModel::gaussian(0.1));
    ReferencePolicy reference = spec.reference_rows.size() == 0
                                    ? ReferencePolicy::uniform(spec.actions)
                                    : ReferencePolicy::table(spec.reference_rows);
    return BanditInstance(std::move(contexts), spec.actions, *truth, noise, std::move(reference));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw ConfigError("instance '" + spec.name + "': " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, "", {"instance", "instances", "feedback", "algorithms", "etas", "grid",
                     "repeats", "seed", "n_eval", "out", "record_wall_time", "workers", "fit",
                     "figures", "coverage"});
  ExperimentConfig cfg;
  if (j.contains("instance")) cfg.instance = parse_instance(j.at("instance"), "instance");
  if (j.contains("instances")) {
    const json& list = j.at("instances");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("key 'instances' must be a nonempty array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      InstanceSpec s = parse_instance(list[i], "instances[" + std::to_string(i) + "]");
      if (i == 0 && !j.contains("instance")) {
        cfg.instance = s;
      } else {
        cfg.extra_instances.push_back(s);
      }
    }
  }

  const auto feedback = get<std::string>(j, "feedback", "", "reward");
  if (feedback == "reward") {
    cfg.feedback = Feedback::kReward;
  } else if (feedback == "preference") {
    cfg.feedback = Feedback::kPreference;
  } else {
    throw ConfigError("key 'feedback' must be 'reward' or 'preference'");
  }

  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "algorithms", "", {})) {
      Algorithm a;
      if (name == "mixed") {
        a = cfg.feedback == Feedback::kReward ? Algorithm::kTmps : Algorithm::kTmpsPf;
      } else if (name == "tmps" || name == "tmps_pf" || name == "offline") {
        a = parse_algorithm(name);
      } else {
        throw ConfigError("key 'algorithms' has unknown entry '" + name + "'");
      }
      if ((a == Algorithm::kTmps && cfg.feedback != Feedback::kReward) ||
          (a == Algorithm::kTmpsPf && cfg.feedback != Feedback::kPreference)) {
        throw ConfigError("key 'algorithms': '" + name + "' does not match feedback '" +
                          feedback + "'");
      }
      cfg.algorithms.push_back(a);
    }
    if (cfg.algorithms.empty()) throw ConfigError("key 'algorithms' must not be empty");
  } else {
    cfg.algorithms = {cfg.feedback == Feedback::kReward ? Algorithm::kTmps : Algorithm::kTmpsPf,
                      Algorithm::kOffline};
  }

  cfg.etas = get<std::vector<double>>(j, "etas", "", cfg.etas);
  if (cfg.etas.empty()) throw ConfigError("key 'etas' must not be empty");
  for (double e : cfg.etas) {
    if (!(e > 0.0)) throw ConfigError("key 'etas' entries must be positive");
  }
  if (j.contains("grid")) {
    cfg.grid = parse_grid(j.at("grid"));
  } else {
    cfg.grid = {{64, 64}};
  }
  cfg.repeats = get<int>(j, "repeats", "", cfg.repeats);
  if (cfg.repeats < 1) throw ConfigError("key 'repeats' must be >= 1");
  cfg.seed = get<std::uint64_t>(j, "seed", "", cfg.seed);
  cfg.n_eval = get<std::size_t>(j, "n_eval", "", cfg.n_eval);
  if (cfg.n_eval < 1) throw ConfigError("key 'n_eval' must be >= 1");
  cfg.out = get<std::string>(j, "out", "", cfg.out);
  cfg.record_wall_time = get<bool>(j, "record_wall_time", "", cfg.record_wall_time);
  cfg.workers = get<int>(j, "workers", "", cfg.workers);
  if (cfg.workers < 1) throw ConfigError("key 'workers' must be >= 1");

  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, "fit", {"ridge", "grad_tol", "max_iters", "param_bound"});
    cfg.fit.ridge = get<double>(f, "ridge", "fit.", cfg.fit.ridge);
    cfg.fit.grad_tol = get<double>(f, "grad_tol", "fit.", cfg.fit.grad_tol);
    cfg.fit.max_iters = get<int>(f, "max_iters", "fit.", cfg.fit.max_iters);
    cfg.fit.param_bound = get<double>(f, "param_bound", "fit.", cfg.fit.param_bound);
    if (cfg.fit.ridge < 0.0) throw ConfigError("key 'fit.ridge' must be >= 0");
    if (!(cfg.fit.grad_tol > 0.0)) throw ConfigError("key 'fit.grad_tol' must be positive");
    if (cfg.fit.max_iters < 1) throw ConfigError("key 'fit.max_iters' must be >= 1");
    if (!(cfg.fit.param_bound > 0.0)) throw ConfigError("key 'fit.param_bound' must be positive");
  }
  if (j.contains("figures")) {
    const json& f = j.at("figures");
    check_keys(f, "figures", {"panel_a_eta", "panel_b_etas"});
    cfg.panel_a_eta = get<double>(f, "panel_a_eta", "figures.", cfg.panel_a_eta);
    cfg.panel_b_etas = get<std::vector<double>>(f, "panel_b_etas", "figures.", cfg.panel_b_etas);
    if (!(cfg.panel_a_eta > 0.0)) throw ConfigError("key 'figures.panel_a_eta' must be positive");
    if (cfg.panel_b_etas.empty()) throw ConfigError("key 'figures.panel_b_etas' must not be empty");
  }
  if (j.contains("coverage")) {
    const json& c = j.at("coverage");
    check_keys(c, "coverage", {"pool", "eta"});
    cfg.coverage_pool = get<std::size_t>(c, "pool", "coverage.", cfg.coverage_pool);
    cfg.coverage_eta = get<double>(c, "eta", "coverage.", cfg.coverage_eta);
    if (cfg.coverage_pool < 1) throw ConfigError("key 'coverage.pool' must be >= 1");
    if (!(cfg.coverage_eta > 0.0)) throw ConfigError("key 'coverage.eta' must be positive");
  }

  // Fail on instances that cannot be built before any work starts.
  build_instance(cfg.instance, cfg.seed, 0);
  for (const auto& extra : cfg.extra_instances) build_instance(extra, cfg.seed, 0);
  if (cfg.feedback == Feedback::kPreference && cfg.instance.actions < 2) {
    throw ConfigError("preference feedback needs at least two actions");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace kltmps
