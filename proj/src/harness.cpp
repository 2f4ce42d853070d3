#include "mopx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mopx/errors.hpp"
#include "mopx/features.hpp"
#include "mopx/metrics.hpp"

namespace mopx {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

EnvironmentSpec parse_environment(const json& j, const std::filesystem::path& base) {
  reject_unknown_keys(j, {"kind", "instance", "replay", "replay_mode", "features", "embeddings", "pca_dim", "brevity"},
                      "environment");
  EnvironmentSpec env;
  env.kind = parse_environment_kind(j.at("kind").get<std::string>());
  if (j.contains("instance")) env.instance = resolve(base, j["instance"].get<std::string>());
  if (j.contains("replay")) env.replay = resolve(base, j["replay"].get<std::string>());
  if (j.contains("replay_mode")) env.replay_mode = parse_replay_mode(j["replay_mode"].get<std::string>());
  if (j.contains("features")) env.features = resolve(base, j["features"].get<std::string>());
  if (j.contains("embeddings")) env.embeddings = resolve(base, j["embeddings"].get<std::string>());
  if (j.contains("pca_dim")) env.pca_dim = j["pca_dim"].get<std::size_t>();
  if (j.contains("brevity")) {
    const auto& b = j["brevity"];
    if (!b.contains("tau_low") || !b.contains("tau_high")) {
      throw ConfigError("brevity needs both tau_low and tau_high (no defaults)");
    }
    env.brevity = BrevityThresholds{b["tau_low"].get<double>(), b["tau_high"].get<double>()};
    if (!(env.brevity->tau_low < env.brevity->tau_high)) throw ConfigError("brevity needs tau_low < tau_high");
  }
  if (env.kind == EnvironmentKind::Replay) {
    if (!env.replay) throw ConfigError("replay environment needs 'replay' (path to the replay CSV)");
  } else if (!env.instance) {
    throw ConfigError("gaussian/linear environment needs 'instance' (path to the instance JSON)");
  }
  if (env.embeddings && !env.pca_dim) throw ConfigError("embeddings need 'pca_dim' (no default)");
  if (env.embeddings && env.features) throw ConfigError("give either 'features' or 'embeddings', not both");
  return env;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    reject_unknown_keys(j, {"environment", "mode", "tau", "algorithms", "budget", "K", "seeds", "g_optimal", "mlp",
                            "eliminator", "linear", "redistribute_leftover", "output"},
                        "config");
    ExperimentConfig cfg;
    cfg.environment = parse_environment(j.at("environment"), base_dir);
    cfg.mode = parse_mode(j.value("mode", std::string("constrained")));
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (cfg.mode == ObjectiveMode::Constrained && !cfg.tau) throw ConfigError("constrained mode needs 'tau' (no default)");

    RunConfig defaults;
    if (j.contains("g_optimal")) {
      const auto& g = j["g_optimal"];
      reject_unknown_keys(g, {"epsilon", "kappa"}, "g_optimal");
      defaults.allocator.epsilon = g.value("epsilon", defaults.allocator.epsilon);
      defaults.allocator.kappa = g.value("kappa", defaults.allocator.kappa);
    }
    if (j.contains("mlp")) {
      const auto& m = j["mlp"];
      reject_unknown_keys(m, {"hidden", "lambda", "iters", "learning_rate", "scope"}, "mlp");
      defaults.mlp.hidden = m.value("hidden", defaults.mlp.hidden);
      defaults.mlp.lambda = m.value("lambda", defaults.mlp.lambda);
      defaults.mlp.iters = m.value("iters", defaults.mlp.iters);
      defaults.mlp.learning_rate = m.value("learning_rate", defaults.mlp.learning_rate);
      const auto scope = m.value("scope", std::string("cumulative"));
      if (scope == "cumulative") defaults.mlp.scope = MlpDataScope::Cumulative;
      else if (scope == "round") defaults.mlp.scope = MlpDataScope::CurrentRound;
      else throw ConfigError("mlp.scope must be cumulative or round");
    }
    defaults.eliminator = parse_eliminator(j.value("eliminator", std::string("ege")));
    if (j.contains("linear")) defaults.enforce_linear_bounds = j["linear"].value("enforce_bounds", true);
    defaults.redistribute_leftover = j.value("redistribute_leftover", false);
    defaults.tau = cfg.tau.value_or(0.0);
    defaults.mode = cfg.mode;

    for (const auto& a : j.at("algorithms")) {
      reject_unknown_keys(a, {"name", "algorithm", "scheduler", "allocator", "estimator", "eliminator"}, "algorithm entry");
      AlgorithmSpec spec;
      spec.run = defaults;
      spec.run.algorithm = parse_algorithm(a.at("algorithm").get<std::string>());
      spec.name = a.value("name", to_string(spec.run.algorithm));
      spec.run.scheduler = parse_scheduler(a.value("scheduler", std::string("sh")));
      spec.run.allocator.kind = parse_allocator(a.value("allocator", std::string("uniform")));
      spec.run.estimator = parse_estimator(a.value("estimator", std::string("mean")));
      if (a.contains("eliminator")) spec.run.eliminator = parse_eliminator(a["eliminator"].get<std::string>());
      if (spec.run.algorithm == AlgorithmKind::GenSec && cfg.mode != ObjectiveMode::Constrained) {
        throw ConfigError("gensec runs only in constrained mode");
      }
      if (spec.run.algorithm == AlgorithmKind::GenPsi && cfg.mode != ObjectiveMode::Pareto) {
        throw ConfigError("genpsi runs only in pareto mode");
      }
      cfg.algorithms.push_back(std::move(spec));
    }
    if (cfg.algorithms.empty()) throw ConfigError("config lists no algorithms");

    const auto& budget = j.at("budget");
    cfg.per_arm_budgets = budget.at("per_arm").get<std::vector<long>>();
    if (cfg.per_arm_budgets.empty()) throw ConfigError("budget.per_arm is empty");
    for (long b : cfg.per_arm_budgets) {
      if (b < 1) throw ConfigError("per-arm budget b must be >= 1");
    }
    if (j.contains("K")) cfg.arm_counts = j["K"].get<std::vector<std::size_t>>();

    if (!j.contains("seeds")) {
      for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
    } else if (j["seeds"].is_array()) {
      cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const auto count = j["seeds"].at("count").get<std::uint64_t>();
      const auto base = j["seeds"].value("base", std::uint64_t{0});
      for (std::uint64_t s = 0; s < count; ++s) cfg.seeds.push_back(base + s);
    }
    if (cfg.seeds.empty()) throw ConfigError("seed list is empty");

    if (j.contains("output")) cfg.out_dir = resolve(base_dir, j["output"].value("dir", std::string("out")));
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

std::vector<RunCell> expand_grid(const ExperimentConfig& config, std::size_t total_arms) {
  std::vector<std::size_t> ks = config.arm_counts;
  if (ks.empty()) ks.push_back(total_arms);
  for (auto k : ks) {
    if (k < 2 || k > total_arms) {
      throw ConfigError("K=" + std::to_string(k) + " outside [2, " + std::to_string(total_arms) + "]");
    }
  }
  std::vector<RunCell> cells;
  for (std::size_t a = 0; a < config.algorithms.size(); ++a)
    for (auto k : ks)
      for (long b : config.per_arm_budgets)
        for (auto seed : config.seeds) cells.push_back(RunCell{cells.size(), a, k, b, seed});
  return cells;
}

namespace {

// Loaded once, then sliced per K.
struct LoadedSource {
  std::optional<Instance> instance;
  std::optional<ReplayTable> replay;
  std::optional<Eigen::MatrixXd> features;
  std::optional<Eigen::MatrixXd> embeddings;

  std::size_t num_arms() const { return instance ? instance->num_arms() : replay->num_arms(); }
};

LoadedSource load_source(const EnvironmentSpec& spec) {
  LoadedSource src;
  if (spec.kind == EnvironmentKind::Replay) {
    src.replay = load_replay_csv(*spec.replay);
    if (spec.brevity) src.replay = with_brevity_objective(std::move(*src.replay), *spec.brevity);
  } else {
    src.instance = load_instance_json(*spec.instance);
  }
  if (spec.features) src.features = load_arm_matrix_csv(*spec.features);
  if (spec.embeddings) src.embeddings = load_arm_matrix_csv(*spec.embeddings);
  const auto k = src.num_arms();
  for (const auto* m : {&src.features, &src.embeddings}) {
    if (*m && static_cast<std::size_t>((*m)->rows()) != k) throw ConfigError("feature/embedding rows must match K");
  }
  return src;
}

std::unique_ptr<Environment> build_environment(const EnvironmentSpec& spec, const LoadedSource& src, std::size_t k) {
  std::optional<Eigen::MatrixXd> features;
  const auto kk = static_cast<Eigen::Index>(k);
  if (src.features) features = src.features->topRows(kk);
  if (src.embeddings) features = pca_reduce(src.embeddings->topRows(kk), *spec.pca_dim).features;

  if (spec.kind == EnvironmentKind::Replay) {
    return make_environment(EnvironmentKind::Replay, prefix_replay(*src.replay, k), spec.replay_mode, features);
  }
  Instance inst = prefix_instance(*src.instance, k);
  if (features) {
    if (spec.kind == EnvironmentKind::Linear) throw ConfigError("linear environments take features from the instance");
    inst.features = features;
    inst.theta.reset();
  }
  return make_environment(spec.kind, std::move(inst));
}

std::vector<MetricRecord> cell_metrics(const ExperimentConfig& cfg, const AlgorithmSpec& spec, const RunCell& cell,
                                       const Environment& env, const RunResult& result) {
  std::vector<MetricRecord> out;
  auto emit = [&](const std::string& name, double value, std::optional<double> normalizer = std::nullopt) {
    out.push_back(MetricRecord{cell.run_id, cell.seed, spec.name, cell.num_arms, cell.per_arm_budget, name, value,
                               normalizer});
  };
  const Eigen::MatrixXd& truth = env.true_means();
  const ObjectiveMode mode = spec.run.algorithm == AlgorithmKind::GenSec   ? ObjectiveMode::Constrained
                             : spec.run.algorithm == AlgorithmKind::GenPsi ? ObjectiveMode::Pareto
                                                                           : cfg.mode;
  if (mode == ObjectiveMode::Constrained) {
    const ArmId chosen = result.selected.front();
    const ArmId star = best_feasible_arm(truth, *cfg.tau);
    const double best_primary = truth(static_cast<Eigen::Index>(star), 0);
    const auto soft = soft_constrained_reward(truth.row(static_cast<Eigen::Index>(chosen)).transpose(), *cfg.tau,
                                              best_primary > 0.0 ? std::optional<double>(best_primary) : std::nullopt);
    emit("soft_reward", soft.raw);
    if (soft.normalized) emit("soft_reward_norm", *soft.normalized, best_primary);
    emit("misidentified", chosen == star ? 0.0 : 1.0);
  } else {
    const ArmList front = pareto_front(truth);
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(truth.cols());
    emit("hv", hypervolume(select_rows(truth, result.selected), origin));
    emit("hv_recovery", hv_recovery(result.selected, front, truth), hypervolume(select_rows(truth, front), origin));
    emit("misidentified", result.selected == front ? 0.0 : 1.0);
  }
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config, unsigned jobs) {
  const LoadedSource src = load_source(config.environment);
  const auto cells = expand_grid(config, src.num_arms());

  struct Outcome {
    std::vector<MetricRecord> records;
    std::optional<std::string> error;
  };
  std::vector<Outcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& cell = cells[i];
      const auto& spec = config.algorithms[cell.algorithm_index];
      try {
        auto env = build_environment(config.environment, src, cell.num_arms);
        RunConfig rc = spec.run;
        rc.budget = RunConfig::budget_from_per_arm(cell.per_arm_budget, cell.num_arms);
        rc.seed = cell.seed;
        rc.stream_id = cell.run_id;
        const RunResult result = run_algorithm(rc, *env);
        outcomes[i].records = cell_metrics(config, spec, cell, *env, result);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentOutput out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (outcomes[i].error) {
      out.failures.push_back(CellFailure{cells[i], *outcomes[i].error});
    } else {
      out.records.insert(out.records.end(), outcomes[i].records.begin(), outcomes[i].records.end());
    }
  }
  return out;
}

std::vector<SummaryRow> aggregate(const std::vector<MetricRecord>& records) {
  using Key = std::tuple<std::string, std::size_t, long, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> values;
  for (const auto& r : records) {
    Key key{r.algorithm, r.num_arms, r.per_arm_budget, r.name};
    auto [it, inserted] = values.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.value);
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    auto v = values[key];
    // Sorting makes the floating-point sums independent of seed order.
    std::sort(v.begin(), v.end());
    SummaryRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), 0.0, std::nullopt, v.size()};
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    row.mean = sum / n;
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.ci_half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string raw_csv(const std::vector<MetricRecord>& records) {
  std::ostringstream os;
  os << "run_id,seed,algorithm,K,b,metric,value\n";
  for (const auto& r : records) {
    os << r.run_id << ',' << r.seed << ',' << r.algorithm << ',' << r.num_arms << ',' << r.per_arm_budget << ','
       << r.name << ',' << format_number(r.value) << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "algorithm,K,b,metric,mean,ci_half_width,n_seeds,flag\n";
  for (const auto& r : rows) {
    os << r.algorithm << ',' << r.num_arms << ',' << r.per_arm_budget << ',' << r.metric << ','
       << format_number(r.mean) << ',' << (r.ci_half_width ? format_number(*r.ci_half_width) : "") << ','
       << r.n_seeds << ',' << (r.ci_half_width ? "" : "single_seed") << '\n';
  }
  return os.str();
}

std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
  std::vector<SummaryRow> rows;
  std::istringstream is{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 8) cells.emplace_back();
    SummaryRow r;
    r.algorithm = cells[0];
    r.num_arms = std::stoul(cells[1]);
    r.per_arm_budget = std::stol(cells[2]);
    r.metric = cells[3];
    r.mean = std::stod(cells[4]);
    if (!cells[5].empty()) r.ci_half_width = std::stod(cells[5]);
    r.n_seeds = std::stoul(cells[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_tables(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> metrics;
  for (const auto& r : rows) {
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  }
  std::ostringstream os;
  for (const auto& metric : metrics) {
    std::set<long> budgets;
    std::vector<std::pair<std::size_t, std::string>> methods;
    std::map<std::tuple<std::size_t, std::string, long>, const SummaryRow*> cell;
    for (const auto& r : rows) {
      if (r.metric != metric) continue;
      budgets.insert(r.per_arm_budget);
      std::pair<std::size_t, std::string> m{r.num_arms, r.algorithm};
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
      cell[{r.num_arms, r.algorithm, r.per_arm_budget}] = &r;
    }
    std::stable_sort(methods.begin(), methods.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    os << metric << '\n';
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-6s %-12s", "K", "Method");
    os << buf;
    for (long b : budgets) {
      std::snprintf(buf, sizeof buf, " %-17s", ("b=" + std::to_string(b)).c_str());
      os << buf;
    }
    os << '\n';
    for (const auto& [k, name] : methods) {
      std::snprintf(buf, sizeof buf, "%-6zu %-12s", k, name.c_str());
      os << buf;
      for (long b : budgets) {
        auto it = cell.find({k, name, b});
        std::string text = "-";
        if (it != cell.end()) {
          const auto* r = it->second;
          std::snprintf(buf, sizeof buf, "%.3f", r->mean);
          text = buf;
          if (r->ci_half_width) {
            std::snprintf(buf, sizeof buf, " +- %.3f", *r->ci_half_width);
            text += buf;
          }
        }
        std::snprintf(buf, sizeof buf, " %-17s", text.c_str());
        os << buf;
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output) {
  std::filesystem::create_directories(config.out_dir);
  const auto rows = aggregate(output.records);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(config.out_dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (config.out_dir / name).string());
    f << text;
  };
  write("raw.csv", raw_csv(output.records));
  write("summary.csv", summary_csv(rows));
  write("summary.txt", render_tables(rows));
  if (!output.failures.empty()) {
    std::ostringstream os;
    os << "run_id,seed,algorithm_index,K,b,error\n";
    for (const auto& f : output.failures) {
      os << f.cell.run_id << ',' << f.cell.seed << ',' << f.cell.algorithm_index << ',' << f.cell.num_arms << ','
         << f.cell.per_arm_budget << ",\"" << f.message << "\"\n";
    }
    write("failures.csv", os.str());
  }
}

// --- JSON views ----------------------------------------------------------------------

namespace {

json gap_value(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string schedule_json(const Schedule& s) {
  json j{{"scheduler", to_string(s.kind)},
         {"K", s.num_arms},
         {"B", s.budget},
         {"R", s.rounds},
         {"pulls_per_round", s.pulls_per_round},
         {"keep_counts", s.keep_counts},
         {"total_pulls", s.total_pulls()}};
  if (!s.per_arm_targets.empty()) j["per_arm_targets"] = s.per_arm_targets;
  return j.dump(2);
}

std::string pareto_gap_report_json(const Eigen::MatrixXd& means) {
  json arms = json::array();
  for (const auto& e : pareto_gaps(means)) {
    json a{{"arm", e.arm}, {"classification", e.on_front ? "pareto" : "non-pareto"}, {"gap", gap_value(e.gap)}};
    if (e.on_front) {
      a["delta_plus"] = gap_value(e.delta_plus);
      a["delta_minus"] = gap_value(e.delta_minus);
    } else {
      a["max_dominance"] = gap_value(e.max_dominance);
    }
    arms.push_back(std::move(a));
  }
  return json{{"kind", "pareto"}, {"front", pareto_front(means)}, {"arms", std::move(arms)}}.dump(2);
}

std::string constrained_gap_report_json(const Eigen::MatrixXd& means, double tau) {
  const auto entries = constrained_gaps(means, tau);
  json arms = json::array();
  for (const auto& e : entries) {
    const char* cls = e.classification == ConstrainedClass::Optimal    ? "optimal"
                      : e.classification == ConstrainedClass::Feasible ? "feasible"
                                                                       : "infeasible";
    arms.push_back(json{{"arm", e.arm},
                        {"classification", cls},
                        {"viol", e.violation},
                        {"subopt", e.suboptimality},
                        {"delta", e.delta},
                        {"gap", gap_value(e.gap)}});
  }
  json j{{"kind", "constrained"}, {"tau", tau}, {"best_arm", entries.front().best_arm}, {"arms", std::move(arms)}};
  try {
    j["hardness"] = hardness(means, tau);
  } catch (const InstanceError&) {
    j["hardness"] = nullptr;
  }
  return j.dump(2);
}

std::string run_result_json(const RunResult& r) {
  json rounds = json::array();
  for (const auto& log : r.rounds) {
    rounds.push_back(json{{"round", log.round},
                          {"active_before", log.active_before},
                          {"planned_pulls", log.planned_pulls},
                          {"pull_arms", log.counts.arms},
                          {"pull_counts", log.counts.counts},
                          {"estimate_arms", log.estimates.arms},
                          {"estimates", matrix_json(log.estimates.values)},
                          {"active_after", log.active_after},
                          {"eliminated", log.eliminated},
                          {"accepted", log.accepted},
                          {"warnings", log.warnings}});
  }
  return json{{"algorithm", to_string(r.algorithm)},
              {"selected", r.selected},
              {"pulls_used", r.pulls_used},
              {"budget", r.budget},
              {"rounds", std::move(rounds)}}
      .dump(2);
}

}  // namespace mopx
