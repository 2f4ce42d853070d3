#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mopx/algorithms.hpp"
#include "mopx/environments.hpp"
#include "mopx/gaps.hpp"
#include "mopx/schedulers.hpp"

namespace mopx {

struct AlgorithmSpec {
  std::string name;  // label used in outputs, e.g. "CSR" or "MLP-CSR"
  RunConfig run;     // algorithm, scheduler, allocator, estimator, eliminator; budget/seed filled per cell
};

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::Gaussian;
  std::optional<std::filesystem::path> instance;
  std::optional<std::filesystem::path> replay;
  ReplayMode replay_mode = ReplayMode::WithReplacement;
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::size_t> pca_dim;
  std::optional<BrevityThresholds> brevity;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  ObjectiveMode mode = ObjectiveMode::Constrained;
  std::optional<double> tau;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<long> per_arm_budgets;
  /// Arm-count sweep; each K uses the first K arms. Empty means all arms.
  std::vector<std::size_t> arm_counts;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir = "out";
};

/// Parses the JSON config. Relative paths resolve against `base_dir`. Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunCell {
  std::size_t run_id = 0;
  std::size_t algorithm_index = 0;
  std::size_t num_arms = 0;
  long per_arm_budget = 0;
  std::uint64_t seed = 0;
};

/// Deterministic order: algorithm, K, b, seed (seed fastest).
std::vector<RunCell> expand_grid(const ExperimentConfig& config, std::size_t total_arms);

struct MetricRecord {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  std::size_t num_arms = 0;
  long per_arm_budget = 0;
  std::string name;
  double value = 0.0;
  std::optional<double> normalizer;
};

struct CellFailure {
  RunCell cell;
  std::string message;
};

struct ExperimentOutput {
  std::vector<MetricRecord> records;
  std::vector<CellFailure> failures;
};

/// Runs every cell on up to `jobs` threads. Output order follows the grid regardless of `jobs`.
/// Throws ConfigError when the environment cannot be loaded; per-cell errors go to `failures`.
ExperimentOutput run_experiment(const ExperimentConfig& config, unsigned jobs = 1);

struct SummaryRow {
  std::string algorithm;
  std::size_t num_arms = 0;
  long per_arm_budget = 0;
  std::string metric;
  double mean = 0.0;
  std::optional<double> ci_half_width;  // null (flagged) for single-seed cells
  std::size_t n_seeds = 0;
};

/// Per (algorithm, K, b, metric) mean and 1.96 * s / sqrt(n) with the (n - 1) sample deviation.
/// Rows keep the first-appearance order of their cells.
std::vector<SummaryRow> aggregate(const std::vector<MetricRecord>& records);

std::string format_number(double v);
std::string raw_csv(const std::vector<MetricRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary_csv(std::string_view text);
/// Plain-text tables, one per metric: rows are (K, method), columns are b.
std::string render_tables(const std::vector<SummaryRow>& rows);

/// Writes raw.csv, summary.csv and summary.txt into config.out_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output);

// JSON views printed by the CLI.
std::string schedule_json(const Schedule& schedule);
std::string pareto_gap_report_json(const Eigen::MatrixXd& means);
std::string constrained_gap_report_json(const Eigen::MatrixXd& means, double tau);
std::string run_result_json(const RunResult& result);

}  // namespace mopx
