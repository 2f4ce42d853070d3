#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "mopx/errors.hpp"
#include "mopx/features.hpp"
#include "mopx/harness.hpp"
#include "mopx/metrics.hpp"

namespace {

constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    row.push_back(std::stod(cell, &used));
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size()) throw std::invalid_argument(cell);
  }
  return row;
}

// Plain numeric CSV; a non-numeric first line is taken as a header.
Eigen::MatrixXd read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mopx::ConfigError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      rows.push_back(parse_row(line));
    } catch (const std::exception&) {
      if (!first) throw mopx::ConfigError("non-numeric row in " + path + ": " + line);
    }
    first = false;
  }
  if (rows.empty()) throw mopx::ConfigError(path + " holds no points");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw mopx::ConfigError("ragged rows in " + path);
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

int cmd_run(const std::string& config_path, unsigned jobs, const std::string& out) {
  auto config = mopx::load_experiment_config(config_path);
  if (!out.empty()) config.out_dir = out;
  const auto output = mopx::run_experiment(config, jobs);
  mopx::write_outputs(config, output);
  for (const auto& f : output.failures) {
    std::cerr << "cell " << f.cell.run_id << " (" << config.algorithms[f.cell.algorithm_index].name
              << ", K=" << f.cell.num_arms << ", b=" << f.cell.per_arm_budget << ", seed=" << f.cell.seed
              << ") failed: " << f.message << '\n';
  }
  std::cout << mopx::render_tables(mopx::aggregate(output.records));
  return output.failures.empty() ? 0 : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-budget multi-objective prompt selection"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned jobs = 1;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::size_t k = 0;
  long budget = 0;
  std::string scheduler = "sh";
  auto* schedule = app.add_subcommand("schedule", "Print a round schedule as JSON");
  schedule->add_option("--k", k, "Number of arms")->required();
  schedule->add_option("--budget", budget, "Total budget B")->required();
  schedule->add_option("--scheduler", scheduler, "sh or sr");

  std::string instance_path;
  std::optional<double> tau;
  auto* gaps = app.add_subcommand("gaps", "Print the gap report of an instance as JSON");
  gaps->add_option("--instance", instance_path, "Instance JSON")->required()->check(CLI::ExistingFile);
  gaps->add_option("--tau", tau, "Constraint threshold; switches to the constrained report");

  std::string points_path, ref_text;
  auto* hv = app.add_subcommand("hv", "Print the hypervolume of a point set");
  hv->add_option("--points", points_path, "CSV of points, one per row")->required()->check(CLI::ExistingFile);
  hv->add_option("--ref", ref_text, "Reference point, comma separated (default: origin)");

  std::string embeddings_path, features_out;
  std::size_t dim = 0;
  auto* features = app.add_subcommand("features", "Reduce embeddings to d PCA features");
  features->add_option("--embeddings", embeddings_path, "CSV arm_id,e_1,...,e_p")->required()->check(CLI::ExistingFile);
  features->add_option("--dim", dim, "Target dimension d")->required();
  features->add_option("--out", features_out, "Output CSV arm_id,f_1,...,f_d")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
      return cmd_run(config_path, jobs, out_dir);
    }
    if (*schedule) {
      std::cout << mopx::schedule_json(mopx::make_schedule(mopx::parse_scheduler(scheduler), k, budget)) << '\n';
      return 0;
    }
    if (*gaps) {
      const auto inst = mopx::load_instance_json(instance_path);
      std::cout << (tau ? mopx::constrained_gap_report_json(inst.means, *tau) : mopx::pareto_gap_report_json(inst.means))
                << '\n';
      return 0;
    }
    if (*hv) {
      const Eigen::MatrixXd points = read_points(points_path);
      Eigen::VectorXd ref = Eigen::VectorXd::Zero(points.cols());
      if (!ref_text.empty()) {
        const auto r = parse_row(ref_text);
        if (r.size() != static_cast<std::size_t>(points.cols())) throw mopx::ConfigError("--ref dimension mismatch");
        ref = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
      }
      std::printf("%.10g\n", mopx::hypervolume(points, ref));
      return 0;
    }
    if (*features) {
      const auto pca = mopx::pca_reduce(mopx::load_arm_matrix_csv(embeddings_path), dim);
      std::ofstream f(features_out);
      if (!f) throw mopx::ConfigError("cannot write " + features_out);
      f << "arm_id";
      for (std::size_t j = 1; j <= dim; ++j) f << ",f_" << j;
      f << '\n';
      for (Eigen::Index i = 0; i < pca.features.rows(); ++i) {
        f << i;
        for (Eigen::Index j = 0; j < pca.features.cols(); ++j) f << ',' << mopx::format_number(pca.features(i, j));
        f << '\n';
      }
      return 0;
    }
  } catch (const mopx::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: bad number '" << e.what() << "'\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
