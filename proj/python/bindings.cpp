#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mopx/algorithms.hpp"
#include "mopx/allocators.hpp"
#include "mopx/environments.hpp"
#include "mopx/errors.hpp"
#include "mopx/features.hpp"
#include "mopx/gaps.hpp"
#include "mopx/harness.hpp"
#include "mopx/metrics.hpp"
#include "mopx/schedulers.hpp"

namespace py = pybind11;
using namespace mopx;

namespace {

py::dict schedule_dict(const Schedule& s) {
  py::dict d;
  d["scheduler"] = to_string(s.kind);
  d["K"] = s.num_arms;
  d["B"] = s.budget;
  d["R"] = s.rounds;
  d["pulls_per_round"] = s.pulls_per_round;
  d["keep_counts"] = s.keep_counts;
  d["per_arm_targets"] = s.per_arm_targets;
  d["total_pulls"] = s.total_pulls();
  return d;
}

py::dict run(const Eigen::MatrixXd& means, double sigma, const std::string& algorithm, const std::string& mode,
             const std::string& scheduler, const std::string& allocator, const std::string& estimator, long budget,
             double tau, std::uint64_t seed, std::optional<Eigen::MatrixXd> features,
             std::optional<Eigen::MatrixXd> theta, bool enforce_linear_bounds) {
  RunConfig c;
  c.algorithm = parse_algorithm(algorithm);
  c.mode = parse_mode(mode);
  c.scheduler = parse_scheduler(scheduler);
  c.allocator.kind = parse_allocator(allocator);
  c.estimator = parse_estimator(estimator);
  c.budget = budget;
  c.tau = tau;
  c.seed = seed;
  c.enforce_linear_bounds = enforce_linear_bounds;

  std::unique_ptr<Environment> env;
  if (theta) {
    if (!features) throw ConfigError("theta given without features");
    env = std::make_unique<LinearEnvironment>(make_linear_instance(*features, *theta, sigma));
  } else {
    Instance inst;
    inst.means = means;
    inst.sigma = sigma;
    inst.features = features;
    env = std::make_unique<GaussianEnvironment>(std::move(inst));
  }
  const RunResult r = run_algorithm(c, *env);
  py::dict d;
  d["selected"] = r.selected;
  d["pulls_used"] = r.pulls_used;
  d["budget"] = r.budget;
  py::list rounds;
  for (const auto& log : r.rounds) {
    py::dict rd;
    rd["round"] = log.round;
    rd["active_before"] = log.active_before;
    rd["planned_pulls"] = log.planned_pulls;
    rd["counts"] = log.counts.counts;
    rd["estimates"] = log.estimates.values;
    rd["active_after"] = log.active_after;
    rd["eliminated"] = log.eliminated;
    rd["accepted"] = log.accepted;
    rd["design_objective"] = log.design_objective;
    rd["warnings"] = log.warnings;
    rounds.append(rd);
  }
  d["rounds"] = rounds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mopx, m) {
  m.doc() = "Fixed-budget multi-objective prompt selection";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<InstanceError>(m, "InstanceError", base.ptr());
  py::register_exception<MetricError>(m, "MetricError", base.ptr());
  py::register_exception<UnsupportedDimensionError>(m, "UnsupportedDimensionError", base.ptr());

  m.def(
      "make_schedule",
      [](const std::string& scheduler, std::size_t k, long budget, bool redistribute_leftover) {
        return schedule_dict(make_schedule(parse_scheduler(scheduler), k, budget, {redistribute_leftover, std::nullopt}));
      },
      py::arg("scheduler"), py::arg("k"), py::arg("budget"), py::arg("redistribute_leftover") = false);

  m.def("pareto_front", &pareto_front, py::arg("means"));
  m.def(
      "pareto_gaps",
      [](const Eigen::MatrixXd& means) {
        py::list out;
        for (const auto& e : pareto_gaps(means)) {
          py::dict d;
          d["arm"] = e.arm;
          d["on_front"] = e.on_front;
          d["gap"] = e.gap;
          d["delta_plus"] = e.delta_plus;
          d["delta_minus"] = e.delta_minus;
          out.append(d);
        }
        return out;
      },
      py::arg("means"));
  m.def(
      "constrained_gaps",
      [](const Eigen::MatrixXd& means, double tau) {
        py::list out;
        for (const auto& e : constrained_gaps(means, tau)) {
          py::dict d;
          d["arm"] = e.arm;
          d["class"] = e.classification == ConstrainedClass::Optimal    ? "optimal"
                       : e.classification == ConstrainedClass::Feasible ? "feasible"
                                                                         : "infeasible";
          d["violation"] = e.violation;
          d["suboptimality"] = e.suboptimality;
          d["gap"] = e.gap;
          out.append(d);
        }
        return out;
      },
      py::arg("means"), py::arg("tau"));
  m.def("hardness", &hardness, py::arg("means"), py::arg("tau"));

  m.def("hypervolume", &hypervolume, py::arg("points"), py::arg("reference"));
  m.def("hv_recovery", &hv_recovery, py::arg("selected"), py::arg("true_front"), py::arg("true_means"));
  m.def(
      "soft_reward",
      [](const Eigen::VectorXd& mean, double tau, std::optional<double> best) {
        const auto r = soft_constrained_reward(mean, tau, best);
        return py::make_tuple(r.raw, r.normalized);
      },
      py::arg("selected_mean"), py::arg("tau"), py::arg("best_primary") = py::none());

  m.def(
      "solve_g_optimal",
      [](const Eigen::MatrixXd& features, double epsilon) {
        DesignWeights w;
        try {
          w = solve_g_optimal(features, epsilon);
        } catch (const DesignNotConverged& e) {
          w = e.best();
        }
        return py::make_tuple(w.weights, w.objective_value, w.active_dim);
      },
      py::arg("features"), py::arg("epsilon") = 0.1);

  m.def(
      "pca",
      [](const Eigen::MatrixXd& embeddings, std::size_t d) {
        const auto r = pca_reduce(embeddings, d);
        return py::make_tuple(r.features, r.basis, r.mean, r.explained_variance);
      },
      py::arg("embeddings"), py::arg("d"));

  m.def("run_algorithm", &run, py::arg("means"), py::arg("sigma"), py::arg("algorithm") = "gensec",
        py::arg("mode") = "constrained", py::arg("scheduler") = "sh", py::arg("allocator") = "uniform",
        py::arg("estimator") = "mean", py::arg("budget") = 0, py::arg("tau") = 0.0, py::arg("seed") = 0,
        py::arg("features") = py::none(), py::arg("theta") = py::none(), py::arg("enforce_linear_bounds") = true);

  m.def("theorem_bound", &theorem_bound, py::arg("num_arms"), py::arg("dim"), py::arg("sigma"), py::arg("budget"),
        py::arg("hardness"));

  m.def(
      "run_experiment",
      [](const std::string& config_path, unsigned jobs) {
        const auto cfg = load_experiment_config(config_path);
        ExperimentOutput out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg, jobs);
        }
        return py::make_tuple(raw_csv(out.records), summary_csv(aggregate(out.records)), out.failures.size());
      },
      py::arg("config"), py::arg("jobs") = 1);
}
