#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/envs.hpp"
#include "rrl/harness.hpp"
#include "rrl/metrics.hpp"
#include "rrl/oracle.hpp"

namespace py = pybind11;
using namespace rrl;

namespace {

CmdpSpec make_cmdp(const std::vector<std::vector<std::vector<double>>>& transition,
                   const std::vector<std::vector<double>>& reward,
                   const std::vector<std::vector<double>>& cost, double discount,
                   double threshold_d) {
    CmdpSpec spec;
    spec.n_states = static_cast<int>(transition.size());
    spec.n_actions = spec.n_states > 0 ? static_cast<int>(transition[0].size()) : 0;
    spec.discount = discount;
    spec.threshold_d = threshold_d;
    spec.transition = Tensor3(spec.n_states, spec.n_actions, spec.n_states, 0.0);
    spec.reward = Matrix(spec.n_states, spec.n_actions, 0.0);
    spec.cost = Matrix(spec.n_states, spec.n_actions, 0.0);
    for (int s = 0; s < spec.n_states; ++s) {
        for (int a = 0; a < spec.n_actions; ++a) {
            spec.reward.at(s, a) = reward[s][a];
            spec.cost.at(s, a) = cost[s][a];
            for (int t = 0; t < spec.n_states; ++t)
                spec.transition.at(s, a, t) = transition[s][a][t];
        }
    }
    return validate_cmdp(std::move(spec));
}

std::vector<std::vector<double>> matrix_to_lists(const Matrix& m) {
    std::vector<std::vector<double>> out(m.rows, std::vector<double>(m.cols, 0.0));
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out[i][j] = m.at(i, j);
    return out;
}

Trajectory traj_from_tuples(const std::vector<std::tuple<int, int, double, double, int>>& steps) {
    Trajectory t;
    for (const auto& [s, a, r, c, ns] : steps) t.transitions.push_back({s, a, r, c, ns});
    return t;
}

ExperimentConfig config_from_json_str(const std::string& text) {
    return parse_experiment_config(
        json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true));
}

}  // namespace

PYBIND11_MODULE(_rrlab, m) {
    m.doc() = "Constrained RL laboratory core: tabular CMDPs, Lagrangian learners, exact "
              "oracle, metrics, and the experiment harness";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ValidationError>(m, "ConfigError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");

    // ---- core types -------------------------------------------------------
    py::class_<CmdpSpec>(m, "CmdpSpec")
        .def_readonly("n_states", &CmdpSpec::n_states)
        .def_readonly("n_actions", &CmdpSpec::n_actions)
        .def_readonly("discount", &CmdpSpec::discount)
        .def_readwrite("threshold_d", &CmdpSpec::threshold_d)
        .def_property_readonly("reward", [](const CmdpSpec& s) { return matrix_to_lists(s.reward); })
        .def_property_readonly("cost", [](const CmdpSpec& s) { return matrix_to_lists(s.cost); });

    py::class_<StationaryPolicy>(m, "StationaryPolicy")
        .def_static("deterministic", &StationaryPolicy::deterministic, py::arg("actions"),
                    py::arg("n_actions"))
        .def_property_readonly("probabilities", [](const StationaryPolicy& p) {
            return matrix_to_lists(p.action_probabilities);
        });

    py::class_<ToyEnvConfig>(m, "ToyEnvConfig")
        .def(py::init<>())
        .def_readwrite("r0", &ToyEnvConfig::r0)
        .def_readwrite("c1", &ToyEnvConfig::c1)
        .def_readwrite("reward_emotional_engage", &ToyEnvConfig::reward_emotional_engage)
        .def_readwrite("reward_neutral_disengage", &ToyEnvConfig::reward_neutral_disengage)
        .def_readwrite("reward_emotional_disengage", &ToyEnvConfig::reward_emotional_disengage)
        .def_readwrite("discount", &ToyEnvConfig::discount)
        .def_readwrite("threshold_d", &ToyEnvConfig::threshold_d)
        .def_property(
            "p_emotional",
            [](const ToyEnvConfig& c) {
                return std::vector<std::vector<double>>{
                    {c.p_emotional[0][0], c.p_emotional[0][1]},
                    {c.p_emotional[1][0], c.p_emotional[1][1]}};
            },
            [](ToyEnvConfig& c, const std::vector<std::vector<double>>& p) {
                for (int s = 0; s < 2; ++s)
                    for (int a = 0; a < 2; ++a) c.p_emotional[s][a] = p.at(s).at(a);
            });

    m.def("make_cmdp", &make_cmdp, py::arg("transition"), py::arg("reward"), py::arg("cost"),
          py::arg("discount"), py::arg("threshold_d") = 0.0,
          "Build and validate a tabular CMDP from nested lists");
    m.def("toy_env_build", &toy_env_build, py::arg("config"));

    // ---- evaluation -------------------------------------------------------
    m.def(
        "exact_policy_values",
        [](const CmdpSpec& spec, const StationaryPolicy& policy) {
            const PolicyValues v = exact_policy_values(spec, policy);
            return py::make_tuple(v.value_reward, v.value_cost);
        },
        py::arg("spec"), py::arg("policy"),
        "Exact (value_reward, value_cost) per state via a direct linear solve");
    m.def(
        "discounted_return",
        [](const std::vector<std::tuple<int, int, double, double, int>>& steps, double discount) {
            return discounted_return(traj_from_tuples(steps), discount);
        },
        py::arg("transitions"), py::arg("discount"));
    m.def(
        "discounted_cost",
        [](const std::vector<std::tuple<int, int, double, double, int>>& steps, double discount) {
            return discounted_cost(traj_from_tuples(steps), discount);
        },
        py::arg("transitions"), py::arg("discount"));

    // ---- oracle -----------------------------------------------------------
    py::class_<PolicyValuePoint>(m, "PolicyValuePoint")
        .def_readonly("actions", &PolicyValuePoint::actions)
        .def_readonly("value_reward", &PolicyValuePoint::value_reward)
        .def_readonly("value_cost", &PolicyValuePoint::value_cost)
        .def_readonly("deterministic", &PolicyValuePoint::deterministic);

    py::class_<ConstrainedSolution>(m, "ConstrainedSolution")
        .def_readonly("optimal_value", &ConstrainedSolution::optimal_value)
        .def_readonly("optimal_cost", &ConstrainedSolution::optimal_cost)
        .def_readonly("lambda_star", &ConstrainedSolution::lambda_star)
        .def_readonly("weight_infeasible", &ConstrainedSolution::weight_infeasible)
        .def_property_readonly("feasible_actions",
                               [](const ConstrainedSolution& s) { return s.feasible.actions; })
        .def_property_readonly("infeasible_actions",
                               [](const ConstrainedSolution& s) -> py::object {
                                   if (!s.infeasible) return py::none();
                                   return py::cast(s.infeasible->actions);
                               })
        .def_property_readonly("is_mixture", &ConstrainedSolution::is_mixture);

    m.def("enumerate_policies", &enumerate_policies, py::arg("spec"),
          py::arg("start_distribution") = std::vector<double>{});
    m.def("constrained_optimum", &constrained_optimum, py::arg("spec"),
          py::arg("start_distribution") = std::vector<double>{});
    m.def(
        "exact_pareto_front",
        [](const CmdpSpec& spec, std::vector<double> start) {
            return exact_pareto_front(spec, std::move(start));
        },
        py::arg("spec"), py::arg("start_distribution") = std::vector<double>{});

    // ---- agents -----------------------------------------------------------
    m.def(
        "composite_reward",
        [](double r_eng, double r_emo, bool violation, double w_eng, double w_emo,
           double w_safety) {
            return composite_reward(r_eng, r_emo, violation, {w_eng, w_emo, w_safety});
        },
        py::arg("r_eng"), py::arg("r_emo"), py::arg("violation"), py::arg("w_eng") = 1.0,
        py::arg("w_emo") = 1.0, py::arg("w_safety") = 1.0);
    m.def(
        "dual_update",
        [](double lambda, double dual_step_size, double threshold_d, double estimated_cost) {
            return dual_update({lambda, dual_step_size, threshold_d}, estimated_cost).lambda;
        },
        py::arg("lambda_"), py::arg("dual_step_size"), py::arg("threshold_d"),
        py::arg("estimated_cost"));
    m.def("lagrangian_scalarize", &lagrangian_scalarize, py::arg("r"), py::arg("c"),
          py::arg("lambda_"));

    // ---- metrics ----------------------------------------------------------
    m.def("hypervolume", &hypervolume, py::arg("points"), py::arg("reference"));
    m.def("pareto_index", &pareto_index, py::arg("points"), py::arg("reference"),
          "Sum-normalized exclusive hypervolume contributions");

    // ---- harness (JSON-string bridge) --------------------------------------
    m.def(
        "load_config",
        [](const std::string& path) {
            return experiment_config_json(load_experiment_config(path)).dump();
        },
        py::arg("path"), "Load a config file, returning its canonical JSON form");
    m.def(
        "config_fingerprint",
        [](const std::string& config_json) {
            return config_fingerprint(config_from_json_str(config_json));
        },
        py::arg("config_json"));
    m.def(
        "run_experiment",
        [](const std::string& config_json, int workers) {
            std::vector<std::string> out;
            for (const RunRecord& r : run_experiment(config_from_json_str(config_json), workers))
                out.push_back(run_record_json(r).dump());
            return out;
        },
        py::arg("config_json"), py::arg("workers") = 1,
        "Run one experiment; returns one JSON record string per (cell, seed)");
    m.def(
        "compare_baselines",
        [](const std::string& config_json, int workers) {
            const ComparisonTable table =
                compare_baselines(config_from_json_str(config_json), workers);
            json rows = json::array();
            for (const ComparisonRow& row : table.rows)
                rows.push_back({{"agent", row.agent},
                                {"engagement_rate", row.metrics.engagement_rate},
                                {"emotional_alignment", row.metrics.emotional_alignment},
                                {"safety_cost", row.metrics.safety_cost},
                                {"violation_probability", row.metrics.violation_probability},
                                {"mean_return", row.metrics.mean_return}});
            return rows.dump();
        },
        py::arg("config_json"), py::arg("workers") = 1);
    m.def(
        "frontier_sweep",
        [](const std::string& config_json, int workers) {
            json rows = json::array();
            for (const FrontierRow& row :
                 frontier_sweep(config_from_json_str(config_json), workers))
                rows.push_back({{"label", row.label},
                                {"engagement_rate", row.metrics.engagement_rate},
                                {"emotional_alignment", row.metrics.emotional_alignment},
                                {"safety_cost", row.metrics.safety_cost},
                                {"mean_return", row.metrics.mean_return},
                                {"pareto_index", row.pareto_index}});
            return rows.dump();
        },
        py::arg("config_json"), py::arg("workers") = 1);
}
