#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrl/agents.hpp"
#include "rrl/cmdp.hpp"
#include "rrl/envs.hpp"
#include "rrl/metrics.hpp"
#include "rrl/oracle.hpp"

namespace rrl {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Experiment configuration. One human-readable JSON document per experiment
// (// and /* */ comments are allowed and stripped at parse time), with an
// explicit schema version.
// ---------------------------------------------------------------------------

struct AgentParams {
    std::string kind = "rrl";  // rrl | engagement_only | penalty_shaped | rule_based
    CompositeWeights weights;
    double lambda0 = 0.0;
    double dual_step_size = 0.1;
    int iterations = 400;
    int batch_size = 8;
    double learning_rate = 0.2;
    double epsilon_start = 0.3;
    double epsilon_end = 0.01;
};

struct SweepSpec {
    std::vector<double> threshold_d;         // may be empty
    std::vector<CompositeWeights> weights;   // may be empty
};

// CI gates checked by `rrl compare`; violating one exits with code 3.
struct GateSpec {
    std::optional<double> max_rrl_cost_slack;  // mean cost <= d + slack*max(1,d)
    std::optional<double> min_violation_gap;   // viol(engagement_only) - viol(rrl)
};

// An explicit tabular CMDP spelled out in the config document, for
// experiments beyond the two built-in environments.
struct RawCmdpConfig {
    CmdpSpec spec;
    std::vector<double> start_distribution;  // default: point mass on state 0
    std::vector<int> heuristic_actions;      // rule-based action per state
    std::vector<int> engage_actions;         // actions counted as engagement
};

struct ExperimentConfig {
    int version = 1;
    std::string name = "experiment";
    std::string env_kind = "toy";  // toy | synthetic | cmdp
    ToyEnvConfig toy;
    SyntheticEnvConfig synthetic;
    RawCmdpConfig raw_cmdp;
    AgentParams agent;
    int horizon = 280;
    std::vector<std::uint64_t> seeds = {1};
    std::optional<SweepSpec> sweep;
    int eval_episodes = 200;
    GateSpec gates;
    std::string output_dir = "out";
};

ExperimentConfig parse_experiment_config(const json& j);
ExperimentConfig load_experiment_config(const std::string& path);
// Canonical resolved form (defaults materialized, output_dir excluded);
// this is the fingerprint input.
json experiment_config_json(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);
std::string config_fingerprint(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Sweep cells and run records.
// ---------------------------------------------------------------------------

struct SweepCell {
    int index = 0;
    std::optional<double> threshold_d;
    std::optional<CompositeWeights> weights;

    std::string label() const;
    json to_json() const;
};

// The full grid (threshold_d x weights); a single pass-through cell when no
// sweep is configured.
std::vector<SweepCell> expand_sweep(const ExperimentConfig& config);
ExperimentConfig apply_cell(ExperimentConfig config, const SweepCell& cell);

std::unique_ptr<Environment> build_environment(const ExperimentConfig& config);

struct RunRecord {
    int format_version = 1;
    std::string fingerprint;
    std::uint64_t seed = 0;
    std::string agent;
    json cell;
    TrainReport train;
    MetricReport metrics;
    double wall_clock_seconds = 0.0;
    json config;  // resolved experiment config the fingerprint covers
};

json run_record_json(const RunRecord& record);
RunRecord parse_run_record(const json& j);
bool verify_fingerprint(const RunRecord& record);

// ---------------------------------------------------------------------------
// Campaigns.
// ---------------------------------------------------------------------------

// Evaluates a fixed policy with exploration off: `episodes` fresh episodes
// whose seeds derive from the run seed through the eval stream split.
MetricReport evaluate_policy(Environment& env, const StationaryPolicy& policy, int episodes,
                             std::uint64_t run_seed, int horizon);

// Trains (or instantiates) the configured agent for one (cell, seed) unit
// and evaluates it.
RunRecord run_unit(const ExperimentConfig& cell_config, const SweepCell& cell,
                   std::uint64_t seed, const std::string& fingerprint);

// One record per (sweep cell x seed), canonically ordered cell-major then
// seed-major. Independent units may run on `workers` threads; the result is
// identical regardless of worker count or scheduling.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, int workers = 1);

struct FrontierRow {
    std::string label;
    json cell;
    MetricReport metrics;  // aggregated across seeds
    double pareto_index = 0.0;
};

// Aggregates sweep records into one frontier row per cell and indexes the
// swept set on the (engagement, alignment, -safety) triple.
std::vector<FrontierRow> frontier_rows(const std::vector<RunRecord>& records);

// Requires a sweep in the config.
std::vector<FrontierRow> frontier_sweep(const ExperimentConfig& config, int workers,
                                        std::vector<RunRecord>* records_out = nullptr);

struct ComparisonRow {
    std::string agent;
    MetricReport metrics;  // aggregated across seeds
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<RunRecord> records;
};

// Runs B1 (rule-based), B2 (engagement-only), B3 (penalty-shaped) and RRL on
// the same seeds and environment.
ComparisonTable compare_baselines(const ExperimentConfig& config, int workers = 1);

struct GateReport {
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

GateReport check_gates(const ExperimentConfig& config, const ComparisonTable& table);

// ---------------------------------------------------------------------------
// Persistence: line-delimited records, flat CSV plot data.
// ---------------------------------------------------------------------------

void write_records_jsonl(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> load_records_jsonl(const std::string& path);

// learning_curves.csv: label,seed,iteration,mean_return,mean_cost,lambda
// frontier.csv:        label,mean_return,mean_cost,engagement_rate,
//                      emotional_alignment,safety_cost,pareto_index
void write_learning_curves_csv(const std::vector<RunRecord>& records, const std::string& path);
void write_frontier_csv(const std::vector<FrontierRow>& rows, const std::string& path);
void write_comparison_csv(const ComparisonTable& table, const std::string& path);

// Writes records.jsonl, learning_curves.csv and, when records span multiple
// cells, frontier.csv into `dir`.
void emit_plot_data(const std::vector<RunRecord>& records, const std::string& dir);

// Exact oracle tables for a toy-environment config, in the same frontier
// column schema so the exact front overlays the empirical one.
struct OracleTables {
    std::vector<PolicyValuePoint> policies;
    std::vector<PolicyValuePoint> front;
    ConstrainedSolution solution;
};

OracleTables oracle_tables(const ExperimentConfig& config);
void write_oracle_outputs(const OracleTables& tables, const std::string& dir);

// Golden trajectory records: one JSON object per line carrying seed, config
// fingerprint and the packed transition list.
void write_trajectory_records(const std::vector<Episode>& episodes,
                              const std::string& fingerprint, const std::string& path);
std::vector<Trajectory> read_trajectory_records(const std::string& path,
                                                std::string* fingerprint_out = nullptr);

}  // namespace rrl
