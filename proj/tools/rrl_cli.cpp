#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "rrl/harness.hpp"

namespace {

// Exit codes: 0 success, 1 config error, 2 runtime failure,
// 3 acceptance-threshold (gate) failure.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kGateFailure = 3;

void print_metrics(const std::string& label, const rrl::MetricReport& m) {
    const char* mode = m.safety_cost_mode == rrl::CostMode::discounted ? "discounted" : "plain";
    std::cout << label << ": engagement=" << m.engagement_rate
              << " alignment=" << m.emotional_alignment << " safety_cost=" << m.safety_cost
              << " (" << mode << ")"
              << " violation_p=" << m.violation_probability << " return=" << m.mean_return
              << " (n=" << m.n_episodes << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rrl - constrained reinforcement learning laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 1;
    std::vector<std::uint64_t> seed_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "experiment config (JSON, comments allowed)")
            ->required();
        sub->add_option("-o,--out", out_dir, "output directory (overrides config)");
        sub->add_option("-w,--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
        sub->add_option("-s,--seed", seed_override, "override the config's seed list");
    };

    CLI::App* cmd_validate = app.add_subcommand("validate", "check a config and print its fingerprint");
    CLI::App* cmd_run = app.add_subcommand("run", "train and evaluate one experiment");
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "frontier campaign over a weight/threshold grid");
    CLI::App* cmd_compare = app.add_subcommand("compare", "baselines vs RRL on shared seeds");
    CLI::App* cmd_oracle = app.add_subcommand("oracle", "exact tables for a toy-env config");
    for (CLI::App* sub : {cmd_validate, cmd_run, cmd_sweep, cmd_compare, cmd_oracle})
        add_common(sub);

    CLI11_PARSE(app, argc, argv);

    rrl::ExperimentConfig config;
    try {
        config = rrl::load_experiment_config(config_path);
        if (!seed_override.empty()) config.seeds = seed_override;
        if (!out_dir.empty()) config.output_dir = out_dir;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        const std::filesystem::path out(config.output_dir);
        if (!cmd_validate->parsed()) {
            std::error_code ec;
            std::filesystem::create_directories(out, ec);
            if (ec) {
                std::cerr << "error: cannot create output directory " << out << ": "
                          << ec.message() << "\n";
                return kRuntimeError;
            }
        }

        if (cmd_validate->parsed()) {
            std::cout << "ok " << rrl::config_fingerprint(config) << "\n";
            return kOk;
        }

        if (cmd_run->parsed()) {
            const auto records = rrl::run_experiment(config, workers);
            rrl::write_records_jsonl(records, (out / "records.jsonl").string());
            rrl::emit_plot_data(records, out.string());
            for (const auto& r : records)
                print_metrics(r.agent + "/" + r.cell.at("label").get<std::string>() + "/seed=" +
                                  std::to_string(r.seed),
                              r.metrics);
            std::cout << "wrote " << records.size() << " records to " << out.string() << "\n";
            return kOk;
        }

        if (cmd_sweep->parsed()) {
            std::vector<rrl::RunRecord> records;
            const auto rows = rrl::frontier_sweep(config, workers, &records);
            rrl::write_records_jsonl(records, (out / "records.jsonl").string());
            rrl::emit_plot_data(records, out.string());
            for (const auto& row : rows) {
                print_metrics(row.label, row.metrics);
                std::cout << "  pareto_index=" << row.pareto_index << "\n";
            }
            std::cout << "wrote frontier with " << rows.size() << " cells to " << out.string()
                      << "\n";
            return kOk;
        }

        if (cmd_compare->parsed()) {
            const auto table = rrl::compare_baselines(config, workers);
            rrl::write_records_jsonl(table.records, (out / "records.jsonl").string());
            rrl::write_comparison_csv(table, (out / "comparison.csv").string());
            rrl::write_learning_curves_csv(table.records, (out / "learning_curves.csv").string());
            for (const auto& row : table.rows) print_metrics(row.agent, row.metrics);

            const auto gates = rrl::check_gates(config, table);
            if (!gates.passed()) {
                for (const std::string& f : gates.failures)
                    std::cerr << "gate failure: " << f << "\n";
                return kGateFailure;
            }
            std::cout << "wrote comparison to " << out.string() << "\n";
            return kOk;
        }

        if (cmd_oracle->parsed()) {
            const auto tables = rrl::oracle_tables(config);
            rrl::write_oracle_outputs(tables, out.string());
            std::cout << "policies=" << tables.policies.size()
                      << " front=" << tables.front.size()
                      << " optimal_value=" << tables.solution.optimal_value
                      << " optimal_cost=" << tables.solution.optimal_cost
                      << " lambda_star=" << tables.solution.lambda_star << "\n";
            std::cout << "wrote oracle tables to " << out.string() << "\n";
            return kOk;
        }
    } catch (const rrl::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kRuntimeError;
}
