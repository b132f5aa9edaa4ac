// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Every tolerance is pinned here, in code.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/envs.hpp"
#include "rrl/harness.hpp"
#include "rrl/metrics.hpp"
#include "rrl/oracle.hpp"
#include "support/reference.hpp"

using namespace rrl;

namespace {

const std::string kSourceDir = RRL_SOURCE_DIR;
int g_failures = 0;

class Criterion {
  public:
    Criterion(const char* id, const char* title) : id_(id), title_(title) {
        start_ = std::chrono::steady_clock::now();
    }

    void expect(bool ok, const std::string& detail) {
        if (!ok) {
            failed_ = true;
            details_.push_back(detail);
        }
    }

    ~Criterion() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("[%s] %s: %s (%.1fs)\n", failed_ ? "FAIL" : "PASS", id_, title_, secs);
        for (const std::string& d : details_) std::printf("       %s\n", d.c_str());
        std::fflush(stdout);
        if (failed_) ++g_failures;
    }

  private:
    const char* id_;
    const char* title_;
    bool failed_ = false;
    std::vector<std::string> details_;
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion1_oracle_agreement() {
    Criterion crit("C1", "exact policy evaluation agrees with 1e6-step Monte-Carlo");
    Rng rng(90214);
    double worst_z = 0.0;
    int specs_checked = 0, policies_checked = 0;
    for (int i = 0; i < 20; ++i) {
        const int n_states = 2 + rng.uniform_int(3);   // 2..4
        const int n_actions = 2 + rng.uniform_int(2);  // 2..3
        const double gamma = (i % 2 == 0) ? 0.9 : 0.95;
        const CmdpSpec spec = ref::random_cmdp(n_states, n_actions, gamma, rng);
        std::vector<double> start(n_states, 0.0);
        start[0] = 1.0;
        for (const PolicyValuePoint& p : enumerate_policies(spec, start)) {
            // 2000 episodes x 500 steps = 1e6 steps per policy;
            // gamma^500 <= 7.3e-12 so truncation is far below the noise.
            const auto mc = ref::mc_policy_eval(spec, p.actions, start, 2000, 500, rng);
            const double zr = std::abs(p.value_reward - mc.reward.mean) /
                              std::max(mc.reward.stderr_, 1e-12);
            const double zc =
                std::abs(p.value_cost - mc.cost.mean) / std::max(mc.cost.stderr_, 1e-12);
            worst_z = std::max({worst_z, zr, zc});
            crit.expect(zr <= 3.0, fmt("reward z=%.2f on spec %.0f", zr, i));
            crit.expect(zc <= 3.0, fmt("cost z=%.2f on spec %.0f", zc, i));
            ++policies_checked;
        }
        ++specs_checked;
    }
    crit.expect(specs_checked == 20, "spec count");
    crit.expect(policies_checked >= 20 * 4, "policy count");
    std::printf("       20 specs, %d policies, worst |z| = %.2f\n", policies_checked, worst_z);
}

void criterion2_constraint_satisfaction() {
    Criterion crit("C2", "RRL meets the budget and tracks the constrained optimum");
    const ExperimentConfig config =
        load_experiment_config(kSourceDir + "/configs/toy_default.json");
    const CmdpSpec spec = toy_env_build(config.toy);
    const double d = config.toy.threshold_d;
    const ConstrainedSolution oracle = constrained_optimum(spec);

    TrainConfig tc;
    tc.weights = config.agent.weights;
    tc.lagrange = {config.agent.lambda0, config.agent.dual_step_size, d};
    tc.iterations = config.agent.iterations;
    tc.batch_size = config.agent.batch_size;
    tc.horizon = config.horizon;
    tc.learning_rate = config.agent.learning_rate;
    tc.epsilon_start = config.agent.epsilon_start;
    tc.epsilon_end = config.agent.epsilon_end;

    int passing = 0;
    for (const std::uint64_t seed : config.seeds) {
        CmdpEnv env = make_toy_env(config.toy);
        tc.seed = seed;
        const TrainReport report = train_rrl(env, tc);

        const int n = static_cast<int>(report.mean_cost.size());
        const int window = n / 10;
        double tail = 0.0;
        for (int i = n - window; i < n; ++i) tail += report.mean_cost[i];
        tail /= window;
        const bool cost_ok = tail <= d + 0.05 * std::max(1.0, d);

        const PolicyValues v = exact_policy_values(spec, report.final_policy);
        const bool value_ok =
            std::abs(v.value_reward[0] - oracle.optimal_value) <= 0.10 * oracle.optimal_value;
        if (cost_ok && value_ok) ++passing;
        std::printf("       seed %llu: tail C=%.3f (<= %.3f), greedy value %.3f vs v*=%.3f %s\n",
                    static_cast<unsigned long long>(seed), tail, d + 0.05 * std::max(1.0, d),
                    v.value_reward[0], oracle.optimal_value,
                    cost_ok && value_ok ? "ok" : "MISS");
    }
    crit.expect(passing >= 4, fmt("only %.0f of 5 seeds passed", passing));
}

void criterion3_incremental_contribution() {
    Criterion crit("C3", "constraints cut violations vs the engagement-only baseline");
    ExperimentConfig config =
        load_experiment_config(kSourceDir + "/configs/toy_adversarial.json");

    double viol_rrl = 0.0, viol_b2 = 0.0;
    ExperimentConfig rrl_config = config;
    rrl_config.agent.kind = "rrl";
    for (const RunRecord& r : run_experiment(rrl_config))
        viol_rrl += r.metrics.violation_probability;
    viol_rrl /= static_cast<double>(config.seeds.size());

    ExperimentConfig b2_config = config;
    b2_config.agent.kind = "engagement_only";
    for (const RunRecord& r : run_experiment(b2_config))
        viol_b2 += r.metrics.violation_probability;
    viol_b2 /= static_cast<double>(config.seeds.size());

    const double gap = viol_b2 - viol_rrl;
    std::printf("       violation probability: engagement_only=%.3f rrl=%.3f gap=%.3f\n",
                viol_b2, viol_rrl, gap);
    crit.expect(gap >= 0.3, fmt("gap %.3f below 0.3", gap));
}

void criterion4_dual_dynamics() {
    Criterion crit("C4", "projected dual ascent: nonnegative, strictly ascending on violation");
    Rng rng(31337);
    bool all_ok = true;
    for (int i = 0; i < 10000; ++i) {
        LagrangeState ls{rng.uniform01() * 4.0, 1e-3 + rng.uniform01(), rng.uniform01() * 3.0};
        const double cost = rng.uniform01() * 6.0;
        const LagrangeState next = dual_update(ls, cost);
        if (next.lambda < 0.0) all_ok = false;
        if (cost > ls.threshold_d && !(next.lambda > ls.lambda)) all_ok = false;
        if (cost == ls.threshold_d && next.lambda != ls.lambda) all_ok = false;
    }
    crit.expect(all_ok, "dual update violated a dynamics property");
}

void criterion5_frontier_monotonicity() {
    Criterion crit("C5", "constrained value is non-decreasing in d, exactly and empirically");
    ExperimentConfig config = load_experiment_config(kSourceDir + "/configs/toy_sweep_d.json");
    const std::vector<double>& grid = config.sweep->threshold_d;

    double previous = -1e300;
    for (const double d : grid) {
        CmdpSpec spec = toy_env_build(config.toy);
        spec.threshold_d = d;
        const ConstrainedSolution sol = constrained_optimum(spec);
        crit.expect(sol.optimal_value >= previous - 1e-9,
                    fmt("oracle value decreased at d=%.2f", d));
        previous = sol.optimal_value;
    }

    const auto rows = frontier_sweep(config, 1);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double mean_i = rows[i].metrics.mean_return;
        const double mean_j = rows[i + 1].metrics.mean_return;
        const double hw_i = rows[i].metrics.halfwidth ? rows[i].metrics.halfwidth->mean_return : 0;
        const double hw_j =
            rows[i + 1].metrics.halfwidth ? rows[i + 1].metrics.halfwidth->mean_return : 0;
        crit.expect(mean_j >= mean_i - (hw_i + hw_j) - 1e-9,
                    fmt("empirical return dropped beyond CIs between cells %.0f and %.0f",
                        static_cast<double>(i), static_cast<double>(i + 1)));
        std::printf("       %s: return=%.3f +- %.3f\n", rows[i].label.c_str(), mean_i, hw_i);
    }
    std::printf("       %s: return=%.3f +- %.3f\n", rows.back().label.c_str(),
                rows.back().metrics.mean_return,
                rows.back().metrics.halfwidth ? rows.back().metrics.halfwidth->mean_return : 0.0);
}

void criterion6_metric_correctness() {
    Criterion crit("C6", "metrics match straight-line references and MC hypervolume");
    Rng rng(55555);
    const std::vector<int> engage_set{0, 2};
    const std::vector<int> valence{+1, -1, 0};

    for (int trial = 0; trial < 100; ++trial) {
        const int len = 1 + rng.uniform_int(60);
        Episode ep;
        for (int t = 0; t < len; ++t) {
            EnvStep s;
            s.transition.action = rng.uniform_int(3);
            s.transition.cost = rng.bernoulli(0.4) ? rng.uniform01() * 2.0 : 0.0;
            s.transition.reward = rng.uniform_real(-1.0, 1.0);
            s.latent_emotion = rng.uniform_real(-1.0, 1.0);
            ep.steps.push_back(s);
            ep.trajectory.transitions.push_back(s.transition);
        }
        const double gamma = 0.9, d = 1.0;

        // Straight-line references.
        int engaged = 0, aligned = 0;
        double plain_sum = 0.0, discounted_sum = 0.0, factor = 1.0;
        for (const EnvStep& s : ep.steps) {
            if (s.transition.action == 0 || s.transition.action == 2) ++engaged;
            const double e = s.latent_emotion;
            const int se = (e > 0) - (e < 0);
            if (se * valence[s.transition.action] > 0) ++aligned;
            plain_sum += s.transition.cost;
            discounted_sum += factor * s.transition.cost;
            factor *= gamma;
        }

        crit.expect(engagement_rate(ep.trajectory, engage_set) ==
                        static_cast<double>(engaged) / len,
                    "engagement_rate mismatch");
        crit.expect(emotional_alignment(ep, valence) == static_cast<double>(aligned) / len,
                    "emotional_alignment mismatch");
        const std::vector<Trajectory> coll{ep.trajectory};
        crit.expect(std::abs(safety_cost(coll, gamma, CostMode::undiscounted) - plain_sum) <= 1e-12,
                    "undiscounted safety_cost mismatch");
        crit.expect(
            std::abs(safety_cost(coll, gamma, CostMode::discounted) - discounted_sum) <= 1e-12,
            "discounted safety_cost mismatch");
        crit.expect(violation_probability(coll, gamma, d) ==
                        (discounted_sum > d ? 1.0 : 0.0),
                    "violation_probability mismatch");
    }

    // Five hand-built 3D point sets vs 1e6-sample MC contributions.
    const std::vector<std::vector<std::array<double, 3>>> sets{
        {{3.0, 1.0, 1.0}, {1.0, 3.0, 1.0}, {2.0, 2.0, 2.0}},
        {{1.0, 1.0, 4.0}, {1.0, 4.0, 1.0}, {4.0, 1.0, 1.0}, {2.5, 2.5, 2.5}},
        {{2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}},                       // one dominated
        {{1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}, {2.0, 3.0, 1.0}, {1.0, 1.0, 1.0}},
        {{5.0, 1.0, 1.0}, {1.0, 5.0, 1.0}, {1.0, 1.0, 5.0}, {3.0, 3.0, 3.0}, {4.0, 4.0, 0.5}},
    };
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const std::array<double, 3> refpt{0.0, 0.0, 0.0};
        const auto idx = pareto_index(sets[k], refpt);
        const auto mc = ref::mc_hypervolume(sets[k], refpt, 1000000, rng);
        const double mc_sum = std::accumulate(mc.exclusive.begin(), mc.exclusive.end(), 0.0);
        for (std::size_t i = 0; i < sets[k].size(); ++i) {
            const double mc_index = mc_sum > 0.0 ? mc.exclusive[i] / mc_sum : 0.0;
            crit.expect(std::abs(idx[i] - mc_index) <= 0.01,
                        fmt("pareto_index off by %.4f on set %.0f", std::abs(idx[i] - mc_index),
                            static_cast<double>(k)));
        }
    }
}

void criterion7_reproducibility() {
    Criterion crit("C7", "records are byte-identical across reruns and worker counts");
    ExperimentConfig config = load_experiment_config(kSourceDir + "/configs/toy_default.json");
    config.agent.iterations = 60;
    config.seeds = {1, 2};
    SweepSpec sweep;
    sweep.threshold_d = {0.5, 2.0};
    config.sweep = sweep;

    auto canonical = [](const std::vector<RunRecord>& records) {
        std::string out;
        for (const RunRecord& r : records) {
            json j = run_record_json(r);
            j["wall_clock_seconds"] = 0.0;  // the only field allowed to differ
            out += j.dump() + "\n";
        }
        return out;
    };

    const std::string first = canonical(run_experiment(config, 1));
    const std::string second = canonical(run_experiment(config, 1));
    const std::string pooled = canonical(run_experiment(config, 4));
    crit.expect(first == second, "two consecutive single-worker runs differ");
    crit.expect(first == pooled, "1-worker vs 4-worker runs differ");
    crit.expect(!first.empty(), "no records produced");
}

void criterion8_composite_algebra() {
    Criterion crit("C8", "composite reward: weight linearity and indicator semantics");
    Rng rng(777777);
    bool all_ok = true;
    for (int i = 0; i < 10000; ++i) {
        const double r_eng = rng.uniform_real(-3.0, 3.0);
        const double r_emo = rng.uniform_real(-3.0, 3.0);
        const bool violation = rng.bernoulli(0.5);
        const CompositeWeights w{rng.uniform01() * 5, rng.uniform01() * 5, rng.uniform01() * 5};
        const double alpha = rng.uniform_real(0.0, 4.0);

        // linearity in each weight
        for (int k = 0; k < 3; ++k) {
            CompositeWeights scaled = w, zeroed = w;
            (k == 0 ? scaled.w_eng : k == 1 ? scaled.w_emo : scaled.w_safety) *= alpha;
            (k == 0 ? zeroed.w_eng : k == 1 ? zeroed.w_emo : zeroed.w_safety) = 0.0;
            const double base = composite_reward(r_eng, r_emo, violation, zeroed);
            const double unit = composite_reward(r_eng, r_emo, violation, w) - base;
            const double scaled_term = composite_reward(r_eng, r_emo, violation, scaled) - base;
            if (std::abs(scaled_term - alpha * unit) > 1e-12) all_ok = false;
        }

        // exact indicator semantics of the safety term
        const double with_violation = composite_reward(r_eng, r_emo, true, w);
        const double without = composite_reward(r_eng, r_emo, false, w);
        if (std::abs((without - with_violation) - w.w_safety) > 1e-12) all_ok = false;
        if (std::abs(without - (w.w_eng * r_eng + w.w_emo * r_emo)) > 1e-12) all_ok = false;
    }
    crit.expect(all_ok, "an algebraic identity failed");
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion1_oracle_agreement();
    criterion2_constraint_satisfaction();
    criterion3_incremental_contribution();
    criterion4_dual_dynamics();
    criterion5_frontier_monotonicity();
    criterion6_metric_correctness();
    criterion7_reproducibility();
    criterion8_composite_algebra();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 8 criteria passed in %.1fs\n", 8 - g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
