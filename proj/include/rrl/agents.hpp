#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rrl/cmdp.hpp"
#include "rrl/envs.hpp"

namespace rrl {

// Trade-off coefficients of the composite reward.
struct CompositeWeights {
    double w_eng = 1.0;
    double w_emo = 1.0;
    double w_safety = 1.0;
};

// w_eng * r_eng + w_emo * r_emo - w_safety * 1{violation}.
double composite_reward(double r_eng, double r_emo, bool violation, const CompositeWeights& w);

// Multiplier state for projected dual ascent.
struct LagrangeState {
    double lambda = 0.0;          // >= 0 always
    double dual_step_size = 0.1;  // > 0
    double threshold_d = 1.0;     // >= 0
};

// lambda' = max(0, lambda + step * (estimated_cost - d)). The projection to
// zero keeps the penalty from flipping into a cost subsidy.
LagrangeState dual_update(LagrangeState ls, double estimated_cost);

// Per-step integrand of the Lagrangian: r - lambda * c. The constant
// lambda*d offsets the dual value, not the per-step signal.
double lagrangian_scalarize(double r, double c, double lambda);

// With probability epsilon a uniform action, otherwise the argmax of the
// q-row with ties broken toward the lowest action index.
int epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng);

int argmax_lowest(std::span<const double> row);

// Separate reward and cost critics over the discretized state space. The
// reward critic learns the scalarized (lambda-penalized) return; the cost
// critic tracks the raw cost channel so the dual update can see it.
struct DualCritic {
    Matrix q_reward;
    Matrix q_cost;
    double learning_rate = 0.1;

    DualCritic() = default;
    DualCritic(int n_states, int n_actions, double lr)
        : q_reward(n_states, n_actions, 0.0), q_cost(n_states, n_actions, 0.0), learning_rate(lr) {}

    int greedy_action(int state) const { return argmax_lowest(q_reward.row(state)); }
    StationaryPolicy greedy_policy() const;
};

// One-step TD update on both critics. The bootstrap action is the greedy
// choice under the scalarized (q_reward) values and is shared by the cost
// critic. `terminal` suppresses the bootstrap term.
void q_update(DualCritic& critic, const Transition& transition, double scalarized,
              double discount, bool terminal = false);

struct TrainConfig {
    CompositeWeights weights;
    LagrangeState lagrange;  // initial multiplier, dual step, threshold d
    int iterations = 400;
    int batch_size = 8;
    int horizon = 200;
    double learning_rate = 0.2;
    double epsilon_start = 0.3;
    double epsilon_end = 0.01;
    std::uint64_t seed = 0;
};

// One row per training iteration plus the final greedy policy.
struct TrainReport {
    std::vector<double> mean_return;  // batch-mean discounted composite return
    std::vector<double> mean_cost;    // batch-mean discounted cost (C-hat)
    std::vector<double> lambda;       // multiplier after the dual step
    std::vector<int> violation;       // 1 if C-hat exceeded d that iteration
    StationaryPolicy final_policy;
    DualCritic critic;
    double final_lambda = 0.0;
};

enum class BaselineVariant {
    engagement_only,  // trains on r_eng alone, no penalty, no constraint
    penalty_shaped,   // full composite reward, multiplier frozen at zero
};

// The constrained learner: batches of epsilon-greedy episodes, dual critics
// updated on the lambda-scalarized signal, projected dual ascent on the
// batch-mean discounted cost. There is no encoder update step; the simulator
// supplies the affect signal directly.
TrainReport train_rrl(Environment& env, const TrainConfig& config);

TrainReport train_baseline(Environment& env, BaselineVariant variant, const TrainConfig& config);

// Static heuristic: back off below the distress threshold, check in above.
int rule_based_policy(const UserState& state, const SyntheticEnvConfig& config);

// The rule-based baseline materialized as a one-hot policy over an
// environment's state space.
StationaryPolicy rule_based_stationary(const Environment& env);

}  // namespace rrl
