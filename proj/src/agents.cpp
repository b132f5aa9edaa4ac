#include "rrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rrl {

double composite_reward(double r_eng, double r_emo, bool violation, const CompositeWeights& w) {
    return w.w_eng * r_eng + w.w_emo * r_emo - w.w_safety * (violation ? 1.0 : 0.0);
}

LagrangeState dual_update(LagrangeState ls, double estimated_cost) {
    ls.lambda = std::max(0.0, ls.lambda + ls.dual_step_size * (estimated_cost - ls.threshold_d));
    return ls;
}

double lagrangian_scalarize(double r, double c, double lambda) {
    return r - lambda * c;
}

int argmax_lowest(std::span<const double> row) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(row.size()); ++a)
        if (row[a] > row[best]) best = a;
    return best;
}

int epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
    if (rng.bernoulli(epsilon)) return rng.uniform_int(static_cast<int>(q_row.size()));
    return argmax_lowest(q_row);
}

StationaryPolicy DualCritic::greedy_policy() const {
    std::vector<int> actions(q_reward.rows, 0);
    for (int s = 0; s < q_reward.rows; ++s) actions[s] = greedy_action(s);
    return StationaryPolicy::deterministic(actions, q_reward.cols);
}

void q_update(DualCritic& critic, const Transition& tr, double scalarized, double discount,
              bool terminal) {
    double target_r = scalarized;
    double target_c = tr.cost;
    if (!terminal) {
        const int boot = argmax_lowest(critic.q_reward.row(tr.next_state));
        target_r += discount * critic.q_reward.at(tr.next_state, boot);
        target_c += discount * critic.q_cost.at(tr.next_state, boot);
    }
    const double lr = critic.learning_rate;
    double& qr = critic.q_reward.at(tr.state, tr.action);
    double& qc = critic.q_cost.at(tr.state, tr.action);
    qr += lr * (target_r - qr);
    qc += lr * (target_c - qc);
}

namespace {

void check_finite(const DualCritic& critic, int iteration) {
    for (int s = 0; s < critic.q_reward.rows; ++s)
        for (int a = 0; a < critic.q_reward.cols; ++a)
            if (!std::isfinite(critic.q_reward.at(s, a)) || !std::isfinite(critic.q_cost.at(s, a))) {
                std::ostringstream os;
                os << "non-finite critic entry at iteration " << iteration << ", state " << s
                   << ", action " << a << " (q_reward=" << critic.q_reward.at(s, a)
                   << ", q_cost=" << critic.q_cost.at(s, a) << ")";
                throw std::runtime_error(os.str());
            }
}

// Shared loop for the constrained learner and both learned baselines; the
// baselines differ only in the effective weights and a frozen multiplier.
TrainReport train_impl(Environment& env, const TrainConfig& config, const CompositeWeights& weights,
                       bool dual_enabled) {
    if (config.iterations < 1) throw ValidationError("iterations must be >= 1");
    if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(config.lagrange.dual_step_size > 0.0))
        throw ValidationError("dual_step_size must be positive");
    if (config.lagrange.lambda < 0.0) throw ValidationError("initial lambda must be >= 0");

    Rng rng(derive_seed(config.seed, kStreamTrain));
    DualCritic critic(env.n_states(), env.n_actions(), config.learning_rate);
    LagrangeState ls = config.lagrange;
    if (!dual_enabled) ls.lambda = 0.0;
    const double gamma = env.discount();

    const double eps_ratio = config.epsilon_end / config.epsilon_start;
    const double eps_decay =
        config.iterations > 1 ? std::pow(eps_ratio, 1.0 / (config.iterations - 1)) : 1.0;
    double epsilon = config.epsilon_start;

    TrainReport report;
    report.mean_return.reserve(config.iterations);
    report.mean_cost.reserve(config.iterations);
    report.lambda.reserve(config.iterations);
    report.violation.reserve(config.iterations);

    for (int it = 0; it < config.iterations; ++it) {
        // Collect a batch under the current epsilon-greedy policy.
        std::vector<Episode> batch;
        batch.reserve(config.batch_size);
        const AgentFn agent = [&critic, epsilon](int s, Rng& r) {
            return epsilon_greedy(critic.q_reward.row(s), epsilon, r);
        };
        for (int b = 0; b < config.batch_size; ++b)
            batch.push_back(rollout(env, agent, config.horizon, rng.next_u64()));

        // Batch-mean discounted composite return and cost.
        double sum_return = 0.0, sum_cost = 0.0;
        for (const Episode& ep : batch) {
            double factor = 1.0, ret = 0.0;
            for (const EnvStep& s : ep.steps) {
                ret += factor * composite_reward(s.reward_engagement, s.reward_alignment,
                                                 s.safety_violation, weights);
                factor *= gamma;
            }
            sum_return += ret;
            sum_cost += discounted_cost(ep.trajectory, gamma);
        }
        const double mean_return = sum_return / config.batch_size;
        const double mean_cost = sum_cost / config.batch_size;

        // Critic updates at the current multiplier; horizon cuts are
        // truncations of a continuing task, so the bootstrap stays on.
        for (const Episode& ep : batch) {
            for (const EnvStep& s : ep.steps) {
                const double composite = composite_reward(s.reward_engagement, s.reward_alignment,
                                                          s.safety_violation, weights);
                const double scalarized =
                    lagrangian_scalarize(composite, s.transition.cost, ls.lambda);
                q_update(critic, s.transition, scalarized, gamma, /*terminal=*/false);
            }
        }
        check_finite(critic, it);

        if (dual_enabled) ls = dual_update(ls, mean_cost);

        report.mean_return.push_back(mean_return);
        report.mean_cost.push_back(mean_cost);
        report.lambda.push_back(ls.lambda);
        report.violation.push_back(mean_cost > ls.threshold_d ? 1 : 0);

        epsilon = std::max(config.epsilon_end, epsilon * eps_decay);
    }

    report.final_policy = critic.greedy_policy();
    report.critic = critic;
    report.final_lambda = ls.lambda;
    return report;
}

}  // namespace

TrainReport train_rrl(Environment& env, const TrainConfig& config) {
    return train_impl(env, config, config.weights, /*dual_enabled=*/true);
}

TrainReport train_baseline(Environment& env, BaselineVariant variant, const TrainConfig& config) {
    switch (variant) {
        case BaselineVariant::engagement_only:
            return train_impl(env, config, CompositeWeights{1.0, 0.0, 0.0}, /*dual_enabled=*/false);
        case BaselineVariant::penalty_shaped:
            return train_impl(env, config, config.weights, /*dual_enabled=*/false);
    }
    throw std::logic_error("unknown baseline variant");
}

int rule_based_policy(const UserState& state, const SyntheticEnvConfig& config) {
    return heuristic_for_observation(state.emotion.observed_o, config);
}

StationaryPolicy rule_based_stationary(const Environment& env) {
    std::vector<int> actions(env.n_states(), 0);
    for (int s = 0; s < env.n_states(); ++s) actions[s] = env.heuristic_action(s);
    return StationaryPolicy::deterministic(actions, env.n_actions());
}

}  // namespace rrl
