#include "rrl/cmdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rrl {

namespace {

std::string rc_label(int s, int a) {
    std::ostringstream os;
    os << "(s=" << s << ", a=" << a << ")";
    return os.str();
}

}  // namespace

CmdpSpec validate_cmdp(CmdpSpec spec) {
    if (spec.n_states < 1) throw ValidationError("n_states must be positive");
    if (spec.n_actions < 1) throw ValidationError("n_actions must be positive");
    if (spec.transition.d0 != spec.n_states || spec.transition.d1 != spec.n_actions ||
        spec.transition.d2 != spec.n_states)
        throw ValidationError("transition tensor shape does not match (n_states, n_actions, n_states)");
    if (spec.reward.rows != spec.n_states || spec.reward.cols != spec.n_actions)
        throw ValidationError("reward shape does not match (n_states, n_actions)");
    if (spec.cost.rows != spec.n_states || spec.cost.cols != spec.n_actions)
        throw ValidationError("cost shape does not match (n_states, n_actions)");

    for (int s = 0; s < spec.n_states; ++s) {
        for (int a = 0; a < spec.n_actions; ++a) {
            double sum = 0.0;
            for (int t = 0; t < spec.n_states; ++t) {
                const double p = spec.transition.at(s, a, t);
                if (p < 0.0 || p > 1.0) {
                    std::ostringstream os;
                    os << "transition entry " << rc_label(s, a) << " -> " << t
                       << " is " << p << ", outside [0,1]";
                    throw ValidationError(os.str());
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                std::ostringstream os;
                os << "transition row " << rc_label(s, a) << " sums to " << sum;
                throw ValidationError(os.str());
            }
            if (spec.cost.at(s, a) < 0.0) {
                std::ostringstream os;
                os << "cost " << rc_label(s, a) << " is " << spec.cost.at(s, a) << ", negative";
                throw ValidationError(os.str());
            }
            if (!std::isfinite(spec.reward.at(s, a)))
                throw ValidationError("reward " + rc_label(s, a) + " is not finite");
        }
    }
    if (!(spec.discount > 0.0 && spec.discount < 1.0))
        throw ValidationError("discount out of range (0,1)");
    if (!(spec.threshold_d >= 0.0))
        throw ValidationError("threshold_d must be nonnegative");
    return spec;
}

void validate_trajectory(const Trajectory& traj, int n_states, int n_actions) {
    for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
        const Transition& tr = traj.transitions[i];
        if (tr.state < 0 || tr.state >= n_states || tr.next_state < 0 || tr.next_state >= n_states)
            throw ValidationError("trajectory step " + std::to_string(i) + " has out-of-range state");
        if (tr.action < 0 || tr.action >= n_actions)
            throw ValidationError("trajectory step " + std::to_string(i) + " has out-of-range action");
        if (tr.cost < 0.0)
            throw ValidationError("trajectory step " + std::to_string(i) + " has negative cost");
        if (i + 1 < traj.transitions.size() && traj.transitions[i + 1].state != tr.next_state)
            throw ValidationError("trajectory breaks the chain at step " + std::to_string(i));
    }
}

StationaryPolicy StationaryPolicy::deterministic(const std::vector<int>& actions, int n_actions) {
    StationaryPolicy p;
    p.action_probabilities = Matrix(static_cast<int>(actions.size()), n_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s)
        p.action_probabilities.at(static_cast<int>(s), actions[s]) = 1.0;
    return p;
}

int StationaryPolicy::sample(int state, Rng& rng) const {
    return sample_index(action_probabilities.row(state), rng);
}

bool StationaryPolicy::is_deterministic() const {
    for (int s = 0; s < action_probabilities.rows; ++s)
        for (int a = 0; a < action_probabilities.cols; ++a) {
            const double p = action_probabilities.at(s, a);
            if (p != 0.0 && p != 1.0) return false;
        }
    return true;
}

int StationaryPolicy::greedy_action(int state) const {
    auto row = action_probabilities.row(state);
    int best = 0;
    for (int a = 1; a < static_cast<int>(row.size()); ++a)
        if (row[a] > row[best]) best = a;
    return best;
}

void validate_policy(const StationaryPolicy& policy, int n_states, int n_actions) {
    const Matrix& m = policy.action_probabilities;
    if (m.rows != n_states || m.cols != n_actions)
        throw ValidationError("policy shape does not match (n_states, n_actions)");
    for (int s = 0; s < n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            const double p = m.at(s, a);
            if (p < 0.0 || p > 1.0)
                throw ValidationError("policy entry " + rc_label(s, a) + " outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("policy row s=" + std::to_string(s) + " sums to " + std::to_string(sum));
    }
}

double discounted_return(const Trajectory& traj, double discount) {
    double total = 0.0;
    double factor = 1.0;
    for (const Transition& tr : traj.transitions) {
        total += factor * tr.reward;
        factor *= discount;
    }
    return total;
}

double discounted_cost(const Trajectory& traj, double discount) {
    double total = 0.0;
    double factor = 1.0;
    for (const Transition& tr : traj.transitions) {
        total += factor * tr.cost;
        factor *= discount;
    }
    return total;
}

std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const int n = a.rows;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
        if (std::abs(a.at(pivot, col)) < 1e-12)
            throw std::runtime_error("singular linear system (pivot ~ 0 at column " +
                                     std::to_string(col) + ")");
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
            std::swap(b[pivot], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a.at(r, col) / a.at(col, col);
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a.at(r, c) * x[c];
        x[r] = acc / a.at(r, r);
    }
    return x;
}

PolicyValues exact_policy_values(const CmdpSpec& spec, const StationaryPolicy& policy) {
    validate_policy(policy, spec.n_states, spec.n_actions);
    const int n = spec.n_states;

    // A = I - gamma * P_pi, r_pi and c_pi the policy-averaged channels.
    Matrix a(n, n, 0.0);
    std::vector<double> r_pi(n, 0.0), c_pi(n, 0.0);
    for (int s = 0; s < n; ++s) {
        for (int act = 0; act < spec.n_actions; ++act) {
            const double pa = policy.action_probabilities.at(s, act);
            if (pa == 0.0) continue;
            r_pi[s] += pa * spec.reward.at(s, act);
            c_pi[s] += pa * spec.cost.at(s, act);
            for (int t = 0; t < n; ++t)
                a.at(s, t) -= spec.discount * pa * spec.transition.at(s, act, t);
        }
        a.at(s, s) += 1.0;
    }
    PolicyValues out;
    out.value_reward = solve_linear(a, r_pi);
    out.value_cost = solve_linear(a, c_pi);
    return out;
}

int sample_index(std::span<const double> probabilities, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
        acc += probabilities[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probabilities.size()) - 1;
}

CmdpEnv::CmdpEnv(CmdpSpec spec, std::vector<double> start_distribution,
                 std::vector<int> heuristic, std::vector<int> engage_set)
    : spec_(std::move(spec)),
      start_(std::move(start_distribution)),
      heuristic_(std::move(heuristic)),
      engage_set_(std::move(engage_set)) {
    if (start_.empty()) {
        start_.assign(spec_.n_states, 0.0);
        start_[0] = 1.0;
    }
    if (heuristic_.empty()) heuristic_.assign(spec_.n_states, 0);
    if (static_cast<int>(start_.size()) != spec_.n_states)
        throw ValidationError("start distribution size does not match n_states");
    double sum = 0.0;
    for (double p : start_) sum += p;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("start distribution does not sum to 1");
}

int CmdpEnv::reset(Rng& rng) {
    state_ = sample_index(start_, rng);
    return state_;
}

EnvStep CmdpEnv::step(int action, Rng& rng) {
    EnvStep out;
    out.transition.state = state_;
    out.transition.action = action;
    out.transition.reward = spec_.reward.at(state_, action);
    out.transition.cost = spec_.cost.at(state_, action);
    out.transition.next_state = sample_index(spec_.transition.row(state_, action), rng);
    out.reward_engagement = out.transition.reward;
    out.safety_violation = out.transition.cost > 0.0;
    state_ = out.transition.next_state;
    return out;
}

Episode rollout(Environment& env, const AgentFn& agent, int horizon, std::uint64_t seed) {
    if (horizon < 1) throw ValidationError("rollout horizon must be >= 1");
    Rng rng(seed);
    Episode ep;
    ep.trajectory.seed = seed;
    int state = env.reset(rng);
    for (int t = 0; t < horizon && !env.done(); ++t) {
        const int action = agent(state, rng);
        EnvStep s = env.step(action, rng);
        ep.trajectory.transitions.push_back(s.transition);
        ep.steps.push_back(s);
        state = s.transition.next_state;
    }
    return ep;
}

Episode rollout(Environment& env, const StationaryPolicy& policy, int horizon, std::uint64_t seed) {
    return rollout(
        env, [&policy](int s, Rng& rng) { return policy.sample(s, rng); }, horizon, seed);
}

}  // namespace rrl
