#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrl/rng.hpp"
#include "rrl/tensor.hpp"

namespace rrl {

// Raised whenever a spec/config/policy violates one of its invariants.
// The message names the first offending entry (indices included).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Full tabular specification of a constrained MDP: reward channel to
// maximize, nonnegative cost channel to keep below threshold_d.
struct CmdpSpec {
    int n_states = 0;
    int n_actions = 0;
    Tensor3 transition;   // [state][action][next_state], rows sum to 1
    Matrix reward;        // [state][action]
    Matrix cost;          // [state][action], entries >= 0
    double discount = 0.95;
    double threshold_d = 0.0;
};

// Checks all CmdpSpec invariants; returns the spec unchanged on success.
CmdpSpec validate_cmdp(CmdpSpec spec);

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    double cost = 0.0;
    int next_state = 0;
};

struct Trajectory {
    std::vector<Transition> transitions;
    std::uint64_t seed = 0;
};

// Throws unless indices are in bounds and consecutive transitions chain
// (next_state of step t == state of step t+1).
void validate_trajectory(const Trajectory& traj, int n_states, int n_actions);

// Row-stochastic policy over a discrete state space. Deterministic policies
// are the one-hot special case.
struct StationaryPolicy {
    Matrix action_probabilities;  // [state][action]

    static StationaryPolicy deterministic(const std::vector<int>& actions, int n_actions);
    int sample(int state, Rng& rng) const;
    bool is_deterministic() const;
    // For a one-hot row, the chosen action; otherwise the argmax.
    int greedy_action(int state) const;
};

void validate_policy(const StationaryPolicy& policy, int n_states, int n_actions);

// Sum_t discount^t * reward_t. Empty trajectories yield 0.
double discounted_return(const Trajectory& traj, double discount);
double discounted_cost(const Trajectory& traj, double discount);

struct PolicyValues {
    std::vector<double> value_reward;  // per state
    std::vector<double> value_cost;    // per state
};

// Exact infinite-horizon policy evaluation: solves V = r_pi + gamma * P_pi V
// for both channels by Gaussian elimination with partial pivoting.
PolicyValues exact_policy_values(const CmdpSpec& spec, const StationaryPolicy& policy);

// Solves A x = b in place, partial pivoting; throws on a singular system.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

// One environment step as seen by an agent. The scalar transition.reward is
// the environment's primary (engagement) channel; reward_engagement and
// reward_alignment carry the two feedback signals separately so learners can
// weight them. latent_emotion/observation describe the state the action was
// taken in; they are 0 for environments without an affect model.
struct EnvStep {
    Transition transition;
    double reward_engagement = 0.0;
    double reward_alignment = 0.0;
    double latent_emotion = 0.0;
    double observation = 0.0;
    bool safety_violation = false;
    bool done = false;
};

// Step contract shared by the toy CMDP and the synthetic user environment.
class Environment {
  public:
    virtual ~Environment() = default;

    virtual int n_states() const = 0;
    virtual int n_actions() const = 0;
    virtual double discount() const = 0;
    virtual double threshold_d() const = 0;

    // Starts a fresh episode, returns the initial state index.
    virtual int reset(Rng& rng) = 0;
    // Applies an action; throws if the episode already terminated.
    virtual EnvStep step(int action, Rng& rng) = 0;
    virtual bool done() const = 0;

    // The conventional rule-based action for a state (baseline B1).
    virtual int heuristic_action(int state) const = 0;
    // Actions counting toward the engagement-rate metric.
    virtual std::vector<int> engaging_actions() const = 0;
    // Per-action intended affective valence in {-1, 0, +1} (the f map).
    virtual std::vector<int> action_valence() const = 0;
};

// A tabular CMDP as a simulator. Episodes never terminate on their own;
// rollout's horizon bounds them.
class CmdpEnv : public Environment {
  public:
    CmdpEnv(CmdpSpec spec, std::vector<double> start_distribution = {},
            std::vector<int> heuristic = {}, std::vector<int> engage_set = {});

    int n_states() const override { return spec_.n_states; }
    int n_actions() const override { return spec_.n_actions; }
    double discount() const override { return spec_.discount; }
    double threshold_d() const override { return spec_.threshold_d; }

    int reset(Rng& rng) override;
    EnvStep step(int action, Rng& rng) override;
    bool done() const override { return false; }

    int heuristic_action(int state) const override { return heuristic_[state]; }
    std::vector<int> engaging_actions() const override { return engage_set_; }
    std::vector<int> action_valence() const override {
        return std::vector<int>(spec_.n_actions, 0);
    }

    const CmdpSpec& spec() const { return spec_; }
    const std::vector<double>& start_distribution() const { return start_; }

  private:
    CmdpSpec spec_;
    std::vector<double> start_;      // start-state distribution
    std::vector<int> heuristic_;     // rule-based action per state
    std::vector<int> engage_set_;
    int state_ = 0;
};

// Samples an index from a distribution given one uniform draw (inverse CDF,
// residual mass to the last index).
int sample_index(std::span<const double> probabilities, Rng& rng);

struct Episode {
    Trajectory trajectory;
    std::vector<EnvStep> steps;  // parallel to trajectory.transitions
};

using AgentFn = std::function<int(int state, Rng& rng)>;

// Runs one seeded episode: exactly `horizon` transitions unless the
// environment terminates earlier. Per step the agent draws first, the
// environment second, all from the same seeded generator, so a (config,
// policy, seed) triple pins the trajectory bit-exactly.
Episode rollout(Environment& env, const AgentFn& agent, int horizon, std::uint64_t seed);
Episode rollout(Environment& env, const StationaryPolicy& policy, int horizon, std::uint64_t seed);

}  // namespace rrl
