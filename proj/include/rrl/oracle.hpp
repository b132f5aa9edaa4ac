#pragma once

#include <optional>
#include <vector>

#include "rrl/cmdp.hpp"

namespace rrl {

// Raised by constrained_optimum when even the cheapest policy exceeds d.
class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A deterministic policy with its exact (value, cost) at the start distribution.
struct PolicyValuePoint {
    std::vector<int> actions;  // action per state
    StationaryPolicy policy;
    double value_reward = 0.0;
    double value_cost = 0.0;
    bool deterministic = true;
};

// Exact constrained solution. CMDP optima may need randomization; the oracle
// mixes over which deterministic policy governs an entire episode, which
// makes (value, cost) exactly linear in the mixture weight.
struct ConstrainedSolution {
    double optimal_value = 0.0;
    double optimal_cost = 0.0;
    PolicyValuePoint feasible;                    // the low-cost component
    std::optional<PolicyValuePoint> infeasible;   // present only when mixed
    double weight_infeasible = 0.0;               // mixture weight in [0,1]
    double lambda_star = 0.0;

    bool is_mixture() const { return infeasible.has_value(); }
};

// Evaluates every deterministic stationary policy exactly at the given start
// distribution (default: point mass on state 0). Guarded against blow-up:
// n_actions^n_states must not exceed 10^6.
std::vector<PolicyValuePoint> enumerate_policies(const CmdpSpec& spec,
                                                 std::vector<double> start_distribution = {});

// max value s.t. cost <= d, via bisection on the multiplier over the
// enumerated policies; returns a cost-exact mixture of the two bracketing
// deterministic policies when the constraint binds.
ConstrainedSolution constrained_optimum(const CmdpSpec& spec,
                                        std::vector<double> start_distribution = {});

// Non-dominated set in (higher reward, lower cost), ascending cost, one
// representative per duplicated (value, cost) pair.
std::vector<PolicyValuePoint> exact_pareto_front(const CmdpSpec& spec,
                                                 std::vector<double> start_distribution = {});
std::vector<PolicyValuePoint> exact_pareto_front(const std::vector<PolicyValuePoint>& table);

}  // namespace rrl
