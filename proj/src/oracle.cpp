#include "rrl/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace rrl {

namespace {

std::vector<double> resolve_start(const CmdpSpec& spec, std::vector<double> start) {
    if (start.empty()) {
        start.assign(spec.n_states, 0.0);
        start[0] = 1.0;
    }
    if (static_cast<int>(start.size()) != spec.n_states)
        throw ValidationError("start distribution size does not match n_states");
    double sum = 0.0;
    for (double p : start) {
        if (p < 0.0) throw ValidationError("start distribution has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("start distribution does not sum to 1");
    return start;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Best deterministic policy under value - lambda * cost; exact ties prefer
// lower cost, then lower index, so the sweep is deterministic.
int best_scalarized(const std::vector<PolicyValuePoint>& table, double lambda) {
    int best = 0;
    double best_score = table[0].value_reward - lambda * table[0].value_cost;
    for (int i = 1; i < static_cast<int>(table.size()); ++i) {
        const double score = table[i].value_reward - lambda * table[i].value_cost;
        if (score > best_score ||
            (score == best_score && table[i].value_cost < table[best].value_cost)) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

}  // namespace

std::vector<PolicyValuePoint> enumerate_policies(const CmdpSpec& spec,
                                                 std::vector<double> start_distribution) {
    const std::vector<double> start = resolve_start(spec, std::move(start_distribution));
    const double count = std::pow(static_cast<double>(spec.n_actions), spec.n_states);
    if (count > 1e6)
        throw ValidationError("policy enumeration too large: n_actions^n_states > 1e6");

    const long total = static_cast<long>(std::llround(count));
    std::vector<PolicyValuePoint> table;
    table.reserve(total);
    std::vector<int> actions(spec.n_states, 0);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int s = 0; s < spec.n_states; ++s) {
            actions[s] = static_cast<int>(rem % spec.n_actions);
            rem /= spec.n_actions;
        }
        PolicyValuePoint point;
        point.actions = actions;
        point.policy = StationaryPolicy::deterministic(actions, spec.n_actions);
        const PolicyValues values = exact_policy_values(spec, point.policy);
        point.value_reward = dot(start, values.value_reward);
        point.value_cost = dot(start, values.value_cost);
        table.push_back(std::move(point));
    }
    return table;
}

ConstrainedSolution constrained_optimum(const CmdpSpec& spec,
                                        std::vector<double> start_distribution) {
    const auto table = enumerate_policies(spec, std::move(start_distribution));
    const double d = spec.threshold_d;

    int min_cost_idx = 0;
    for (int i = 1; i < static_cast<int>(table.size()); ++i)
        if (table[i].value_cost < table[min_cost_idx].value_cost) min_cost_idx = i;
    if (table[min_cost_idx].value_cost > d + 1e-9) {
        throw InfeasibleError("no feasible policy: minimum achievable cost " +
                              std::to_string(table[min_cost_idx].value_cost) +
                              " exceeds threshold d = " + std::to_string(d));
    }

    ConstrainedSolution out;

    // Complementary slackness: an unconstrained optimum that is already
    // feasible is the answer at lambda* = 0.
    const int unconstrained = best_scalarized(table, 0.0);
    if (table[unconstrained].value_cost <= d + 1e-9) {
        out.feasible = table[unconstrained];
        out.optimal_value = out.feasible.value_reward;
        out.optimal_cost = out.feasible.value_cost;
        out.lambda_star = 0.0;
        return out;
    }

    // Bracket: at lambda_lo the scalarized argmax violates the budget, at
    // lambda_hi it satisfies it.
    double lambda_lo = 0.0;
    double lambda_hi = 1.0;
    for (int guard = 0; table[best_scalarized(table, lambda_hi)].value_cost > d; ++guard) {
        lambda_lo = lambda_hi;
        lambda_hi *= 2.0;
        if (guard > 200) throw std::runtime_error("dual bisection failed to bracket");
    }

    for (int it = 0; it < 100 && (lambda_hi - lambda_lo) > 1e-12 * std::max(1.0, lambda_hi); ++it) {
        const double mid = 0.5 * (lambda_lo + lambda_hi);
        if (table[best_scalarized(table, mid)].value_cost > d)
            lambda_lo = mid;
        else
            lambda_hi = mid;
    }

    const PolicyValuePoint& high = table[best_scalarized(table, lambda_lo)];  // cost > d
    const PolicyValuePoint& low = table[best_scalarized(table, lambda_hi)];   // cost <= d
    out.lambda_star = 0.5 * (lambda_lo + lambda_hi);
    out.feasible = low;

    const double gap = high.value_cost - low.value_cost;
    const double beta = gap > 0.0 ? (d - low.value_cost) / gap : 0.0;
    if (beta <= 0.0) {
        // The feasible bracket policy already sits on (or above) the budget.
        out.optimal_value = low.value_reward;
        out.optimal_cost = low.value_cost;
        return out;
    }

    out.infeasible = high;
    out.weight_infeasible = beta;
    out.optimal_value = beta * high.value_reward + (1.0 - beta) * low.value_reward;
    out.optimal_cost = d;  // exact by construction of beta
    return out;
}

std::vector<PolicyValuePoint> exact_pareto_front(const std::vector<PolicyValuePoint>& table) {
    std::vector<PolicyValuePoint> front;
    for (const PolicyValuePoint& cand : table) {
        bool dominated = false;
        for (const PolicyValuePoint& other : table) {
            const bool weakly_better = other.value_reward >= cand.value_reward &&
                                       other.value_cost <= cand.value_cost;
            const bool strictly_better = other.value_reward > cand.value_reward ||
                                         other.value_cost < cand.value_cost;
            if (weakly_better && strictly_better) {
                dominated = true;
                break;
            }
        }
        if (dominated) continue;
        const bool duplicate =
            std::any_of(front.begin(), front.end(), [&cand](const PolicyValuePoint& kept) {
                return kept.value_reward == cand.value_reward && kept.value_cost == cand.value_cost;
            });
        if (!duplicate) front.push_back(cand);
    }
    std::sort(front.begin(), front.end(), [](const PolicyValuePoint& a, const PolicyValuePoint& b) {
        return a.value_cost < b.value_cost;
    });
    return front;
}

std::vector<PolicyValuePoint> exact_pareto_front(const CmdpSpec& spec,
                                                 std::vector<double> start_distribution) {
    return exact_pareto_front(enumerate_policies(spec, std::move(start_distribution)));
}

}  // namespace rrl
