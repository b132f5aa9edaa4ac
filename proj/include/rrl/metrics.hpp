#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rrl/cmdp.hpp"

namespace rrl {

enum class CostMode { discounted, undiscounted };

// Per-policy evaluation summary. Halfwidths are normal-approximation 95%
// intervals over seeds and are absent for single runs.
struct MetricHalfwidths {
    double engagement_rate = 0.0;
    double emotional_alignment = 0.0;
    double safety_cost = 0.0;
    double violation_probability = 0.0;
    double mean_return = 0.0;
};

struct MetricReport {
    double engagement_rate = 0.0;        // in [0,1]
    double emotional_alignment = 0.0;    // in [0,1]
    double safety_cost = 0.0;            // >= 0
    double violation_probability = 0.0;  // in [0,1]
    double mean_return = 0.0;
    int n_episodes = 0;
    CostMode safety_cost_mode = CostMode::discounted;
    std::optional<MetricHalfwidths> halfwidth;
};

// Fraction of steps whose action belongs to the engaging subset.
double engagement_rate(const Trajectory& traj, const std::vector<int>& engage_actions);

// Fraction of steps where sign(e_t) * sign(f(a_t)) > 0. Zero-sign steps count
// as non-aligned (the strict inequality is deliberate; neutral actions
// depress alignment).
double emotional_alignment(const Episode& episode, const std::vector<int>& action_valence);

// Mean over episodes of the per-episode cost sum, discounted or plain.
double safety_cost(const std::vector<Trajectory>& trajectories, double discount, CostMode mode);

// Fraction of episodes whose discounted cost exceeds threshold_d.
double violation_probability(const std::vector<Trajectory>& trajectories, double discount,
                             double threshold_d);

// Volume of objective space between `reference` and the points, maximization
// orientation, 1 to 3 dimensions.
double hypervolume(const std::vector<std::vector<double>>& points,
                   const std::vector<double>& reference);

// Pareto efficiency index: each point's exclusive hypervolume contribution,
// normalized so the non-dominated subset sums to 1. Dominated points and
// exact duplicates (after the first occurrence) get 0. The reference point
// must be weakly dominated by every point.
std::vector<double> pareto_index(const std::vector<std::array<double, 3>>& points,
                                 const std::array<double, 3>& reference);

// Per-metric mean and 1.96 * stderr halfwidths across seeds; with a single
// report the halfwidths are absent.
MetricReport aggregate(const std::vector<MetricReport>& reports);

}  // namespace rrl
