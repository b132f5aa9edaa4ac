#include "rrl/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace rrl {

double engagement_rate(const Trajectory& traj, const std::vector<int>& engage_actions) {
    if (traj.transitions.empty()) throw ValidationError("engagement_rate on empty trajectory");
    int hits = 0;
    for (const Transition& tr : traj.transitions)
        if (std::find(engage_actions.begin(), engage_actions.end(), tr.action) !=
            engage_actions.end())
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(traj.transitions.size());
}

double emotional_alignment(const Episode& episode, const std::vector<int>& action_valence) {
    if (episode.steps.empty()) throw ValidationError("emotional_alignment on empty trajectory");
    int aligned = 0;
    for (const EnvStep& s : episode.steps) {
        const double e = s.latent_emotion;
        const int sign_e = (e > 0.0) - (e < 0.0);
        if (sign_e * action_valence[s.transition.action] > 0) ++aligned;
    }
    return static_cast<double>(aligned) / static_cast<double>(episode.steps.size());
}

double safety_cost(const std::vector<Trajectory>& trajectories, double discount, CostMode mode) {
    if (trajectories.empty()) throw ValidationError("safety_cost on empty collection");
    double total = 0.0;
    for (const Trajectory& traj : trajectories)
        total += discounted_cost(traj, mode == CostMode::discounted ? discount : 1.0);
    return total / static_cast<double>(trajectories.size());
}

double violation_probability(const std::vector<Trajectory>& trajectories, double discount,
                             double threshold_d) {
    if (trajectories.empty()) throw ValidationError("violation_probability on empty collection");
    int violations = 0;
    for (const Trajectory& traj : trajectories)
        if (discounted_cost(traj, discount) > threshold_d) ++violations;
    return static_cast<double>(violations) / static_cast<double>(trajectories.size());
}

namespace {

// 2D staircase area of the union of boxes [ref, p], maximization orientation.
double area2d(std::vector<std::array<double, 2>> pts, double ref_x, double ref_y) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
    double area = 0.0;
    double best_y = ref_y;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double next_x = i + 1 < pts.size() ? pts[i + 1][0] : ref_x;
        best_y = std::max(best_y, pts[i][1]);
        area += (pts[i][0] - next_x) * (best_y - ref_y);
    }
    return area;
}

double hv_impl(const std::vector<std::vector<double>>& points, const std::vector<double>& ref) {
    const std::size_t dim = ref.size();
    // Keep only points strictly above the reference in every coordinate;
    // the rest span zero volume.
    std::vector<std::vector<double>> pts;
    for (const auto& p : points) {
        bool positive = true;
        for (std::size_t k = 0; k < dim; ++k)
            if (p[k] <= ref[k]) positive = false;
        if (positive) pts.push_back(p);
    }
    if (pts.empty()) return 0.0;

    if (dim == 1) {
        double best = ref[0];
        for (const auto& p : pts) best = std::max(best, p[0]);
        return best - ref[0];
    }
    if (dim == 2) {
        std::vector<std::array<double, 2>> flat;
        flat.reserve(pts.size());
        for (const auto& p : pts) flat.push_back({p[0], p[1]});
        return area2d(std::move(flat), ref[0], ref[1]);
    }

    // dim == 3: integrate the 2D area over z slabs; the active set grows as
    // z sweeps downward.
    std::vector<double> zs;
    for (const auto& p : pts) zs.push_back(p[2]);
    std::sort(zs.begin(), zs.end(), std::greater<>());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

    double volume = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double z_top = zs[i];
        const double z_bottom = i + 1 < zs.size() ? zs[i + 1] : ref[2];
        std::vector<std::array<double, 2>> active;
        for (const auto& p : pts)
            if (p[2] >= z_top) active.push_back({p[0], p[1]});
        volume += area2d(std::move(active), ref[0], ref[1]) * (z_top - z_bottom);
    }
    return volume;
}

}  // namespace

double hypervolume(const std::vector<std::vector<double>>& points,
                   const std::vector<double>& reference) {
    if (reference.empty() || reference.size() > 3)
        throw ValidationError("hypervolume supports 1 to 3 objectives");
    for (const auto& p : points)
        if (p.size() != reference.size())
            throw ValidationError("hypervolume point dimension mismatch");
    return hv_impl(points, reference);
}

std::vector<double> pareto_index(const std::vector<std::array<double, 3>>& points,
                                 const std::array<double, 3>& reference) {
    if (points.empty()) throw ValidationError("pareto_index needs at least one point");
    for (const auto& p : points)
        for (int k = 0; k < 3; ++k)
            if (p[k] < reference[k])
                throw ValidationError(
                    "invalid reference point: must be weakly dominated by every point");

    const int n = static_cast<int>(points.size());

    // A point contributes only if nothing weakly dominates it; exact
    // duplicates after the first occurrence are treated as dominated.
    std::vector<bool> contributes(n, true);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n && contributes[i]; ++j) {
            if (j == i) continue;
            bool weak = true, strict = false;
            for (int k = 0; k < 3; ++k) {
                if (points[j][k] < points[i][k]) weak = false;
                if (points[j][k] > points[i][k]) strict = true;
            }
            if (weak && strict) contributes[i] = false;
            if (weak && !strict && j < i) contributes[i] = false;  // duplicate
        }
    }

    std::vector<std::vector<double>> all;
    for (int i = 0; i < n; ++i)
        if (contributes[i]) all.push_back({points[i][0], points[i][1], points[i][2]});
    const std::vector<double> ref{reference[0], reference[1], reference[2]};
    const double total = hv_impl(all, ref);

    std::vector<double> exclusive(n, 0.0);
    double exclusive_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!contributes[i]) continue;
        std::vector<std::vector<double>> rest;
        for (int j = 0; j < n; ++j)
            if (contributes[j] && j != i) rest.push_back({points[j][0], points[j][1], points[j][2]});
        exclusive[i] = total - hv_impl(rest, ref);
        exclusive_sum += exclusive[i];
    }

    std::vector<double> index(n, 0.0);
    if (exclusive_sum > 0.0) {
        for (int i = 0; i < n; ++i) index[i] = exclusive[i] / exclusive_sum;
    } else {
        // All survivors coincide (or span zero volume): split evenly.
        int survivors = 0;
        for (int i = 0; i < n; ++i) survivors += contributes[i] ? 1 : 0;
        for (int i = 0; i < n; ++i)
            if (contributes[i]) index[i] = 1.0 / survivors;
    }
    return index;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw ValidationError("aggregate on empty report list");
    const int n = static_cast<int>(reports.size());

    auto mean_of = [&reports, n](auto field) {
        double s = 0.0;
        for (const MetricReport& r : reports) s += field(r);
        return s / n;
    };
    auto halfwidth_of = [&reports, n](auto field, double mean) {
        bool all_equal = true;
        for (const MetricReport& r : reports)
            if (field(r) != field(reports.front())) all_equal = false;
        if (all_equal) return 0.0;  // zero variance, exactly
        double ss = 0.0;
        for (const MetricReport& r : reports) {
            const double d = field(r) - mean;
            ss += d * d;
        }
        const double stderr_ = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
        return 1.96 * stderr_;
    };

    MetricReport out;
    out.safety_cost_mode = reports.front().safety_cost_mode;
    auto f_eng = [](const MetricReport& r) { return r.engagement_rate; };
    auto f_emo = [](const MetricReport& r) { return r.emotional_alignment; };
    auto f_cost = [](const MetricReport& r) { return r.safety_cost; };
    auto f_viol = [](const MetricReport& r) { return r.violation_probability; };
    auto f_ret = [](const MetricReport& r) { return r.mean_return; };

    out.engagement_rate = mean_of(f_eng);
    out.emotional_alignment = mean_of(f_emo);
    out.safety_cost = mean_of(f_cost);
    out.violation_probability = mean_of(f_viol);
    out.mean_return = mean_of(f_ret);
    for (const MetricReport& r : reports) out.n_episodes += r.n_episodes;

    if (n >= 2) {
        MetricHalfwidths hw;
        hw.engagement_rate = halfwidth_of(f_eng, out.engagement_rate);
        hw.emotional_alignment = halfwidth_of(f_emo, out.emotional_alignment);
        hw.safety_cost = halfwidth_of(f_cost, out.safety_cost);
        hw.violation_probability = halfwidth_of(f_viol, out.violation_probability);
        hw.mean_return = halfwidth_of(f_ret, out.mean_return);
        out.halfwidth = hw;
    }
    return out;
}

}  // namespace rrl
