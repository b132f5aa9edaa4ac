#include "rrl/envs.hpp"

#include <algorithm>
#include <cmath>

namespace rrl {

CmdpSpec toy_env_build(const ToyEnvConfig& config) {
    CmdpSpec spec;
    spec.n_states = 2;
    spec.n_actions = 2;
    spec.discount = config.discount;
    spec.threshold_d = config.threshold_d;
    spec.reward = Matrix(2, 2, 0.0);
    spec.reward.at(kToyNeutral, kToyEngage) = config.r0;
    spec.reward.at(kToyEmotional, kToyEngage) = config.reward_emotional_engage;
    spec.reward.at(kToyNeutral, kToyDisengage) = config.reward_neutral_disengage;
    spec.reward.at(kToyEmotional, kToyDisengage) = config.reward_emotional_disengage;
    spec.cost = Matrix(2, 2, 0.0);
    spec.cost.at(kToyEmotional, kToyEngage) = config.c1;
    spec.transition = Tensor3(2, 2, 2, 0.0);
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
            const double pe = config.p_emotional[s][a];
            spec.transition.at(s, a, kToyEmotional) = pe;
            spec.transition.at(s, a, kToyNeutral) = 1.0 - pe;
        }
    }
    return validate_cmdp(std::move(spec));
}

CmdpEnv make_toy_env(const ToyEnvConfig& config) {
    return CmdpEnv(toy_env_build(config),
                   /*start_distribution=*/{1.0, 0.0},
                   /*heuristic=*/{kToyEngage, kToyDisengage},
                   /*engage_set=*/{kToyEngage});
}

std::vector<ActionSpec> default_action_set() {
    return {
        {"check_in", +1, 1.0, 0.6, true},
        {"encourage_activity", +1, 1.0, 0.8, true},
        {"deliver_content", 0, 0.0, 0.5, true},
        {"escalate_support", +1, 2.0, 1.0, true},
        {"disengage_wait", -1, 0.0, 0.0, false},
    };
}

void validate_config(const SyntheticEnvConfig& config) {
    auto in_open01 = [](double x) { return x > 0.0 && x < 1.0; };
    auto in_closed01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    // Closed bounds: degenerate probabilities (0/1) are legal so noiseless
    // deterministic configs stay constructible.
    if (!in_closed01(config.p_raise)) throw ValidationError("p_raise out of range [0,1]");
    if (!in_closed01(config.p_lower)) throw ValidationError("p_lower out of range [0,1]");
    if (!in_closed01(config.env_noise)) throw ValidationError("env_noise out of range [0,1]");
    if (!(config.sigma_obs >= 0.0)) throw ValidationError("sigma_obs must be nonnegative");
    if (!(config.step_size > 0.0)) throw ValidationError("step_size must be positive");
    if (!(config.cost_penalty >= 0.0)) throw ValidationError("cost_penalty must be nonnegative");
    if (!in_open01(config.history_decay)) throw ValidationError("history_decay out of range (0,1)");
    if (config.e_bins < 2) throw ValidationError("e_bins must be >= 2");
    if (config.h_bins < 2) throw ValidationError("h_bins must be >= 2");
    if (config.horizon < 1) throw ValidationError("horizon must be >= 1");
    if (config.actions.size() < 2) throw ValidationError("need at least two actions");
    if (config.profiles.empty()) throw ValidationError("need at least one user profile");
    for (const ActionSpec& a : config.actions) {
        if (a.valence < -1 || a.valence > 1)
            throw ValidationError("action '" + a.name + "' valence outside {-1,0,+1}");
        if (a.payoff < 0.0 || a.payoff > 1.0)
            throw ValidationError("action '" + a.name + "' payoff outside [0,1]");
    }
    for (const UserProfile& p : config.profiles) {
        if (p.severity < 0.0 || p.severity > 1.0)
            throw ValidationError("profile severity outside [0,1]");
        if (!(p.responsiveness > 0.0 && p.responsiveness <= 2.0))
            throw ValidationError("profile responsiveness outside (0,2]");
    }
    if (!std::is_sorted(config.profile_cutpoints.begin(), config.profile_cutpoints.end()))
        throw ValidationError("profile_cutpoints must be sorted ascending");
    if (!(config.discount > 0.0 && config.discount < 1.0))
        throw ValidationError("discount out of range (0,1)");
    if (!(config.threshold_d >= 0.0)) throw ValidationError("threshold_d must be nonnegative");
}

EmotionalState emotional_transition(const EmotionalState& e, int action,
                                    const UserProfile& profile,
                                    const SyntheticEnvConfig& config, Rng& rng) {
    const ActionSpec& act = config.actions[action];
    const bool distressed = e.latent_e < config.distress_threshold;
    const bool sensitive = act.valence > 0 && !distressed;
    const bool lowering = act.valence < 0 || (act.valence > 0 && distressed);

    int direction = 0;
    if (sensitive && rng.bernoulli(config.p_raise)) direction = +1;
    if (lowering && rng.bernoulli(config.p_lower)) direction = -1;
    if (rng.bernoulli(config.env_noise)) direction = rng.bernoulli(0.5) ? +1 : -1;

    EmotionalState out = e;
    const double step = config.step_size * profile.responsiveness;
    out.latent_e = std::clamp(e.latent_e + direction * step, -1.0, 1.0);
    return out;
}

double observe(const EmotionalState& e, double sigma_obs, Rng& rng) {
    return e.latent_e + rng.normal(0.0, sigma_obs);
}

std::pair<double, double> reward_signals(const UserState& state, int action,
                                         const SyntheticEnvConfig& config) {
    const ActionSpec& act = config.actions[action];
    const double readiness = (1.0 + state.emotion.latent_e) / 2.0;
    const double r_eng = act.engaging ? act.payoff * readiness : 0.0;

    const double e = state.emotion.latent_e;
    const int sign_e = (e > 0.0) - (e < 0.0);
    const int product = sign_e * act.valence;
    const double r_emo = product > 0 ? 1.0 : (product < 0 ? -1.0 : 0.0);
    return {r_eng, r_emo};
}

double cost_signal(const UserState& state, int action, const SyntheticEnvConfig& config) {
    const ActionSpec& act = config.actions[action];
    const bool emotionally_engaging =
        act.valence > 0 && act.intensity >= config.min_cost_intensity;
    if (emotionally_engaging && state.emotion.latent_e < config.distress_threshold)
        return config.cost_penalty;
    return 0.0;
}

namespace {

// Maps x in [0,1] to one of `bins` uniform intervals, closed-lower/open-upper,
// with the top interval closed; values outside [0,1] are clamped.
int bin_unit_interval(double x, int bins) {
    const double clamped = std::clamp(x, 0.0, 1.0);
    const int b = static_cast<int>(std::floor(clamped * bins));
    return std::min(b, bins - 1);
}

}  // namespace

int profile_levels(const SyntheticEnvConfig& config) {
    return static_cast<int>(config.profile_cutpoints.size()) + 1;
}

int discretize_state(const UserProfile& profile, const EngagementHistory& history,
                     double observation, const SyntheticEnvConfig& config) {
    const int e_bin = bin_unit_interval((std::clamp(observation, -1.0, 1.0) + 1.0) / 2.0,
                                        config.e_bins);
    const int h_bin = bin_unit_interval(history.ewma_engagement, config.h_bins);
    int level = 0;
    for (double cut : config.profile_cutpoints)
        if (profile.severity >= cut) ++level;  // exact hit goes to the upper level
    return (level * config.h_bins + h_bin) * config.e_bins + e_bin;
}

int state_space_size(const SyntheticEnvConfig& config) {
    return profile_levels(config) * config.h_bins * config.e_bins;
}

int heuristic_for_observation(double observed, const SyntheticEnvConfig& config) {
    const auto& actions = config.actions;
    auto find_first = [&actions](auto pred) {
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (pred(actions[i])) return static_cast<int>(i);
        return 0;
    };
    if (observed < config.distress_threshold)
        return find_first([](const ActionSpec& a) { return a.valence < 0; });
    return find_first([](const ActionSpec& a) { return a.valence > 0; });
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig config) : config_(std::move(config)) {
    validate_config(config_);
}

int SyntheticEnv::reset(Rng& rng) {
    const int which = config_.profiles.size() > 1
                          ? rng.uniform_int(static_cast<int>(config_.profiles.size()))
                          : 0;
    current_.profile = config_.profiles[which];
    current_.history = EngagementHistory{0.0, config_.history_decay};
    current_.emotion.latent_e = std::clamp(
        config_.initial_latent - config_.severity_shift * current_.profile.severity, -1.0, 1.0);
    current_.emotion.observed_o = observe(current_.emotion, config_.sigma_obs, rng);
    current_.index =
        discretize_state(current_.profile, current_.history, current_.emotion.observed_o, config_);
    steps_taken_ = 0;
    started_ = true;
    return current_.index;
}

EnvStep SyntheticEnv::step(int action, Rng& rng) {
    if (!started_) throw ValidationError("step() before reset()");
    if (done()) throw ValidationError("step() on a finished episode");
    if (action < 0 || action >= n_actions()) throw ValidationError("action index out of range");

    EnvStep out;
    out.transition.state = current_.index;
    out.transition.action = action;
    out.latent_emotion = current_.emotion.latent_e;
    out.observation = current_.emotion.observed_o;

    const auto [r_eng, r_emo] = reward_signals(current_, action, config_);
    const double cost = cost_signal(current_, action, config_);
    out.reward_engagement = r_eng;
    out.reward_alignment = r_emo;
    out.transition.reward = r_eng;  // primary channel; agents weight the parts
    out.transition.cost = cost;
    out.safety_violation = cost > 0.0;

    current_.emotion = emotional_transition(current_.emotion, action, current_.profile, config_, rng);
    current_.history.update(config_.actions[action].engaging);
    current_.emotion.observed_o = observe(current_.emotion, config_.sigma_obs, rng);
    current_.index =
        discretize_state(current_.profile, current_.history, current_.emotion.observed_o, config_);

    out.transition.next_state = current_.index;
    ++steps_taken_;
    out.done = done();
    return out;
}

int SyntheticEnv::heuristic_action(int state) const {
    // The tabular projection of the observation rule: threshold the midpoint
    // of the state's e-bin.
    const int e_bin = state % config_.e_bins;
    const double midpoint = -1.0 + 2.0 * (e_bin + 0.5) / config_.e_bins;
    return heuristic_for_observation(midpoint, config_);
}

std::vector<int> SyntheticEnv::engaging_actions() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < config_.actions.size(); ++i)
        if (config_.actions[i].engaging) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> SyntheticEnv::action_valence() const {
    std::vector<int> out;
    out.reserve(config_.actions.size());
    for (const ActionSpec& a : config_.actions) out.push_back(a.valence);
    return out;
}

}  // namespace rrl
