#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "rrl/cmdp.hpp"

namespace rrl {

// ---------------------------------------------------------------------------
// Two-state toy CMDP: neutral/emotional states, engage/disengage actions.
// Engaging in the neutral state pays r0; engaging in the emotional state
// incurs cost c1. Exactly solvable, used for all oracle comparisons.
// ---------------------------------------------------------------------------

inline constexpr int kToyNeutral = 0;
inline constexpr int kToyEmotional = 1;
inline constexpr int kToyEngage = 0;
inline constexpr int kToyDisengage = 1;

struct ToyEnvConfig {
    double r0 = 1.0;                        // R(neutral, engage)
    double c1 = 1.0;                        // C(emotional, engage)
    double reward_emotional_engage = 0.0;   // remaining reward entries
    double reward_neutral_disengage = 0.0;
    double reward_emotional_disengage = 0.0;
    // P(next = emotional | state, action), indexed [state][action].
    std::array<std::array<double, 2>, 2> p_emotional{{{0.5, 0.5}, {0.5, 0.5}}};
    double discount = 0.95;
    double threshold_d = 1.0;
};

// Builds and validates the 2-state, 2-action CmdpSpec.
CmdpSpec toy_env_build(const ToyEnvConfig& config);

// CmdpEnv wired with the toy heuristic (engage when neutral, back off when
// emotional) and engage set {a_engage}; starts in the neutral state.
CmdpEnv make_toy_env(const ToyEnvConfig& config);

// ---------------------------------------------------------------------------
// Synthetic emotional-user environment: latent affect in [-1, +1] driven by
// action valence, noisy observations, engagement-history EWMA, and dual
// reward/cost feedback.
// ---------------------------------------------------------------------------

struct UserProfile {
    double severity = 0.3;        // in [0, 1]; shifts the initial affect down
    double responsiveness = 1.0;  // in (0, 2]; scales affect step size
};

struct EngagementHistory {
    double ewma_engagement = 0.0;  // in [0, 1]
    double decay = 0.8;            // in (0, 1)

    void update(bool engaged) {
        ewma_engagement = decay * ewma_engagement + (1.0 - decay) * (engaged ? 1.0 : 0.0);
    }
};

struct EmotionalState {
    double latent_e = 0.0;    // clamped to [-1, +1]
    double observed_o = 0.0;  // latent plus Gaussian noise, unclipped
};

struct ActionSpec {
    std::string name;
    int valence = 0;         // intended affective direction, in {-1, 0, +1}
    double intensity = 0.0;  // gates whether misaligned use triggers cost
    double payoff = 0.0;     // engagement payoff scale, in [0, 1]
    bool engaging = false;   // counts toward the engagement rate
};

// The fixed menu of five supportive interventions.
std::vector<ActionSpec> default_action_set();

struct SyntheticEnvConfig {
    double p_raise = 0.8;    // P(affect moves up | sensitive engagement)
    double p_lower = 0.7;    // P(affect moves down | disengage or misaligned)
    double env_noise = 0.05; // P(move direction randomized)
    double sigma_obs = 0.1;  // sensor noise std dev
    double step_size = 0.25; // base affect step, scaled by responsiveness
    double distress_threshold = -0.3;
    double cost_penalty = 1.0;
    double min_cost_intensity = 1.0;  // actions at/above this intensity can cost
    double initial_latent = 0.0;
    double severity_shift = 0.5;      // e0 = initial_latent - shift * severity
    double history_decay = 0.8;
    std::vector<ActionSpec> actions = default_action_set();
    std::vector<UserProfile> profiles = {{0.3, 1.0}};
    std::vector<double> profile_cutpoints = {0.5};  // quantize severity
    int horizon = 40;
    int e_bins = 4;
    int h_bins = 3;
    double discount = 0.95;
    double threshold_d = 1.0;
};

void validate_config(const SyntheticEnvConfig& config);

// The emotion-informed state [u, h, e] plus its discretized index.
struct UserState {
    UserProfile profile;
    EngagementHistory history;
    EmotionalState emotion;
    int index = 0;
};

// One affect transition. Sensitive engagement (valence +1 while not
// distressed) moves latent_e one step toward +1 with probability p_raise;
// disengaging, or engaging a distressed user, moves it toward -1 with
// probability p_lower; neutral actions leave it alone. Residual probability
// mass is no-change. With probability env_noise the move direction is
// replaced by a fair coin. Step size scales with profile responsiveness and
// the result is clamped to [-1, +1].
EmotionalState emotional_transition(const EmotionalState& e, int action,
                                    const UserProfile& profile,
                                    const SyntheticEnvConfig& config, Rng& rng);

// o = latent + N(0, sigma_obs^2).
double observe(const EmotionalState& e, double sigma_obs, Rng& rng);

// (r_eng, r_emo): engagement payoff scaled by readiness (1+e)/2, and the
// sign-agreement alignment score in {-1, 0, +1}.
std::pair<double, double> reward_signals(const UserState& state, int action,
                                         const SyntheticEnvConfig& config);

// Penalty when an emotionally engaging action (valence +1, intensity at or
// above min_cost_intensity) hits a user below the distress threshold.
double cost_signal(const UserState& state, int action, const SyntheticEnvConfig& config);

// Uniform binning of (profile severity, ewma, clamped observation) into a
// row-major index ordered [u][h][e]. Intervals are closed-lower/open-upper
// with the top interval closed, so exact cutpoint hits go to the upper bin.
int discretize_state(const UserProfile& profile, const EngagementHistory& history,
                     double observation, const SyntheticEnvConfig& config);

int state_space_size(const SyntheticEnvConfig& config);

// Number of profile levels induced by the severity cutpoints.
int profile_levels(const SyntheticEnvConfig& config);

// The rule the static heuristic baseline applies to an observed readiness:
// below the distress threshold back off, otherwise check in.
int heuristic_for_observation(double observed, const SyntheticEnvConfig& config);

class SyntheticEnv : public Environment {
  public:
    explicit SyntheticEnv(SyntheticEnvConfig config);

    int n_states() const override { return state_space_size(config_); }
    int n_actions() const override { return static_cast<int>(config_.actions.size()); }
    double discount() const override { return config_.discount; }
    double threshold_d() const override { return config_.threshold_d; }

    int reset(Rng& rng) override;
    EnvStep step(int action, Rng& rng) override;
    bool done() const override { return steps_taken_ >= config_.horizon; }

    int heuristic_action(int state) const override;
    std::vector<int> engaging_actions() const override;
    std::vector<int> action_valence() const override;

    const SyntheticEnvConfig& config() const { return config_; }
    const UserState& user_state() const { return current_; }

  private:
    SyntheticEnvConfig config_;
    UserState current_;
    int steps_taken_ = 0;
    bool started_ = false;
};

}  // namespace rrl
