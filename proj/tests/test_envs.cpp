#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "rrl/envs.hpp"
#include "rrl/oracle.hpp"
#include "support/reference.hpp"

using namespace rrl;

namespace {

SyntheticEnvConfig lattice_config() {
    // severity_shift 0 puts the latent walk on the exact +-0.25 lattice.
    SyntheticEnvConfig cfg;
    cfg.severity_shift = 0.0;
    cfg.sigma_obs = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("toy_env_build produces a valid symmetric spec") {
    ToyEnvConfig cfg;  // r0 = 1, c1 = 1, 0.5 transitions
    const CmdpSpec spec = toy_env_build(cfg);
    CHECK(spec.n_states == 2);
    CHECK(spec.n_actions == 2);
    CHECK(spec.reward.at(kToyNeutral, kToyEngage) == 1.0);
    CHECK(spec.cost.at(kToyEmotional, kToyEngage) == 1.0);
    CHECK(spec.cost.at(kToyNeutral, kToyEngage) == 0.0);
    CHECK(spec.transition.at(0, 0, 1) == 0.5);
}

TEST_CASE("toy_env_build rejects invalid configs") {
    ToyEnvConfig cfg;
    cfg.c1 = -1.0;
    CHECK_THROWS_AS(toy_env_build(cfg), ValidationError);
    ToyEnvConfig cfg2;
    cfg2.p_emotional[0][0] = 1.5;
    CHECK_THROWS_AS(toy_env_build(cfg2), ValidationError);
}

TEST_CASE("c1 = 0 makes the constraint vacuous") {
    ToyEnvConfig cfg;
    cfg.c1 = 0.0;
    cfg.reward_emotional_engage = 1.0;
    cfg.threshold_d = 0.25;
    const CmdpSpec spec = toy_env_build(cfg);
    const ConstrainedSolution constrained = constrained_optimum(spec);
    const auto table = enumerate_policies(spec);
    double best = table[0].value_reward;
    for (const auto& p : table) best = std::max(best, p.value_reward);
    CHECK(constrained.lambda_star == 0.0);
    CHECK(constrained.optimal_value == doctest::Approx(best).epsilon(1e-12));
    CHECK_FALSE(constrained.is_mixture());
}

TEST_CASE("toy specs validate for any in-range config (fuzz)") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        ToyEnvConfig cfg;
        cfg.r0 = rng.uniform_real(-2.0, 2.0);
        cfg.c1 = rng.uniform01() * 3.0;
        cfg.reward_emotional_engage = rng.uniform_real(-2.0, 2.0);
        cfg.reward_neutral_disengage = rng.uniform_real(-2.0, 2.0);
        cfg.reward_emotional_disengage = rng.uniform_real(-2.0, 2.0);
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) cfg.p_emotional[s][a] = rng.uniform01();
        cfg.discount = rng.uniform_real(0.05, 0.99);
        cfg.threshold_d = rng.uniform01() * 5.0;
        CHECK_NOTHROW(toy_env_build(cfg));
    }
}

TEST_CASE("emotional_transition moves strictly up under degenerate raising") {
    SyntheticEnvConfig cfg = lattice_config();
    cfg.p_raise = 1.0;
    cfg.env_noise = 0.0;
    Rng rng(5);
    EmotionalState e;  // latent 0
    const EmotionalState next = emotional_transition(e, 0 /*check_in*/, cfg.profiles[0], cfg, rng);
    CHECK(next.latent_e == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("emotional_transition clamps at the +1 boundary") {
    SyntheticEnvConfig cfg = lattice_config();
    cfg.p_raise = 1.0;
    cfg.env_noise = 0.0;
    Rng rng(6);
    EmotionalState e;
    e.latent_e = 1.0;
    const EmotionalState next = emotional_transition(e, 0, cfg.profiles[0], cfg, rng);
    CHECK(next.latent_e == 1.0);
}

TEST_CASE("latent stays in [-1, 1] under random action fuzz") {
    SyntheticEnvConfig cfg;
    Rng rng(7);
    EmotionalState e;
    for (int t = 0; t < 100000; ++t) {
        const int action = rng.uniform_int(static_cast<int>(cfg.actions.size()));
        e = emotional_transition(e, action, cfg.profiles[0], cfg, rng);
        REQUIRE(e.latent_e >= -1.0);
        REQUIRE(e.latent_e <= 1.0);
    }
}

TEST_CASE("long-run latent mean matches the discretized chain's stationary mean") {
    SyntheticEnvConfig cfg = lattice_config();
    cfg.p_raise = 0.8;
    cfg.p_lower = 0.7;
    cfg.env_noise = 0.05;
    cfg.horizon = 120000;
    // Engagement is sensitive everywhere (no distress band), so the latent
    // chain is unimodal and mixes fast; the distress rule would otherwise
    // make it bistable with a ~1e8-step metastable escape time.
    cfg.distress_threshold = -1.0;

    // Lattice 0 +- 0.25k clamped: 9 states from -1 to +1. Always check_in
    // (valence +1): sensitive when e >= distress threshold, lowering when
    // distressed. Build the exact kernel and power-iterate.
    const int n = 9;
    auto e_of = [](int i) { return -1.0 + 0.25 * i; };
    std::vector<std::vector<double>> chain(n, std::vector<double>(n, 0.0));
    const double eta = cfg.env_noise;
    for (int i = 0; i < n; ++i) {
        double p_up, p_down;
        if (e_of(i) >= cfg.distress_threshold) {
            p_up = (1.0 - eta) * cfg.p_raise + eta * 0.5;
            p_down = eta * 0.5;
        } else {
            p_down = (1.0 - eta) * cfg.p_lower + eta * 0.5;
            p_up = eta * 0.5;
        }
        const int up = std::min(n - 1, i + 1);
        const int down = std::max(0, i - 1);
        chain[i][up] += p_up;
        chain[i][down] += p_down;
        chain[i][i] += 1.0 - p_up - p_down;
    }
    const auto mu = ref::stationary_distribution(chain);
    double stationary_mean = 0.0;
    for (int i = 0; i < n; ++i) stationary_mean += mu[i] * e_of(i);

    SyntheticEnv env(cfg);
    Rng rng(404);
    env.reset(rng);
    double sum = 0.0;
    long count = 0;
    for (int t = 0; t < cfg.horizon; ++t) {
        const EnvStep s = env.step(0 /*check_in*/, rng);
        if (t >= 2000) {  // burn-in
            sum += s.latent_emotion;
            ++count;
        }
    }
    CHECK(std::abs(sum / count - stationary_mean) < 0.02);
}

TEST_CASE("observe: zero noise copies the latent") {
    Rng rng(8);
    EmotionalState e;
    e.latent_e = 0.37;
    CHECK(observe(e, 0.0, rng) == 0.37);
}

TEST_CASE("observe: sample mean and std track the configured noise") {
    Rng rng(9);
    EmotionalState e;
    e.latent_e = 0.5;
    const int n = 100000;
    std::vector<double> draws;
    draws.reserve(n);
    for (int i = 0; i < n; ++i) draws.push_back(observe(e, 0.1, rng));
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= n;
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= (n - 1);
    CHECK(std::abs(mean - 0.5) < 0.002);
    CHECK(std::abs(std::sqrt(var) - 0.1) < 0.005);
}

TEST_CASE("observe: fixed seed gives an identical noise sequence") {
    EmotionalState e;
    e.latent_e = -0.2;
    Rng a(1111), b(1111);
    for (int i = 0; i < 100; ++i) CHECK(observe(e, 0.3, a) == observe(e, 0.3, b));
}

TEST_CASE("reward_signals: alignment is the sign agreement") {
    SyntheticEnvConfig cfg;
    UserState state;
    state.emotion.latent_e = 0.5;
    CHECK(reward_signals(state, 0, cfg).second == 1.0);  // check_in, valence +1
    state.emotion.latent_e = -0.5;
    CHECK(reward_signals(state, 0, cfg).second == -1.0);
    CHECK(reward_signals(state, 2, cfg).second == 0.0);  // deliver_content, valence 0
    state.emotion.latent_e = 0.0;
    CHECK(reward_signals(state, 0, cfg).second == 0.0);  // zero latent sign
}

TEST_CASE("reward_signals: engagement payoff scales with readiness") {
    SyntheticEnvConfig cfg;
    UserState state;
    state.emotion.latent_e = 1.0;
    CHECK(reward_signals(state, 3, cfg).first == doctest::Approx(1.0));  // escalate payoff 1
    state.emotion.latent_e = -1.0;
    CHECK(reward_signals(state, 3, cfg).first == 0.0);
    state.emotion.latent_e = 0.0;
    CHECK(reward_signals(state, 1, cfg).first == doctest::Approx(0.4));  // 0.8 * 0.5
    CHECK(reward_signals(state, 4, cfg).first == 0.0);                   // disengage
}

TEST_CASE("r_eng stays in [0,1] and r_emo in {-1,0,1} (fuzz)") {
    SyntheticEnvConfig cfg;
    Rng rng(12);
    for (int trial = 0; trial < 20000; ++trial) {
        UserState state;
        state.emotion.latent_e = rng.uniform_real(-1.0, 1.0);
        const int action = rng.uniform_int(static_cast<int>(cfg.actions.size()));
        const auto [r_eng, r_emo] = reward_signals(state, action, cfg);
        REQUIRE(r_eng >= 0.0);
        REQUIRE(r_eng <= 1.0);
        REQUIRE((r_emo == -1.0 || r_emo == 0.0 || r_emo == 1.0));
    }
}

TEST_CASE("cost_signal fires only for intense engagement under distress") {
    SyntheticEnvConfig cfg;
    UserState state;
    state.emotion.latent_e = -0.9;
    CHECK(cost_signal(state, 0, cfg) == 1.0);  // check_in on a distressed user
    CHECK(cost_signal(state, 4, cfg) == 0.0);  // disengage never costs
    CHECK(cost_signal(state, 2, cfg) == 0.0);  // neutral content never costs
    state.emotion.latent_e = 0.2;
    CHECK(cost_signal(state, 0, cfg) == 0.0);  // above threshold

    SyntheticEnvConfig strict = cfg;
    strict.min_cost_intensity = 1.5;  // only escalate_support can cost now
    state.emotion.latent_e = -0.9;
    CHECK(cost_signal(state, 0, strict) == 0.0);
    CHECK(cost_signal(state, 3, strict) == 1.0);
}

TEST_CASE("cost_signal is nonnegative over the whole grid") {
    SyntheticEnvConfig cfg;
    for (double e = -1.0; e <= 1.0; e += 0.05) {
        for (std::size_t a = 0; a < cfg.actions.size(); ++a) {
            UserState state;
            state.emotion.latent_e = e;
            REQUIRE(cost_signal(state, static_cast<int>(a), cfg) >= 0.0);
        }
    }
}

TEST_CASE("engagement history ewma stays in [0,1]") {
    Rng rng(13);
    EngagementHistory h{0.0, 0.8};
    for (int t = 0; t < 10000; ++t) {
        h.update(rng.bernoulli(0.5));
        REQUIRE(h.ewma_engagement >= 0.0);
        REQUIRE(h.ewma_engagement <= 1.0);
    }
    EngagementHistory h2{0.0, 0.8};
    h2.update(true);
    CHECK(h2.ewma_engagement == doctest::Approx(0.2));
    h2.update(false);
    CHECK(h2.ewma_engagement == doctest::Approx(0.16));
}

TEST_CASE("discretize_state: bins and tie rule") {
    SyntheticEnvConfig cfg;
    cfg.e_bins = 2;
    cfg.h_bins = 2;
    UserProfile p;
    p.severity = 0.2;
    EngagementHistory h{0.0, 0.8};
    CHECK(discretize_state(p, h, -0.3, cfg) % cfg.e_bins == 0);  // lower e-bin
    CHECK(discretize_state(p, h, 0.0, cfg) % cfg.e_bins == 1);   // cutpoint -> upper
    CHECK(discretize_state(p, h, 1.0, cfg) % cfg.e_bins == 1);   // top interval closed
    CHECK(discretize_state(p, h, 5.0, cfg) % cfg.e_bins == 1);   // clamped

    UserProfile on_cut;
    on_cut.severity = 0.5;  // exactly the cutpoint -> upper level
    const int idx = discretize_state(on_cut, h, -1.0, cfg);
    CHECK(idx / (cfg.e_bins * cfg.h_bins) == 1);
}

TEST_CASE("discretize_state covers a 3x3x2 grid exactly once") {
    SyntheticEnvConfig cfg;
    cfg.e_bins = 3;
    cfg.h_bins = 3;
    cfg.profile_cutpoints = {0.5};
    CHECK(state_space_size(cfg) == 18);

    std::set<int> seen;
    for (double severity : {0.25, 0.75}) {
        for (int hb = 0; hb < 3; ++hb) {
            for (int eb = 0; eb < 3; ++eb) {
                UserProfile p;
                p.severity = severity;
                EngagementHistory h{(hb + 0.5) / 3.0, 0.8};
                const double obs = -1.0 + 2.0 * (eb + 0.5) / 3.0;
                seen.insert(discretize_state(p, h, obs, cfg));
            }
        }
    }
    CHECK(seen.size() == 18);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 17);
}

TEST_CASE("env_step: horizon termination and stepping-after-done error") {
    SyntheticEnvConfig cfg;
    cfg.horizon = 3;
    SyntheticEnv env(cfg);
    Rng rng(14);
    env.reset(rng);
    env.step(0, rng);
    env.step(1, rng);
    const EnvStep last = env.step(2, rng);
    CHECK(last.done);
    CHECK(env.done());
    CHECK_THROWS_AS(env.step(0, rng), ValidationError);
}

TEST_CASE("noiseless env_step is a deterministic function of config") {
    SyntheticEnvConfig cfg = lattice_config();
    cfg.p_raise = 1.0;
    cfg.p_lower = 1.0;
    cfg.env_noise = 0.0;
    cfg.sigma_obs = 0.0;
    cfg.horizon = 6;

    SyntheticEnv env(cfg);
    Rng rng(15);
    env.reset(rng);
    // check_in from e=0 raises by 0.25 each step: 0, .25, .5, .75, 1.0, 1.0
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0, 1.0};
    for (int t = 0; t < 6; ++t) {
        const EnvStep s = env.step(0, rng);
        CHECK(s.latent_emotion == doctest::Approx(expected[t]).epsilon(1e-12));
        CHECK(s.observation == doctest::Approx(expected[t]).epsilon(1e-12));
    }
}

TEST_CASE("env_step statistics match the straight-line reference simulator") {
    SyntheticEnvConfig cfg;  // defaults
    const int episodes = 2000;  // 80k steps

    SyntheticEnv env(cfg);
    const int n_actions = env.n_actions();
    const AgentFn random_agent = [n_actions](int, Rng& r) { return r.uniform_int(n_actions); };

    // Shared per-episode seeds: the two independently written simulators must
    // agree on every draw, so the aggregate costs match bit-for-bit.
    double env_eng = 0.0, env_cost = 0.0, ref_cost_paired = 0.0;
    for (int i = 0; i < episodes; ++i) {
        const std::uint64_t seed = derive_seed(60000, i);
        const Episode ep = rollout(env, random_agent, cfg.horizon, seed);
        int engaged = 0;
        for (const EnvStep& s : ep.steps)
            if (cfg.actions[s.transition.action].engaging) ++engaged;
        env_eng += static_cast<double>(engaged) / cfg.horizon;
        env_cost += discounted_cost(ep.trajectory, 1.0);
        ref_cost_paired += ref::ref_synthetic_episode(cfg, seed).undiscounted_cost;
    }
    env_eng /= episodes;
    env_cost /= episodes;
    ref_cost_paired /= episodes;
    CHECK(env_cost == doctest::Approx(ref_cost_paired).epsilon(1e-12));

    // Independent seed stream: statistical agreement of the engagement rate.
    double ref_eng = 0.0;
    for (int i = 0; i < episodes; ++i)
        ref_eng += ref::ref_synthetic_episode(cfg, derive_seed(50000, i)).engagement_rate;
    ref_eng /= episodes;
    CHECK(std::abs(env_eng - ref_eng) < 0.01);
}

TEST_CASE("heuristic_action thresholds the binned observation") {
    SyntheticEnvConfig cfg;  // e_bins=4: midpoints -0.75, -0.25, 0.25, 0.75
    SyntheticEnv env(cfg);
    CHECK(env.heuristic_action(0) == 4);  // -0.75 < -0.3 -> disengage_wait
    CHECK(env.heuristic_action(1) == 0);  // -0.25 >= -0.3 -> check_in
    CHECK(env.heuristic_action(2) == 0);
    CHECK(env.heuristic_action(3) == 0);
}

TEST_CASE("synthetic config validation rejects out-of-range values") {
    SyntheticEnvConfig cfg;
    cfg.p_raise = 1.5;
    CHECK_THROWS_AS(validate_config(cfg), ValidationError);
    SyntheticEnvConfig cfg2;
    cfg2.e_bins = 1;
    CHECK_THROWS_AS(validate_config(cfg2), ValidationError);
    SyntheticEnvConfig cfg3;
    cfg3.profiles = {{1.4, 1.0}};
    CHECK_THROWS_AS(validate_config(cfg3), ValidationError);
}
