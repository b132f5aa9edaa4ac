#include "rrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace rrl {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* a) { return key == a; }) == allowed.end())
            throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

json weights_json(const CompositeWeights& w) {
    return {{"w_eng", w.w_eng}, {"w_emo", w.w_emo}, {"w_safety", w.w_safety}};
}

CompositeWeights parse_weights(const json& j) {
    check_keys(j, {"w_eng", "w_emo", "w_safety"}, "weights");
    CompositeWeights w;
    w.w_eng = j.value("w_eng", w.w_eng);
    w.w_emo = j.value("w_emo", w.w_emo);
    w.w_safety = j.value("w_safety", w.w_safety);
    if (w.w_eng < 0.0 || w.w_emo < 0.0 || w.w_safety < 0.0)
        throw ValidationError("composite weights must be nonnegative");
    if (w.w_eng == 0.0 && w.w_emo == 0.0 && w.w_safety == 0.0)
        throw ValidationError("at least one composite weight must be positive");
    return w;
}

json toy_json(const ToyEnvConfig& c) {
    return {{"kind", "toy"},
            {"r0", c.r0},
            {"c1", c.c1},
            {"reward_emotional_engage", c.reward_emotional_engage},
            {"reward_neutral_disengage", c.reward_neutral_disengage},
            {"reward_emotional_disengage", c.reward_emotional_disengage},
            {"p_emotional",
             {{c.p_emotional[0][0], c.p_emotional[0][1]},
              {c.p_emotional[1][0], c.p_emotional[1][1]}}},
            {"discount", c.discount},
            {"threshold_d", c.threshold_d}};
}

ToyEnvConfig parse_toy(const json& j) {
    check_keys(j,
               {"kind", "r0", "c1", "reward_emotional_engage", "reward_neutral_disengage",
                "reward_emotional_disengage", "p_emotional", "discount", "threshold_d"},
               "environment (toy)");
    ToyEnvConfig c;
    c.r0 = j.value("r0", c.r0);
    c.c1 = j.value("c1", c.c1);
    c.reward_emotional_engage = j.value("reward_emotional_engage", c.reward_emotional_engage);
    c.reward_neutral_disengage = j.value("reward_neutral_disengage", c.reward_neutral_disengage);
    c.reward_emotional_disengage =
        j.value("reward_emotional_disengage", c.reward_emotional_disengage);
    if (j.contains("p_emotional")) {
        const json& p = j.at("p_emotional");
        if (!p.is_array() || p.size() != 2 || !p[0].is_array() || p[0].size() != 2 ||
            p[1].size() != 2)
            throw ValidationError("p_emotional must be a 2x2 array [state][action]");
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) c.p_emotional[s][a] = p[s][a].get<double>();
    }
    c.discount = j.value("discount", c.discount);
    c.threshold_d = j.value("threshold_d", c.threshold_d);
    return c;
}

json action_json(const ActionSpec& a) {
    return {{"name", a.name},
            {"valence", a.valence},
            {"intensity", a.intensity},
            {"payoff", a.payoff},
            {"engaging", a.engaging}};
}

ActionSpec parse_action(const json& j) {
    check_keys(j, {"name", "valence", "intensity", "payoff", "engaging"}, "action");
    ActionSpec a;
    a.name = j.value("name", a.name);
    a.valence = j.value("valence", a.valence);
    a.intensity = j.value("intensity", a.intensity);
    a.payoff = j.value("payoff", a.payoff);
    a.engaging = j.value("engaging", a.engaging);
    return a;
}

json profile_json(const UserProfile& p) {
    return {{"severity", p.severity}, {"responsiveness", p.responsiveness}};
}

UserProfile parse_profile(const json& j) {
    check_keys(j, {"severity", "responsiveness"}, "profile");
    UserProfile p;
    p.severity = j.value("severity", p.severity);
    p.responsiveness = j.value("responsiveness", p.responsiveness);
    return p;
}

json synthetic_json(const SyntheticEnvConfig& c) {
    json actions = json::array();
    for (const ActionSpec& a : c.actions) actions.push_back(action_json(a));
    json profiles = json::array();
    for (const UserProfile& p : c.profiles) profiles.push_back(profile_json(p));
    return {{"kind", "synthetic"},
            {"p_raise", c.p_raise},
            {"p_lower", c.p_lower},
            {"env_noise", c.env_noise},
            {"sigma_obs", c.sigma_obs},
            {"step_size", c.step_size},
            {"distress_threshold", c.distress_threshold},
            {"cost_penalty", c.cost_penalty},
            {"min_cost_intensity", c.min_cost_intensity},
            {"initial_latent", c.initial_latent},
            {"severity_shift", c.severity_shift},
            {"history_decay", c.history_decay},
            {"actions", actions},
            {"profiles", profiles},
            {"profile_cutpoints", c.profile_cutpoints},
            {"horizon", c.horizon},
            {"e_bins", c.e_bins},
            {"h_bins", c.h_bins},
            {"discount", c.discount},
            {"threshold_d", c.threshold_d}};
}

SyntheticEnvConfig parse_synthetic(const json& j) {
    check_keys(j,
               {"kind", "p_raise", "p_lower", "env_noise", "sigma_obs", "step_size",
                "distress_threshold", "cost_penalty", "min_cost_intensity", "initial_latent",
                "severity_shift", "history_decay", "actions", "profiles", "profile_cutpoints",
                "horizon", "e_bins", "h_bins", "discount", "threshold_d"},
               "environment (synthetic)");
    SyntheticEnvConfig c;
    c.p_raise = j.value("p_raise", c.p_raise);
    c.p_lower = j.value("p_lower", c.p_lower);
    c.env_noise = j.value("env_noise", c.env_noise);
    c.sigma_obs = j.value("sigma_obs", c.sigma_obs);
    c.step_size = j.value("step_size", c.step_size);
    c.distress_threshold = j.value("distress_threshold", c.distress_threshold);
    c.cost_penalty = j.value("cost_penalty", c.cost_penalty);
    c.min_cost_intensity = j.value("min_cost_intensity", c.min_cost_intensity);
    c.initial_latent = j.value("initial_latent", c.initial_latent);
    c.severity_shift = j.value("severity_shift", c.severity_shift);
    c.history_decay = j.value("history_decay", c.history_decay);
    if (j.contains("actions")) {
        c.actions.clear();
        for (const json& a : j.at("actions")) c.actions.push_back(parse_action(a));
    }
    if (j.contains("profiles")) {
        c.profiles.clear();
        for (const json& p : j.at("profiles")) c.profiles.push_back(parse_profile(p));
    }
    if (j.contains("profile_cutpoints"))
        c.profile_cutpoints = j.at("profile_cutpoints").get<std::vector<double>>();
    c.horizon = j.value("horizon", c.horizon);
    c.e_bins = j.value("e_bins", c.e_bins);
    c.h_bins = j.value("h_bins", c.h_bins);
    c.discount = j.value("discount", c.discount);
    c.threshold_d = j.value("threshold_d", c.threshold_d);
    validate_config(c);
    return c;
}

json cmdp_env_json(const RawCmdpConfig& c) {
    const CmdpSpec& spec = c.spec;
    json transition = json::array(), reward = json::array(), cost = json::array();
    for (int s = 0; s < spec.n_states; ++s) {
        json t_rows = json::array(), r_row = json::array(), c_row = json::array();
        for (int a = 0; a < spec.n_actions; ++a) {
            json t_row = json::array();
            for (int t = 0; t < spec.n_states; ++t) t_row.push_back(spec.transition.at(s, a, t));
            t_rows.push_back(t_row);
            r_row.push_back(spec.reward.at(s, a));
            c_row.push_back(spec.cost.at(s, a));
        }
        transition.push_back(t_rows);
        reward.push_back(r_row);
        cost.push_back(c_row);
    }
    return {{"kind", "cmdp"},
            {"transition", transition},
            {"reward", reward},
            {"cost", cost},
            {"discount", spec.discount},
            {"threshold_d", spec.threshold_d},
            {"start_distribution", c.start_distribution},
            {"heuristic_actions", c.heuristic_actions},
            {"engage_actions", c.engage_actions}};
}

RawCmdpConfig parse_cmdp_env(const json& j) {
    check_keys(j,
               {"kind", "transition", "reward", "cost", "discount", "threshold_d",
                "start_distribution", "heuristic_actions", "engage_actions"},
               "environment (cmdp)");
    RawCmdpConfig c;
    CmdpSpec& spec = c.spec;
    const json& transition = j.at("transition");
    spec.n_states = static_cast<int>(transition.size());
    if (spec.n_states < 1) throw ValidationError("cmdp transition tensor is empty");
    spec.n_actions = static_cast<int>(transition[0].size());
    spec.transition = Tensor3(spec.n_states, spec.n_actions, spec.n_states, 0.0);
    spec.reward = Matrix(spec.n_states, spec.n_actions, 0.0);
    spec.cost = Matrix(spec.n_states, spec.n_actions, 0.0);
    const json& reward = j.at("reward");
    const json& cost = j.at("cost");
    for (int s = 0; s < spec.n_states; ++s) {
        if (static_cast<int>(transition[s].size()) != spec.n_actions)
            throw ValidationError("cmdp transition row s=" + std::to_string(s) +
                                  " has inconsistent action count");
        for (int a = 0; a < spec.n_actions; ++a) {
            if (static_cast<int>(transition[s][a].size()) != spec.n_states)
                throw ValidationError("cmdp transition row (" + std::to_string(s) + "," +
                                      std::to_string(a) + ") has wrong length");
            for (int t = 0; t < spec.n_states; ++t)
                spec.transition.at(s, a, t) = transition[s][a][t].get<double>();
            spec.reward.at(s, a) = reward.at(s).at(a).get<double>();
            spec.cost.at(s, a) = cost.at(s).at(a).get<double>();
        }
    }
    spec.discount = j.value("discount", 0.95);
    spec.threshold_d = j.value("threshold_d", 0.0);
    validate_cmdp(spec);

    if (j.contains("start_distribution"))
        c.start_distribution = j.at("start_distribution").get<std::vector<double>>();
    if (c.start_distribution.empty()) {
        c.start_distribution.assign(spec.n_states, 0.0);
        c.start_distribution[0] = 1.0;
    }
    if (j.contains("heuristic_actions"))
        c.heuristic_actions = j.at("heuristic_actions").get<std::vector<int>>();
    if (c.heuristic_actions.empty()) c.heuristic_actions.assign(spec.n_states, 0);
    if (j.contains("engage_actions"))
        c.engage_actions = j.at("engage_actions").get<std::vector<int>>();
    if (c.engage_actions.empty()) c.engage_actions = {0};
    return c;
}

json agent_json(const AgentParams& a) {
    return {{"kind", a.kind},
            {"weights", weights_json(a.weights)},
            {"lambda0", a.lambda0},
            {"dual_step_size", a.dual_step_size},
            {"iterations", a.iterations},
            {"batch_size", a.batch_size},
            {"learning_rate", a.learning_rate},
            {"epsilon_start", a.epsilon_start},
            {"epsilon_end", a.epsilon_end}};
}

AgentParams parse_agent(const json& j) {
    check_keys(j,
               {"kind", "weights", "lambda0", "dual_step_size", "iterations", "batch_size",
                "learning_rate", "epsilon_start", "epsilon_end"},
               "agent");
    AgentParams a;
    a.kind = j.value("kind", a.kind);
    const bool known = a.kind == "rrl" || a.kind == "engagement_only" ||
                       a.kind == "penalty_shaped" || a.kind == "rule_based";
    if (!known) throw ValidationError("unknown agent kind '" + a.kind + "'");
    if (j.contains("weights")) a.weights = parse_weights(j.at("weights"));
    a.lambda0 = j.value("lambda0", a.lambda0);
    a.dual_step_size = j.value("dual_step_size", a.dual_step_size);
    a.iterations = j.value("iterations", a.iterations);
    a.batch_size = j.value("batch_size", a.batch_size);
    a.learning_rate = j.value("learning_rate", a.learning_rate);
    a.epsilon_start = j.value("epsilon_start", a.epsilon_start);
    a.epsilon_end = j.value("epsilon_end", a.epsilon_end);
    if (a.lambda0 < 0.0) throw ValidationError("lambda0 must be >= 0");
    if (!(a.dual_step_size > 0.0)) throw ValidationError("dual_step_size must be positive");
    if (a.iterations < 1) throw ValidationError("iterations must be >= 1");
    if (a.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(a.learning_rate > 0.0 && a.learning_rate <= 1.0))
        throw ValidationError("learning_rate out of range (0,1]");
    if (a.epsilon_start < 0.0 || a.epsilon_start > 1.0 || a.epsilon_end < 0.0 ||
        a.epsilon_end > a.epsilon_start)
        throw ValidationError("epsilon schedule requires 0 <= epsilon_end <= epsilon_start <= 1");
    return a;
}

std::string format_double(double x) { return json(x).dump(); }

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
    check_keys(j,
               {"version", "name", "environment", "agent", "horizon", "seeds", "sweep",
                "evaluation", "gates", "output_dir"},
               "experiment config");
    ExperimentConfig c;
    c.version = j.value("version", 0);
    if (c.version != 1) throw ValidationError("unsupported config version (expected 1)");
    c.name = j.value("name", c.name);

    if (!j.contains("environment")) throw ValidationError("missing 'environment' section");
    const json& env = j.at("environment");
    c.env_kind = env.value("kind", "toy");
    if (c.env_kind == "toy")
        c.toy = parse_toy(env);
    else if (c.env_kind == "synthetic")
        c.synthetic = parse_synthetic(env);
    else if (c.env_kind == "cmdp")
        c.raw_cmdp = parse_cmdp_env(env);
    else
        throw ValidationError("unknown environment kind '" + c.env_kind + "'");

    if (j.contains("agent")) c.agent = parse_agent(j.at("agent"));
    c.horizon = j.value("horizon", c.horizon);
    if (c.horizon < 1) throw ValidationError("horizon must be >= 1");

    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw ValidationError("need at least one seed");

    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const json& sj = j.at("sweep");
        check_keys(sj, {"threshold_d", "weights"}, "sweep");
        SweepSpec sweep;
        if (sj.contains("threshold_d"))
            sweep.threshold_d = sj.at("threshold_d").get<std::vector<double>>();
        if (sj.contains("weights"))
            for (const json& w : sj.at("weights")) sweep.weights.push_back(parse_weights(w));
        if (sweep.threshold_d.empty() && sweep.weights.empty())
            throw ValidationError("sweep present but both grids are empty");
        c.sweep = sweep;
    }

    if (j.contains("evaluation")) {
        check_keys(j.at("evaluation"), {"episodes"}, "evaluation");
        c.eval_episodes = j.at("evaluation").value("episodes", c.eval_episodes);
    }
    if (c.eval_episodes < 1) throw ValidationError("evaluation.episodes must be >= 1");

    if (j.contains("gates")) {
        const json& g = j.at("gates");
        check_keys(g, {"max_rrl_cost_slack", "min_violation_gap"}, "gates");
        if (g.contains("max_rrl_cost_slack"))
            c.gates.max_rrl_cost_slack = g.at("max_rrl_cost_slack").get<double>();
        if (g.contains("min_violation_gap"))
            c.gates.min_violation_gap = g.at("min_violation_gap").get<double>();
    }

    c.output_dir = j.value("output_dir", c.output_dir);

    // Environment configs validate on construction.
    if (c.env_kind == "toy") toy_env_build(c.toy);
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError("config parse error in " + path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

json experiment_config_json(const ExperimentConfig& config) {
    json env = config.env_kind == "toy"
                   ? toy_json(config.toy)
                   : (config.env_kind == "synthetic" ? synthetic_json(config.synthetic)
                                                     : cmdp_env_json(config.raw_cmdp));
    json sweep = nullptr;
    if (config.sweep) {
        json wlist = json::array();
        for (const CompositeWeights& w : config.sweep->weights) wlist.push_back(weights_json(w));
        sweep = {{"threshold_d", config.sweep->threshold_d}, {"weights", wlist}};
    }
    return {{"version", config.version},
            {"name", config.name},
            {"environment", env},
            {"agent", agent_json(config.agent)},
            {"horizon", config.horizon},
            {"seeds", config.seeds},
            {"sweep", sweep},
            {"evaluation", {{"episodes", config.eval_episodes}}}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (const char ch : bytes) {
        hash ^= static_cast<unsigned char>(ch);
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::string config_fingerprint(const ExperimentConfig& config) {
    const std::string canonical = experiment_config_json(config).dump();
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a64(canonical);
    return os.str();
}

std::string SweepCell::label() const {
    // Labels land in unquoted CSV columns, so they must stay comma-free.
    if (!threshold_d && !weights) return "base";
    std::ostringstream os;
    if (threshold_d) os << "d=" << format_double(*threshold_d);
    if (weights) {
        if (threshold_d) os << "|";
        os << "w=(" << format_double(weights->w_eng) << ";" << format_double(weights->w_emo)
           << ";" << format_double(weights->w_safety) << ")";
    }
    return os.str();
}

json SweepCell::to_json() const {
    json j{{"index", index}, {"label", label()}};
    if (threshold_d) j["threshold_d"] = *threshold_d;
    if (weights) j["weights"] = weights_json(*weights);
    return j;
}

std::vector<SweepCell> expand_sweep(const ExperimentConfig& config) {
    std::vector<SweepCell> cells;
    if (!config.sweep) {
        cells.push_back(SweepCell{});
        return cells;
    }
    std::vector<std::optional<double>> ds;
    if (config.sweep->threshold_d.empty())
        ds.push_back(std::nullopt);
    else
        for (double d : config.sweep->threshold_d) ds.emplace_back(d);
    std::vector<std::optional<CompositeWeights>> ws;
    if (config.sweep->weights.empty())
        ws.push_back(std::nullopt);
    else
        for (const CompositeWeights& w : config.sweep->weights) ws.emplace_back(w);

    int index = 0;
    for (const auto& d : ds)
        for (const auto& w : ws) cells.push_back(SweepCell{index++, d, w});
    return cells;
}

ExperimentConfig apply_cell(ExperimentConfig config, const SweepCell& cell) {
    if (cell.threshold_d) {
        if (config.env_kind == "toy")
            config.toy.threshold_d = *cell.threshold_d;
        else if (config.env_kind == "synthetic")
            config.synthetic.threshold_d = *cell.threshold_d;
        else
            config.raw_cmdp.spec.threshold_d = *cell.threshold_d;
    }
    if (cell.weights) config.agent.weights = *cell.weights;
    config.sweep.reset();  // the cell-resolved config is sweep-free
    return config;
}

std::unique_ptr<Environment> build_environment(const ExperimentConfig& config) {
    if (config.env_kind == "toy") return std::make_unique<CmdpEnv>(make_toy_env(config.toy));
    if (config.env_kind == "cmdp")
        return std::make_unique<CmdpEnv>(config.raw_cmdp.spec, config.raw_cmdp.start_distribution,
                                         config.raw_cmdp.heuristic_actions,
                                         config.raw_cmdp.engage_actions);
    return std::make_unique<SyntheticEnv>(config.synthetic);
}

namespace {

json train_report_json(const TrainReport& report) {
    std::vector<int> actions;
    const Matrix& probs = report.final_policy.action_probabilities;
    for (int s = 0; s < probs.rows; ++s) actions.push_back(report.final_policy.greedy_action(s));
    return {{"mean_return", report.mean_return},
            {"mean_cost", report.mean_cost},
            {"lambda", report.lambda},
            {"violation", report.violation},
            {"final_policy", actions},
            {"n_actions", probs.cols},
            {"final_lambda", report.final_lambda}};
}

TrainReport parse_train_report(const json& j) {
    TrainReport report;
    report.mean_return = j.at("mean_return").get<std::vector<double>>();
    report.mean_cost = j.at("mean_cost").get<std::vector<double>>();
    report.lambda = j.at("lambda").get<std::vector<double>>();
    report.violation = j.at("violation").get<std::vector<int>>();
    const auto actions = j.at("final_policy").get<std::vector<int>>();
    report.final_policy = StationaryPolicy::deterministic(actions, j.at("n_actions").get<int>());
    report.final_lambda = j.at("final_lambda").get<double>();
    return report;
}

json metric_report_json(const MetricReport& m) {
    json j{{"engagement_rate", m.engagement_rate},
           {"emotional_alignment", m.emotional_alignment},
           {"safety_cost", m.safety_cost},
           {"violation_probability", m.violation_probability},
           {"mean_return", m.mean_return},
           {"n_episodes", m.n_episodes},
           {"safety_cost_mode",
            m.safety_cost_mode == CostMode::discounted ? "discounted" : "undiscounted"},
           {"halfwidth", nullptr}};
    if (m.halfwidth) {
        j["halfwidth"] = {{"engagement_rate", m.halfwidth->engagement_rate},
                          {"emotional_alignment", m.halfwidth->emotional_alignment},
                          {"safety_cost", m.halfwidth->safety_cost},
                          {"violation_probability", m.halfwidth->violation_probability},
                          {"mean_return", m.halfwidth->mean_return}};
    }
    return j;
}

MetricReport parse_metric_report(const json& j) {
    MetricReport m;
    m.engagement_rate = j.at("engagement_rate").get<double>();
    m.emotional_alignment = j.at("emotional_alignment").get<double>();
    m.safety_cost = j.at("safety_cost").get<double>();
    m.violation_probability = j.at("violation_probability").get<double>();
    m.mean_return = j.at("mean_return").get<double>();
    m.n_episodes = j.at("n_episodes").get<int>();
    m.safety_cost_mode = j.at("safety_cost_mode").get<std::string>() == "undiscounted"
                             ? CostMode::undiscounted
                             : CostMode::discounted;
    if (j.contains("halfwidth") && !j.at("halfwidth").is_null()) {
        const json& h = j.at("halfwidth");
        MetricHalfwidths hw;
        hw.engagement_rate = h.at("engagement_rate").get<double>();
        hw.emotional_alignment = h.at("emotional_alignment").get<double>();
        hw.safety_cost = h.at("safety_cost").get<double>();
        hw.violation_probability = h.at("violation_probability").get<double>();
        hw.mean_return = h.at("mean_return").get<double>();
        m.halfwidth = hw;
    }
    return m;
}

}  // namespace

json run_record_json(const RunRecord& record) {
    return {{"format_version", record.format_version},
            {"fingerprint", record.fingerprint},
            {"seed", record.seed},
            {"agent", record.agent},
            {"cell", record.cell},
            {"train", train_report_json(record.train)},
            {"metrics", metric_report_json(record.metrics)},
            {"wall_clock_seconds", record.wall_clock_seconds},
            {"config", record.config}};
}

RunRecord parse_run_record(const json& j) {
    RunRecord record;
    record.format_version = j.at("format_version").get<int>();
    record.fingerprint = j.at("fingerprint").get<std::string>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.agent = j.at("agent").get<std::string>();
    record.cell = j.at("cell");
    record.train = parse_train_report(j.at("train"));
    record.metrics = parse_metric_report(j.at("metrics"));
    record.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    record.config = j.at("config");
    return record;
}

bool verify_fingerprint(const RunRecord& record) {
    const ExperimentConfig config = parse_experiment_config(record.config);
    return config_fingerprint(config) == record.fingerprint;
}

MetricReport evaluate_policy(Environment& env, const StationaryPolicy& policy, int episodes,
                             std::uint64_t run_seed, int horizon) {
    const std::uint64_t eval_base = derive_seed(run_seed, kStreamEval);
    std::vector<Trajectory> trajectories;
    trajectories.reserve(episodes);
    const std::vector<int> engage = env.engaging_actions();
    const std::vector<int> valence = env.action_valence();

    double sum_engagement = 0.0, sum_alignment = 0.0, sum_return = 0.0;
    for (int i = 0; i < episodes; ++i) {
        Episode ep = rollout(env, policy, horizon, derive_seed(eval_base, i));
        sum_engagement += engagement_rate(ep.trajectory, engage);
        sum_alignment += emotional_alignment(ep, valence);
        sum_return += discounted_return(ep.trajectory, env.discount());
        trajectories.push_back(std::move(ep.trajectory));
    }

    MetricReport m;
    m.engagement_rate = sum_engagement / episodes;
    m.emotional_alignment = sum_alignment / episodes;
    m.safety_cost = safety_cost(trajectories, env.discount(), CostMode::discounted);
    m.violation_probability =
        violation_probability(trajectories, env.discount(), env.threshold_d());
    m.mean_return = sum_return / episodes;
    m.n_episodes = episodes;
    m.safety_cost_mode = CostMode::discounted;
    return m;
}

RunRecord run_unit(const ExperimentConfig& cell_config, const SweepCell& cell,
                   std::uint64_t seed, const std::string& fingerprint) {
    const auto t0 = std::chrono::steady_clock::now();
    auto env = build_environment(cell_config);

    TrainConfig tc;
    tc.weights = cell_config.agent.weights;
    tc.lagrange = LagrangeState{cell_config.agent.lambda0, cell_config.agent.dual_step_size,
                                env->threshold_d()};
    tc.iterations = cell_config.agent.iterations;
    tc.batch_size = cell_config.agent.batch_size;
    tc.horizon = cell_config.horizon;
    tc.learning_rate = cell_config.agent.learning_rate;
    tc.epsilon_start = cell_config.agent.epsilon_start;
    tc.epsilon_end = cell_config.agent.epsilon_end;
    tc.seed = seed;

    RunRecord record;
    record.agent = cell_config.agent.kind;
    if (cell_config.agent.kind == "rrl") {
        record.train = train_rrl(*env, tc);
    } else if (cell_config.agent.kind == "engagement_only") {
        record.train = train_baseline(*env, BaselineVariant::engagement_only, tc);
    } else if (cell_config.agent.kind == "penalty_shaped") {
        record.train = train_baseline(*env, BaselineVariant::penalty_shaped, tc);
    } else if (cell_config.agent.kind == "rule_based") {
        record.train.final_policy = rule_based_stationary(*env);
        record.train.critic = DualCritic(env->n_states(), env->n_actions(), 0.0);
    } else {
        throw ValidationError("unknown agent kind '" + cell_config.agent.kind + "'");
    }

    record.metrics = evaluate_policy(*env, record.train.final_policy, cell_config.eval_episodes,
                                     seed, cell_config.horizon);
    record.fingerprint = fingerprint;
    record.seed = seed;
    record.cell = cell.to_json();
    record.config = experiment_config_json(cell_config);
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, int workers) {
    const std::vector<SweepCell> cells = expand_sweep(config);

    struct Unit {
        int cell;
        int seed_idx;
    };
    std::vector<Unit> units;
    for (int c = 0; c < static_cast<int>(cells.size()); ++c)
        for (int s = 0; s < static_cast<int>(config.seeds.size()); ++s)
            units.push_back(Unit{c, s});

    // Cell-resolved configs and their fingerprints, computed up front so the
    // workers share nothing mutable.
    std::vector<ExperimentConfig> cell_configs;
    std::vector<std::string> fingerprints;
    for (const SweepCell& cell : cells) {
        cell_configs.push_back(apply_cell(config, cell));
        fingerprints.push_back(config_fingerprint(cell_configs.back()));
    }

    std::vector<RunRecord> records(units.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= units.size()) return;
            try {
                const Unit& u = units[i];
                records[i] = run_unit(cell_configs[u.cell], cells[u.cell],
                                      config.seeds[u.seed_idx], fingerprints[u.cell]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return records;
}

std::vector<FrontierRow> frontier_rows(const std::vector<RunRecord>& records) {
    // Group by cell index, preserving cell order.
    std::vector<int> order;
    for (const RunRecord& r : records) {
        const int idx = r.cell.at("index").get<int>();
        if (std::find(order.begin(), order.end(), idx) == order.end()) order.push_back(idx);
    }

    std::vector<FrontierRow> rows;
    for (const int idx : order) {
        FrontierRow row;
        std::vector<MetricReport> reports;
        for (const RunRecord& r : records) {
            if (r.cell.at("index").get<int>() != idx) continue;
            reports.push_back(r.metrics);
            row.cell = r.cell;
        }
        row.label = row.cell.at("label").get<std::string>();
        row.metrics = aggregate(reports);
        rows.push_back(std::move(row));
    }

    // Index the swept set on the maximization triple (engagement, alignment,
    // -safety); reference = componentwise worst minus a 5% margin.
    std::vector<std::array<double, 3>> points;
    for (const FrontierRow& row : rows)
        points.push_back({row.metrics.engagement_rate, row.metrics.emotional_alignment,
                          -row.metrics.safety_cost});
    std::array<double, 3> worst = points.front();
    std::array<double, 3> best = points.front();
    for (const auto& p : points)
        for (int k = 0; k < 3; ++k) {
            worst[k] = std::min(worst[k], p[k]);
            best[k] = std::max(best[k], p[k]);
        }
    std::array<double, 3> ref;
    for (int k = 0; k < 3; ++k) {
        const double range = best[k] - worst[k];
        const double margin = 0.05 * (range > 0.0 ? range : std::max(1.0, std::abs(worst[k])));
        ref[k] = worst[k] - margin;
    }
    const std::vector<double> index = pareto_index(points, ref);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].pareto_index = index[i];
    return rows;
}

std::vector<FrontierRow> frontier_sweep(const ExperimentConfig& config, int workers,
                                        std::vector<RunRecord>* records_out) {
    if (!config.sweep) throw ValidationError("frontier sweep requires a 'sweep' section");
    std::vector<RunRecord> records = run_experiment(config, workers);
    auto rows = frontier_rows(records);
    if (records_out) *records_out = std::move(records);
    return rows;
}

ComparisonTable compare_baselines(const ExperimentConfig& config, int workers) {
    if (config.sweep) throw ValidationError("compare does not take a sweep");
    static const char* kAgents[] = {"rule_based", "engagement_only", "penalty_shaped", "rrl"};

    ComparisonTable table;
    for (const char* agent : kAgents) {
        ExperimentConfig variant = config;
        variant.agent.kind = agent;
        std::vector<RunRecord> records = run_experiment(variant, workers);
        std::vector<MetricReport> reports;
        for (const RunRecord& r : records) reports.push_back(r.metrics);
        table.rows.push_back(ComparisonRow{agent, aggregate(reports)});
        for (RunRecord& r : records) table.records.push_back(std::move(r));
    }
    return table;
}

GateReport check_gates(const ExperimentConfig& config, const ComparisonTable& table) {
    GateReport report;
    auto find_row = [&table](const std::string& agent) -> const ComparisonRow* {
        for (const ComparisonRow& row : table.rows)
            if (row.agent == agent) return &row;
        return nullptr;
    };
    const ComparisonRow* rrl = find_row("rrl");
    const ComparisonRow* engagement = find_row("engagement_only");

    if (config.gates.max_rrl_cost_slack && rrl) {
        const double d = config.env_kind == "toy"
                             ? config.toy.threshold_d
                             : (config.env_kind == "synthetic" ? config.synthetic.threshold_d
                                                               : config.raw_cmdp.spec.threshold_d);
        const double bound = d + *config.gates.max_rrl_cost_slack * std::max(1.0, d);
        if (rrl->metrics.safety_cost > bound) {
            std::ostringstream os;
            os << "rrl safety_cost " << rrl->metrics.safety_cost << " exceeds " << bound;
            report.failures.push_back(os.str());
        }
    }
    if (config.gates.min_violation_gap && rrl && engagement) {
        const double gap =
            engagement->metrics.violation_probability - rrl->metrics.violation_probability;
        if (gap < *config.gates.min_violation_gap) {
            std::ostringstream os;
            os << "violation gap " << gap << " below " << *config.gates.min_violation_gap;
            report.failures.push_back(os.str());
        }
    }
    return report;
}

namespace {

std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

void write_records_jsonl(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const RunRecord& r : records) out << run_record_json(r).dump() << "\n";
}

std::vector<RunRecord> load_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<RunRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(parse_run_record(json::parse(line)));
    }
    return records;
}

void write_learning_curves_csv(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "label,seed,iteration,mean_return,mean_cost,lambda\n";
    for (const RunRecord& r : records) {
        const std::string label = r.agent + "/" + r.cell.at("label").get<std::string>();
        for (std::size_t i = 0; i < r.train.mean_return.size(); ++i) {
            out << label << "," << r.seed << "," << i << ","
                << format_double(r.train.mean_return[i]) << ","
                << format_double(r.train.mean_cost[i]) << "," << format_double(r.train.lambda[i])
                << "\n";
        }
    }
}

void write_frontier_csv(const std::vector<FrontierRow>& rows, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "label,mean_return,mean_cost,engagement_rate,emotional_alignment,safety_cost,"
           "pareto_index\n";
    for (const FrontierRow& row : rows) {
        out << row.label << "," << format_double(row.metrics.mean_return) << ","
            << format_double(row.metrics.safety_cost) << ","
            << format_double(row.metrics.engagement_rate) << ","
            << format_double(row.metrics.emotional_alignment) << ","
            << format_double(row.metrics.safety_cost) << "," << format_double(row.pareto_index)
            << "\n";
    }
}

void write_comparison_csv(const ComparisonTable& table, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "agent,engagement_rate,engagement_rate_hw,emotional_alignment,emotional_alignment_hw,"
           "safety_cost,safety_cost_hw,violation_probability,violation_probability_hw,"
           "mean_return,mean_return_hw\n";
    for (const ComparisonRow& row : table.rows) {
        const MetricReport& m = row.metrics;
        const MetricHalfwidths hw = m.halfwidth.value_or(MetricHalfwidths{});
        out << row.agent << "," << format_double(m.engagement_rate) << ","
            << format_double(hw.engagement_rate) << "," << format_double(m.emotional_alignment)
            << "," << format_double(hw.emotional_alignment) << "," << format_double(m.safety_cost)
            << "," << format_double(hw.safety_cost) << ","
            << format_double(m.violation_probability) << ","
            << format_double(hw.violation_probability) << "," << format_double(m.mean_return)
            << "," << format_double(hw.mean_return) << "\n";
    }
}

void emit_plot_data(const std::vector<RunRecord>& records, const std::string& dir) {
    if (records.empty()) throw ValidationError("emit_plot_data needs at least one record");
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    write_learning_curves_csv(records, (base / "learning_curves.csv").string());
    write_frontier_csv(frontier_rows(records), (base / "frontier.csv").string());
}

OracleTables oracle_tables(const ExperimentConfig& config) {
    if (config.env_kind == "synthetic")
        throw ValidationError("oracle tables require a tabular environment (toy or cmdp)");
    const bool is_toy = config.env_kind == "toy";
    const CmdpSpec spec = is_toy ? toy_env_build(config.toy) : config.raw_cmdp.spec;
    const std::vector<double> start =
        is_toy ? std::vector<double>{1.0, 0.0} : config.raw_cmdp.start_distribution;
    OracleTables tables;
    tables.policies = enumerate_policies(spec, start);
    tables.front = exact_pareto_front(tables.policies);
    tables.solution = constrained_optimum(spec, start);
    return tables;
}

namespace {

std::string policy_label(const std::vector<int>& actions) {
    std::string label = "pi_";
    for (int a : actions) label += std::to_string(a);
    return label;
}

}  // namespace

void write_oracle_outputs(const OracleTables& tables, const std::string& dir) {
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);

    {
        std::ofstream out = open_out((base / "oracle_policies.csv").string());
        out << "label,value_reward,value_cost,on_front\n";
        for (const PolicyValuePoint& p : tables.policies) {
            const bool on_front = std::any_of(
                tables.front.begin(), tables.front.end(), [&p](const PolicyValuePoint& f) {
                    return f.actions == p.actions;
                });
            out << policy_label(p.actions) << "," << format_double(p.value_reward) << ","
                << format_double(p.value_cost) << "," << (on_front ? 1 : 0) << "\n";
        }
    }
    {
        // Same column schema as the empirical frontier so the two overlay.
        std::vector<std::array<double, 3>> points;
        for (const PolicyValuePoint& p : tables.front)
            points.push_back({p.value_reward, 0.0, -p.value_cost});
        std::array<double, 3> ref{0.0, -0.05, 0.0};
        if (!points.empty()) {
            std::array<double, 3> worst = points.front(), best = points.front();
            for (const auto& p : points)
                for (int k = 0; k < 3; ++k) {
                    worst[k] = std::min(worst[k], p[k]);
                    best[k] = std::max(best[k], p[k]);
                }
            for (int k = 0; k < 3; ++k) {
                const double range = best[k] - worst[k];
                const double margin =
                    0.05 * (range > 0.0 ? range : std::max(1.0, std::abs(worst[k])));
                ref[k] = worst[k] - margin;
            }
        }
        const std::vector<double> index = pareto_index(points, ref);
        std::ofstream out = open_out((base / "oracle_frontier.csv").string());
        out << "label,mean_return,mean_cost,engagement_rate,emotional_alignment,safety_cost,"
               "pareto_index\n";
        for (std::size_t i = 0; i < tables.front.size(); ++i) {
            const PolicyValuePoint& p = tables.front[i];
            out << policy_label(p.actions) << "," << format_double(p.value_reward) << ","
                << format_double(p.value_cost) << ",,," << format_double(p.value_cost) << ","
                << format_double(index[i]) << "\n";
        }
    }
    {
        json solution{{"optimal_value", tables.solution.optimal_value},
                      {"optimal_cost", tables.solution.optimal_cost},
                      {"lambda_star", tables.solution.lambda_star},
                      {"feasible_policy", tables.solution.feasible.actions},
                      {"weight_infeasible", tables.solution.weight_infeasible}};
        if (tables.solution.infeasible)
            solution["infeasible_policy"] = tables.solution.infeasible->actions;
        std::ofstream out = open_out((base / "oracle_solution.json").string());
        out << solution.dump(2) << "\n";
    }
}

void write_trajectory_records(const std::vector<Episode>& episodes,
                              const std::string& fingerprint, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const Episode& ep : episodes) {
        json transitions = json::array();
        for (const Transition& tr : ep.trajectory.transitions)
            transitions.push_back({tr.state, tr.action, tr.reward, tr.cost, tr.next_state});
        const json line{{"seed", ep.trajectory.seed},
                        {"config_fingerprint", fingerprint},
                        {"transitions", transitions}};
        out << line.dump() << "\n";
    }
}

std::vector<Trajectory> read_trajectory_records(const std::string& path,
                                                std::string* fingerprint_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        Trajectory traj;
        traj.seed = j.at("seed").get<std::uint64_t>();
        for (const json& t : j.at("transitions")) {
            Transition tr;
            tr.state = t[0].get<int>();
            tr.action = t[1].get<int>();
            tr.reward = t[2].get<double>();
            tr.cost = t[3].get<double>();
            tr.next_state = t[4].get<int>();
            traj.transitions.push_back(tr);
        }
        if (fingerprint_out) *fingerprint_out = j.at("config_fingerprint").get<std::string>();
        out.push_back(std::move(traj));
    }
    return out;
}

}  // namespace rrl
