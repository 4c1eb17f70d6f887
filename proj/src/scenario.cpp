#include "aptsim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aptsim/errors.hpp"
#include "aptsim/stats.hpp"

namespace aptsim {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "aptsim 0.1.0";
constexpr int kTraceFormat = 1;

// Fixed-width round-trippable double formatting; reruns of the same config
// must produce byte-identical files.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> default_alpha(int num_states) {
    std::vector<double> a(num_states, 1.0);
    a[0] = 0.7;
    return a;
}

std::vector<double> default_beta(int num_states) {
    std::vector<double> b(num_states, 0.7);
    b[0] = 3.0;
    return b;
}

}  // namespace

double lambda_rate(const RateParams& rf, double t) {
    if (t < 0.0) throw ConfigError("lambda_rate: t must be non-negative");
    if (rf.amplitude.size() != rf.frequency.size() ||
        rf.amplitude.size() != rf.phase.size())
        throw ConfigError("lambda_rate: amplitude, frequency and phase sizes differ");
    double exponent = 0.0;
    double power = 1.0;
    for (double psi : rf.trend) {
        power *= t;
        exponent += psi * power;
    }
    for (std::size_t k = 0; k < rf.amplitude.size(); ++k)
        exponent += rf.amplitude[k] * std::sin(rf.frequency[k] * t + rf.phase[k]);
    if (exponent > 50.0) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::cerr << "warning: arrival rate exponent clamped at 50\n";
        exponent = 50.0;
    }
    return std::exp(exponent);
}

ObservationModel client_observation_model(const ClientMapping& mapping, int num_states,
                                          double clients) {
    if (mapping.trials < 1) throw ConfigError("client mapping: trials must be at least 1");
    std::vector<double> alpha = mapping.alpha.empty() ? default_alpha(num_states) : mapping.alpha;
    std::vector<double> beta = mapping.beta.empty() ? default_beta(num_states) : mapping.beta;
    if (static_cast<int>(alpha.size()) != num_states ||
        static_cast<int>(beta.size()) != num_states)
        throw ConfigError("client mapping: alpha/beta must have one entry per state");
    for (int s = 0; s < num_states; ++s) {
        alpha[s] += mapping.coeff * clients;
        if (alpha[s] <= 0.0 || beta[s] <= 0.0)
            throw ConfigError("client mapping: shape parameters must stay positive");
    }
    return ObservationModel::beta_binomial(num_states, mapping.trials, alpha, beta);
}

ObservationModel theta_from_rate(double lambda_value, const ClientMapping& mapping,
                                 int num_states) {
    if (lambda_value < 0.0) throw ConfigError("theta_from_rate: negative rate");
    if (mapping.dt <= 0.0) throw ConfigError("theta_from_rate: dt must be positive");
    return client_observation_model(mapping, num_states, lambda_value * mapping.dt);
}

// ---- Config parsing ----

namespace {

// Strict field access: unknown keys are configuration mistakes.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for \"" + key + "\": " + e.what());
    }
}

ObservationModel parse_observations(const json& j, int num_states) {
    check_keys(j, {"type", "trials", "alpha", "beta", "num_obs", "path", "rows"},
               "observations");
    std::string type = get_or<std::string>(j, "type", "beta_binomial");
    if (type == "beta_binomial") {
        int trials = get_or<int>(j, "trials", 10);
        auto alpha = get_or<std::vector<double>>(j, "alpha", default_alpha(num_states));
        auto beta = get_or<std::vector<double>>(j, "beta", default_beta(num_states));
        if (static_cast<int>(alpha.size()) != num_states ||
            static_cast<int>(beta.size()) != num_states)
            throw ConfigError("config: observations alpha/beta need one entry per state");
        return ObservationModel::beta_binomial(num_states, trials, alpha, beta);
    }
    if (type == "identity") return ObservationModel::identity(num_states);
    if (type == "uniform")
        return ObservationModel::uniform(num_states, get_or<int>(j, "num_obs", num_states));
    if (type == "file") {
        if (!j.contains("path")) throw ConfigError("config: observations file needs a path");
        ObservationModel m = ObservationModel::from_file(j.at("path").get<std::string>());
        if (m.num_states() != num_states)
            throw ConfigError("config: observation file row count does not match states");
        return m;
    }
    if (type == "matrix") {
        auto rows = get_or<std::vector<std::vector<double>>>(j, "rows", {});
        ObservationModel m(rows);
        if (m.num_states() != num_states)
            throw ConfigError("config: observation matrix row count does not match states");
        return m;
    }
    throw ConfigError("config: unknown observation type \"" + type + "\"");
}

json observations_to_json(const ObservationModel& m) {
    json j;
    j["type"] = "matrix";
    j["rows"] = m.matrix();
    return j;
}

void parse_space(const json& j, const std::string& where, std::string* parameter,
                 std::vector<double>* values, std::vector<double>* prior) {
    check_keys(j, {"parameter", "values", "prior"}, where);
    *parameter = get_or<std::string>(j, "parameter", "none");
    *values = get_or<std::vector<double>>(j, "values", {});
    *prior = get_or<std::vector<double>>(j, "prior", {});
    if (*parameter != "none" && *parameter != "p_attack" && *parameter != "clients")
        throw ConfigError("config: " + where + " parameter must be none, p_attack or clients");
    if (*parameter == "none" && !values->empty())
        throw ConfigError("config: " + where + " has values but no parameter");
    if (*parameter != "none" && values->empty())
        throw ConfigError("config: " + where + " needs values");
}

RateParams parse_rate(const json& j) {
    check_keys(j, {"trend", "amplitude", "frequency", "phase"}, "rate");
    RateParams rf;
    // Defaults follow the studied arrival curve: a slow polynomial rise with
    // one sinusoidal component. A cubic coefficient of -1e5 would kill the
    // rate within a step; -1e-5 keeps the curve's visible shape.
    rf.trend = get_or<std::vector<double>>(j, "trend", {0.5, 1e-2, -1e-5});
    rf.amplitude = get_or<std::vector<double>>(j, "amplitude", {1.0593});
    rf.frequency = get_or<std::vector<double>>(j, "frequency", {0.054 * M_PI});
    rf.phase = get_or<std::vector<double>>(j, "phase", {-0.5193});
    return rf;
}

ClientMapping parse_clients(const json& j, int num_states) {
    check_keys(j, {"trials", "alpha", "beta", "coeff", "dt"}, "clients");
    ClientMapping m;
    m.trials = get_or<int>(j, "trials", 10);
    m.alpha = get_or<std::vector<double>>(j, "alpha", default_alpha(num_states));
    m.beta = get_or<std::vector<double>>(j, "beta", default_beta(num_states));
    m.coeff = get_or<double>(j, "coeff", 0.1);
    m.dt = get_or<double>(j, "dt", 30.0);
    return m;
}

ScenarioConfig parse_json(const json& j) {
    check_keys(j,
               {"scenario",           "num_servers",       "p_attack",
                "gamma",              "cost",              "observations",
                "defender_threshold", "attacker_threshold", "defender_lookahead",
                "attacker_lookahead", "lookaheads",        "theta_d",
                "theta_a",            "clients",           "schedule",
                "rollout",            "ctg_samples",       "ctg_horizon",
                "selection",          "forgetting",        "belief_fallback",
                "horizon",            "seeds",             "seed",
                "threads",            "diagnostics"},
               "top level");

    ScenarioConfig cfg;
    cfg.scenario = get_or<int>(j, "scenario", 1);
    if (cfg.scenario < 1 || cfg.scenario > 4)
        throw ConfigError("config: scenario must be 1..4");

    cfg.model.num_servers = get_or<int>(j, "num_servers", 10);
    cfg.model.p_attack = get_or<double>(j, "p_attack", 1.0);
    cfg.model.gamma = get_or<double>(j, "gamma", 0.99);
    if (j.contains("cost")) {
        const json& c = j.at("cost");
        check_keys(c, {"exponent", "stop_base", "stop_bonus"}, "cost");
        cfg.model.cost_params.exponent = get_or<double>(c, "exponent", 1.25);
        cfg.model.cost_params.stop_base = get_or<double>(c, "stop_base", 1.0);
        cfg.model.cost_params.stop_bonus = get_or<double>(c, "stop_bonus", 2.0);
    }
    cfg.model.obs = j.contains("observations")
                        ? parse_observations(j.at("observations"), cfg.model.num_states())
                        : ObservationModel::beta_binomial(cfg.model.num_states(), 10,
                                                          default_alpha(cfg.model.num_states()),
                                                          default_beta(cfg.model.num_states()));
    cfg.model.validate();

    cfg.defender_threshold = get_or<double>(j, "defender_threshold", 0.75);
    cfg.attacker_threshold = get_or<double>(j, "attacker_threshold", 0.05);
    cfg.defender_lookahead = get_or<int>(j, "defender_lookahead", 1);
    cfg.attacker_lookahead = get_or<int>(j, "attacker_lookahead", 1);

    if (j.contains("lookaheads")) {
        const json& l = j.at("lookaheads");
        check_keys(l, {"values", "prior"}, "lookaheads");
        cfg.lookahead_values = get_or<std::vector<int>>(l, "values", {1});
        cfg.lookahead_prior = get_or<std::vector<double>>(l, "prior", {});
    }
    if (cfg.lookahead_values.empty())
        throw ConfigError("config: lookaheads.values must not be empty");
    for (int l : cfg.lookahead_values)
        if (l < 1) throw ConfigError("config: lookahead candidates must be at least 1");

    if (j.contains("theta_d"))
        parse_space(j.at("theta_d"), "theta_d", &cfg.theta_d_parameter, &cfg.theta_d_values,
                    &cfg.theta_d_prior);
    if (j.contains("theta_a"))
        parse_space(j.at("theta_a"), "theta_a", &cfg.theta_a_parameter, &cfg.theta_a_values,
                    &cfg.theta_a_prior);
    cfg.clients = j.contains("clients") ? parse_clients(j.at("clients"), cfg.model.num_states())
                                        : ClientMapping{10,
                                                        default_alpha(cfg.model.num_states()),
                                                        default_beta(cfg.model.num_states()),
                                                        0.1,
                                                        30.0};

    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, {"type", "parameter", "times", "values", "rate"}, "schedule");
        cfg.schedule_type = get_or<std::string>(s, "type", "constant");
        cfg.schedule_parameter = get_or<std::string>(s, "parameter", "clients");
        cfg.schedule_times = get_or<std::vector<double>>(s, "times", {});
        cfg.schedule_values = get_or<std::vector<double>>(s, "values", {});
        if (s.contains("rate")) cfg.rate = parse_rate(s.at("rate"));
        if (cfg.schedule_type != "constant" && cfg.schedule_type != "piecewise" &&
            cfg.schedule_type != "rate")
            throw ConfigError("config: schedule type must be constant, piecewise or rate");
        if (cfg.schedule_parameter != "p_attack" && cfg.schedule_parameter != "clients")
            throw ConfigError("config: schedule parameter must be p_attack or clients");
        if (cfg.schedule_type == "piecewise") {
            if (cfg.schedule_times.size() != cfg.schedule_values.size() ||
                cfg.schedule_times.empty())
                throw ConfigError("config: piecewise schedule needs matching times/values");
            if (!std::is_sorted(cfg.schedule_times.begin(), cfg.schedule_times.end()))
                throw ConfigError("config: piecewise schedule times must be ascending");
        }
    } else {
        cfg.rate = parse_rate(json::object());
    }

    if (j.contains("rollout")) {
        const json& r = j.at("rollout");
        check_keys(r, {"style", "branch_samples", "node_limit", "tie_tol"}, "rollout");
        std::string style = get_or<std::string>(r, "style", "exact");
        if (style == "exact")
            cfg.rollout.style = ExpectationStyle::Exact;
        else if (style == "monte_carlo")
            cfg.rollout.style = ExpectationStyle::MonteCarlo;
        else
            throw ConfigError("config: rollout style must be exact or monte_carlo");
        cfg.rollout.branch_samples = get_or<int>(r, "branch_samples", 1000);
        cfg.rollout.node_limit = get_or<std::uint64_t>(r, "node_limit", 1000000);
        cfg.rollout.tie_tol = get_or<double>(r, "tie_tol", 1e-9);
    }

    cfg.ctg_samples = get_or<int>(j, "ctg_samples", 100);
    cfg.ctg_horizon = get_or<int>(j, "ctg_horizon", 50);

    std::string sel = get_or<std::string>(j, "selection", "sample");
    if (sel == "sample")
        cfg.selection = ConjectureSelection::Sample;
    else if (sel == "map")
        cfg.selection = ConjectureSelection::Map;
    else
        throw ConfigError("config: selection must be sample or map");

    cfg.forgetting = get_or<double>(j, "forgetting", 1.0);
    if (cfg.forgetting <= 0.0 || cfg.forgetting > 1.0)
        throw ConfigError("config: forgetting must lie in (0,1]");

    std::string fb = get_or<std::string>(j, "belief_fallback", "reset");
    if (fb == "reset")
        cfg.belief_fallback = BeliefFallback::ResetToPrior;
    else if (fb == "error")
        cfg.belief_fallback = BeliefFallback::Error;
    else
        throw ConfigError("config: belief_fallback must be reset or error");

    cfg.horizon = get_or<int>(j, "horizon", 50);
    cfg.seeds = get_or<int>(j, "seeds", 20);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.threads = get_or<int>(j, "threads", 1);
    cfg.diagnostics = get_or<bool>(j, "diagnostics", true);
    if (cfg.horizon < 1) throw ConfigError("config: horizon must be at least 1");
    if (cfg.seeds < 1) throw ConfigError("config: seeds must be at least 1");
    if (cfg.threads < 1) throw ConfigError("config: threads must be at least 1");
    return cfg;
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    return parse_json(j);
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_config(ss.str());
}

std::string scenario_config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["scenario"] = cfg.scenario;
    j["num_servers"] = cfg.model.num_servers;
    j["p_attack"] = cfg.model.p_attack;
    j["gamma"] = cfg.model.gamma;
    j["cost"] = {{"exponent", cfg.model.cost_params.exponent},
                 {"stop_base", cfg.model.cost_params.stop_base},
                 {"stop_bonus", cfg.model.cost_params.stop_bonus}};
    j["observations"] = observations_to_json(cfg.model.obs);
    j["defender_threshold"] = cfg.defender_threshold;
    j["attacker_threshold"] = cfg.attacker_threshold;
    j["defender_lookahead"] = cfg.defender_lookahead;
    j["attacker_lookahead"] = cfg.attacker_lookahead;
    j["lookaheads"] = {{"values", cfg.lookahead_values}, {"prior", cfg.lookahead_prior}};
    j["theta_d"] = {{"parameter", cfg.theta_d_parameter},
                    {"values", cfg.theta_d_values},
                    {"prior", cfg.theta_d_prior}};
    j["theta_a"] = {{"parameter", cfg.theta_a_parameter},
                    {"values", cfg.theta_a_values},
                    {"prior", cfg.theta_a_prior}};
    j["clients"] = {{"trials", cfg.clients.trials},
                    {"alpha", cfg.clients.alpha},
                    {"beta", cfg.clients.beta},
                    {"coeff", cfg.clients.coeff},
                    {"dt", cfg.clients.dt}};
    j["schedule"] = {{"type", cfg.schedule_type},
                     {"parameter", cfg.schedule_parameter},
                     {"times", cfg.schedule_times},
                     {"values", cfg.schedule_values},
                     {"rate",
                      {{"trend", cfg.rate.trend},
                       {"amplitude", cfg.rate.amplitude},
                       {"frequency", cfg.rate.frequency},
                       {"phase", cfg.rate.phase}}}};
    j["rollout"] = {
        {"style", cfg.rollout.style == ExpectationStyle::Exact ? "exact" : "monte_carlo"},
        {"branch_samples", cfg.rollout.branch_samples},
        {"node_limit", cfg.rollout.node_limit},
        {"tie_tol", cfg.rollout.tie_tol}};
    j["ctg_samples"] = cfg.ctg_samples;
    j["ctg_horizon"] = cfg.ctg_horizon;
    j["selection"] = cfg.selection == ConjectureSelection::Sample ? "sample" : "map";
    j["forgetting"] = cfg.forgetting;
    j["belief_fallback"] =
        cfg.belief_fallback == BeliefFallback::ResetToPrior ? "reset" : "error";
    j["horizon"] = cfg.horizon;
    j["seeds"] = cfg.seeds;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["diagnostics"] = cfg.diagnostics;
    return j.dump(2);
}

// ---- Presets ----

ScenarioConfig scenario_preset(int id) {
    json j;
    j["scenario"] = id;
    switch (id) {
        case 1:
            // Stationary game known to both sides; the defender learns the
            // attacker's planning horizon.
            j["num_servers"] = 2;
            j["p_attack"] = 0.1;
            j["observations"] = {{"type", "beta_binomial"}, {"trials", 4}};
            j["lookaheads"] = {{"values", {1, 2}}};
            j["attacker_lookahead"] = 1;
            j["horizon"] = 100;
            break;
        case 2:
            // The observation channel is parameterized by the client count;
            // the defender weighs two candidate counts.
            j["num_servers"] = 2;
            j["p_attack"] = 1.0;
            j["theta_d"] = {{"parameter", "clients"}, {"values", {12.0, 9.0}}};
            j["theta_a"] = {{"parameter", "clients"}, {"values", {12.0}}};
            j["clients"] = {{"trials", 10}, {"coeff", 0.1}};
            j["schedule"] = {{"type", "constant"}, {"parameter", "clients"}};
            j["horizon"] = 100;
            break;
        case 3:
            // Both players hold misspecified compromise-probability
            // conjectures; the truth lies outside every candidate.
            j["num_servers"] = 2;
            j["p_attack"] = 1.0;
            j["observations"] = {{"type", "beta_binomial"}, {"trials", 4}};
            j["theta_d"] = {{"parameter", "p_attack"},
                            {"values", {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45,
                                        0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8}}};
            j["theta_a"] = {{"parameter", "p_attack"}, {"values", {0.4, 0.6, 0.8}}};
            j["horizon"] = 200;
            break;
        case 4:
            // Scenario 3 plus lookahead uncertainty.
            j["num_servers"] = 2;
            j["p_attack"] = 1.0;
            j["observations"] = {{"type", "beta_binomial"}, {"trials", 4}};
            j["theta_d"] = {{"parameter", "p_attack"},
                            {"values", {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45,
                                        0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8}}};
            j["theta_a"] = {{"parameter", "p_attack"}, {"values", {0.4, 0.6, 0.8}}};
            j["lookaheads"] = {{"values", {1, 2}}};
            j["horizon"] = 200;
            break;
        default:
            throw ConfigError("scenario preset id must be 1..4");
    }
    return parse_json(j);
}

// ---- Lowering into the learning loop ----

namespace {

GameModel model_for_theta(const ScenarioConfig& cfg, const std::string& parameter,
                          double value) {
    GameModel m = cfg.model;
    if (parameter == "p_attack") {
        if (value < 0.0 || value > 1.0)
            throw ConfigError("config: p_attack candidates must lie in [0,1]");
        m.p_attack = value;
    } else if (parameter == "clients") {
        m.obs = client_observation_model(cfg.clients, m.num_states(), value);
    } else if (parameter != "none") {
        throw ConfigError("config: unknown parameter \"" + parameter + "\"");
    }
    m.validate();
    return m;
}

double schedule_value(const ScenarioConfig& cfg, int t) {
    if (cfg.schedule_type == "piecewise") {
        double v = cfg.schedule_values.front();
        for (std::size_t i = 0; i < cfg.schedule_times.size(); ++i)
            if (static_cast<double>(t) >= cfg.schedule_times[i]) v = cfg.schedule_values[i];
        return v;
    }
    // Rate-driven: expected arrivals over one step.
    return lambda_rate(cfg.rate, static_cast<double>(t)) * cfg.clients.dt;
}

}  // namespace

GameModel scheduled_model(const ScenarioConfig& cfg, int t) {
    if (cfg.schedule_type == "constant" || t <= 1) return cfg.model;
    return model_for_theta(cfg, cfg.schedule_parameter, schedule_value(cfg, t));
}

Algorithm1Config build_algorithm1_config(const ScenarioConfig& cfg, std::uint64_t seed) {
    Algorithm1Config a;
    a.model = cfg.model;
    if (cfg.schedule_type != "constant")
        a.schedule = [cfg](int t) { return scheduled_model(cfg, t); };

    a.defender_base = std::make_shared<DefenderThreshold>(cfg.defender_threshold);
    a.attacker_base = std::make_shared<AttackerThreshold>(cfg.attacker_threshold);
    a.initial_belief = point_belief(cfg.model.num_states(), 0);

    if (cfg.theta_d_parameter == "none") {
        a.theta_d.models = {cfg.model};
        a.theta_d.prior = {1.0};
    } else {
        for (double v : cfg.theta_d_values)
            a.theta_d.models.push_back(model_for_theta(cfg, cfg.theta_d_parameter, v));
        a.theta_d.prior = cfg.theta_d_prior;
    }
    if (cfg.theta_a_parameter == "none") {
        a.theta_a.models = {cfg.model};
        a.theta_a.prior = {1.0};
    } else {
        for (double v : cfg.theta_a_values)
            a.theta_a.models.push_back(model_for_theta(cfg, cfg.theta_a_parameter, v));
        a.theta_a.prior = cfg.theta_a_prior;
    }
    a.lookaheads.horizons = cfg.lookahead_values;
    a.lookaheads.prior = cfg.lookahead_prior;

    a.defender_lookahead = cfg.defender_lookahead;
    a.attacker_lookahead = cfg.attacker_lookahead;
    a.rollout = cfg.rollout;
    a.ctg_samples = cfg.ctg_samples;
    a.ctg_horizon = cfg.ctg_horizon;
    a.selection = cfg.selection;
    a.posterior_opts.forgetting = cfg.forgetting;
    a.posterior_opts.fallback = PosteriorFallback::KeepPrior;
    a.belief_fallback = cfg.belief_fallback;
    a.horizon = cfg.horizon;
    a.seed = seed;
    a.diagnostics = cfg.diagnostics;
    return a;
}

// ---- Trace CSV ----

std::string trace_csv_header(const EpisodeTrace& trace) {
    std::ostringstream os;
    os << "t,s,a_D,a_A,o";
    for (int i = 0; i < trace.num_states; ++i) os << ",b" << i;
    for (std::size_t i = 0; i < trace.mu_size; ++i) os << ",mu_" << i;
    for (std::size_t i = 0; i < trace.rho_d_size; ++i) os << ",rho_D_" << i;
    for (std::size_t i = 0; i < trace.rho_a_size; ++i) os << ",rho_A_" << i;
    os << ",cost,K_expected_mu,K_expected_rhoD";
    return os.str();
}

std::string trace_to_csv(const EpisodeTrace& trace) {
    std::ostringstream os;
    os << trace_csv_header(trace) << '\n';
    for (const TraceRow& r : trace.rows) {
        os << r.t << ',' << r.s << ',' << action_code(r.a_d) << ',' << action_code(r.a_a)
           << ',' << r.o;
        for (double v : r.b) os << ',' << fmt(v);
        for (double v : r.mu) os << ',' << fmt(v);
        for (double v : r.rho_d) os << ',' << fmt(v);
        for (double v : r.rho_a) os << ',' << fmt(v);
        os << ',' << fmt(r.cost) << ',' << fmt(r.k_expected_mu) << ','
           << fmt(r.k_expected_rho_d);
        os << '\n';
    }
    return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

EpisodeTrace trace_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("trace: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw ConfigError("trace: empty file " + path);

    auto cols = split_csv(header);
    EpisodeTrace trace;
    std::size_t i = 5;  // t,s,a_D,a_A,o
    if (cols.size() < 8 || cols[0] != "t")
        throw ConfigError("trace: unrecognized header in " + path);
    while (i < cols.size() && cols[i].rfind("b", 0) == 0 && cols[i] != "cost") {
        ++trace.num_states;
        ++i;
    }
    while (i < cols.size() && cols[i].rfind("mu_", 0) == 0) {
        ++trace.mu_size;
        ++i;
    }
    while (i < cols.size() && cols[i].rfind("rho_D_", 0) == 0) {
        ++trace.rho_d_size;
        ++i;
    }
    while (i < cols.size() && cols[i].rfind("rho_A_", 0) == 0) {
        ++trace.rho_a_size;
        ++i;
    }
    if (i + 3 != cols.size() || cols[i] != "cost")
        throw ConfigError("trace: unrecognized header in " + path);

    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != cols.size())
            throw ConfigError("trace: wrong field count at " + path + ":" +
                              std::to_string(line_no));
        TraceRow r;
        try {
            std::size_t k = 0;
            r.t = std::stoi(f[k++]);
            r.s = std::stoi(f[k++]);
            r.a_d = f[k++] == "S" ? Action::Stop : Action::Continue;
            r.a_a = f[k++] == "S" ? Action::Stop : Action::Continue;
            r.o = std::stoi(f[k++]);
            for (int n = 0; n < trace.num_states; ++n) r.b.push_back(std::stod(f[k++]));
            for (std::size_t n = 0; n < trace.mu_size; ++n) r.mu.push_back(std::stod(f[k++]));
            for (std::size_t n = 0; n < trace.rho_d_size; ++n)
                r.rho_d.push_back(std::stod(f[k++]));
            for (std::size_t n = 0; n < trace.rho_a_size; ++n)
                r.rho_a.push_back(std::stod(f[k++]));
            r.cost = std::stod(f[k++]);
            r.k_expected_mu = std::stod(f[k++]);
            r.k_expected_rho_d = std::stod(f[k++]);
        } catch (const std::exception&) {
            throw ConfigError("trace: unparsable value at " + path + ":" +
                              std::to_string(line_no));
        }
        trace.rows.push_back(std::move(r));
    }
    return trace;
}

// ---- Experiment orchestration ----

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    const std::string canonical = scenario_config_to_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

struct SummaryQuantity {
    std::string name;
    std::function<double(const TraceRow&)> get;
};

void write_summary(const std::string& path, const std::vector<EpisodeTrace>& traces) {
    const EpisodeTrace& first = traces.front();
    std::vector<SummaryQuantity> quantities;
    quantities.push_back({"s", [](const TraceRow& r) { return static_cast<double>(r.s); }});
    quantities.push_back({"cost", [](const TraceRow& r) { return r.cost; }});
    quantities.push_back(
        {"compromised_belief", [](const TraceRow& r) { return prob_compromised(r.b); }});
    for (std::size_t i = 0; i < first.mu_size; ++i)
        quantities.push_back(
            {"mu_" + std::to_string(i), [i](const TraceRow& r) { return r.mu[i]; }});
    for (std::size_t i = 0; i < first.rho_d_size; ++i)
        quantities.push_back(
            {"rho_D_" + std::to_string(i), [i](const TraceRow& r) { return r.rho_d[i]; }});
    for (std::size_t i = 0; i < first.rho_a_size; ++i)
        quantities.push_back(
            {"rho_A_" + std::to_string(i), [i](const TraceRow& r) { return r.rho_a[i]; }});
    quantities.push_back(
        {"K_expected_mu", [](const TraceRow& r) { return r.k_expected_mu; }});
    quantities.push_back(
        {"K_expected_rhoD", [](const TraceRow& r) { return r.k_expected_rho_d; }});

    std::size_t steps = first.rows.size();
    for (const auto& tr : traces) steps = std::min(steps, tr.rows.size());

    std::ofstream out(path);
    if (!out) throw ConfigError("summary: cannot write " + path);
    out << "t";
    for (const auto& q : quantities)
        out << ',' << q.name << "_mean," << q.name << "_ci_low," << q.name << "_ci_high";
    out << '\n';
    const int n = static_cast<int>(traces.size());
    for (std::size_t row = 0; row < steps; ++row) {
        out << first.rows[row].t;
        for (const auto& q : quantities) {
            double mean = 0.0;
            for (const auto& tr : traces) mean += q.get(tr.rows[row]);
            mean /= n;
            double var = 0.0;
            for (const auto& tr : traces) {
                double d = q.get(tr.rows[row]) - mean;
                var += d * d;
            }
            double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
            double hw = student_t_halfwidth(sd, n);
            out << ',' << fmt(mean) << ',' << fmt(mean - hw) << ',' << fmt(mean + hw);
        }
        out << '\n';
    }
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Validate before spawning anything; configuration mistakes should not
    // surface as per-seed failures.
    build_algorithm1_config(cfg, cfg.seed);

    struct SeedOutcome {
        EpisodeTrace trace;
        std::string error;
        bool ok = false;
    };
    std::vector<SeedOutcome> outcomes(cfg.seeds);
    std::vector<std::uint64_t> seed_values(cfg.seeds);
    for (int i = 0; i < cfg.seeds; ++i) seed_values[i] = cfg.seed + static_cast<std::uint64_t>(i);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= cfg.seeds) return;
            try {
                outcomes[i].trace = run_algorithm1(build_algorithm1_config(cfg, seed_values[i]));
                outcomes[i].ok = true;
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min(cfg.threads, cfg.seeds));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    std::vector<EpisodeTrace> ok_traces;
    for (int i = 0; i < cfg.seeds; ++i) {
        if (!outcomes[i].ok) {
            result.failed_seeds.push_back(static_cast<int>(seed_values[i]));
            result.failure_messages.push_back(outcomes[i].error);
            continue;
        }
        std::string path =
            (fs::path(out_dir) / ("trace_" + std::to_string(seed_values[i]) + ".csv")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("experiment: cannot write " + path);
        out << trace_to_csv(outcomes[i].trace);
        result.trace_paths.push_back(path);
        result.seeds_run.push_back(static_cast<int>(seed_values[i]));
        ok_traces.push_back(std::move(outcomes[i].trace));
    }
    if (ok_traces.empty())
        throw NonConvergenceError("experiment: every seed failed; first error: " +
                                  (result.failure_messages.empty()
                                       ? std::string("unknown")
                                       : result.failure_messages.front()));

    result.summary_path = (fs::path(out_dir) / "summary.csv").string();
    write_summary(result.summary_path, ok_traces);

    json manifest;
    char hash_buf[20];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    manifest["config_hash"] = std::string("fnv1a:") + hash_buf;
    manifest["version"] = kVersion;
    manifest["trace_format"] = kTraceFormat;
    manifest["seeds"] = result.seeds_run;
    manifest["failed_seeds"] = result.failed_seeds;
    manifest["failure_messages"] = result.failure_messages;
    {
        std::vector<std::string> names;
        for (const auto& p : result.trace_paths) names.push_back(fs::path(p).filename().string());
        manifest["trace_files"] = names;
    }
    manifest["summary_file"] = "summary.csv";
    result.manifest_path = (fs::path(out_dir) / "manifest.json").string();
    std::ofstream mout(result.manifest_path, std::ios::binary);
    if (!mout) throw ConfigError("experiment: cannot write " + result.manifest_path);
    mout << manifest.dump(2) << '\n';

    if (!result.failed_seeds.empty()) {
        std::cerr << "warning: " << result.failed_seeds.size() << " of " << cfg.seeds
                  << " seeds failed";
        std::cerr << " (first: " << result.failure_messages.front() << ")\n";
    }
    return result;
}

}  // namespace aptsim
