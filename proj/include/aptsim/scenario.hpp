#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aptsim/conjecture.hpp"
#include "aptsim/game.hpp"

namespace aptsim {

// Client arrival rate: exp(trend polynomial + periodic sum). trend[i]
// multiplies t^(i+1); the polynomial has no constant term.
struct RateParams {
    std::vector<double> trend;
    std::vector<double> amplitude;
    std::vector<double> frequency;
    std::vector<double> phase;  // one entry per amplitude
};

// The exponent is clamped at 50 (with a one-time warning on stderr) so a
// runaway trend cannot overflow downstream arithmetic.
double lambda_rate(const RateParams& rf, double t);

// Link from a client count to the observation channel: row s becomes
// BetaBinomial(trials, alpha[s] + coeff * clients, beta[s]). A synthetic
// stand-in for an empirically estimated alert distribution.
struct ClientMapping {
    int trials = 10;
    std::vector<double> alpha;  // per state; empty = built-in defaults
    std::vector<double> beta;
    double coeff = 0.1;
    double dt = 30.0;  // seconds per step when driven by an arrival rate
};

ObservationModel client_observation_model(const ClientMapping& mapping, int num_states,
                                          double clients);

// Observation override for one step of a rate-driven schedule; the client
// count is the expected number of arrivals in the step, lambda * dt.
ObservationModel theta_from_rate(double lambda_value, const ClientMapping& mapping,
                                 int num_states);

// Full experiment description. Parsed from a JSON config file; every field
// has a default so an empty object is a valid config.
struct ScenarioConfig {
    int scenario = 1;
    GameModel model;

    double defender_threshold = 0.75;
    double attacker_threshold = 0.05;
    int defender_lookahead = 1;
    int attacker_lookahead = 1;

    std::vector<int> lookahead_values = {1};
    std::vector<double> lookahead_prior;  // empty = uniform

    // Candidate spaces parameterize one scalar: "none" (singleton at the base
    // model), "p_attack", or "clients" (observation override).
    std::string theta_d_parameter = "none";
    std::vector<double> theta_d_values;
    std::vector<double> theta_d_prior;
    std::string theta_a_parameter = "none";
    std::vector<double> theta_a_values;
    std::vector<double> theta_a_prior;
    ClientMapping clients;

    // Drift of the true parameter: "constant", "piecewise" (step function
    // over times/values), or "rate" (clients driven by lambda(t) * dt).
    std::string schedule_type = "constant";
    std::string schedule_parameter = "clients";
    std::vector<double> schedule_times;
    std::vector<double> schedule_values;
    RateParams rate;

    RolloutConfig rollout;
    int ctg_samples = 100;
    int ctg_horizon = 50;
    ConjectureSelection selection = ConjectureSelection::Sample;
    double forgetting = 1.0;
    BeliefFallback belief_fallback = BeliefFallback::ResetToPrior;

    int horizon = 50;
    int seeds = 20;
    std::uint64_t seed = 1;
    int threads = 1;
    bool diagnostics = true;
};

// Ready-made configs for the four studied setups, scaled so a full multi-seed
// run finishes on one desktop core.
ScenarioConfig scenario_preset(int id);

ScenarioConfig parse_scenario_config(const std::string& json_text);
ScenarioConfig load_scenario_config(const std::string& path);

// Canonical JSON (sorted keys, full field set); equal configs produce equal
// strings, which is what the manifest hash is computed over.
std::string scenario_config_to_json(const ScenarioConfig& cfg);

// The true model in force at step t (t >= 1) under the schedule.
GameModel scheduled_model(const ScenarioConfig& cfg, int t);

// Lowers a scenario into the online-learning loop's configuration.
Algorithm1Config build_algorithm1_config(const ScenarioConfig& cfg, std::uint64_t seed);

// ---- Trace and summary files ----

std::string trace_csv_header(const EpisodeTrace& trace);
std::string trace_to_csv(const EpisodeTrace& trace);
EpisodeTrace trace_from_csv(const std::string& path);

struct ExperimentResult {
    std::vector<std::string> trace_paths;
    std::vector<int> seeds_run;
    std::vector<int> failed_seeds;
    std::vector<std::string> failure_messages;
    std::string summary_path;
    std::string manifest_path;
};

// Runs one episode per seed (worker pool of cfg.threads), writes
// trace_<seed>.csv files, a per-step cross-seed summary with Student-t 95%
// confidence intervals, and a manifest with the config hash. Seeds that fail
// are reported, not fatal, as long as at least one succeeds.
ExperimentResult run_experiment(const ScenarioConfig& cfg, const std::string& out_dir);

// FNV-1a over the canonical config JSON; the manifest's reproducibility key.
std::uint64_t config_hash(const ScenarioConfig& cfg);

}  // namespace aptsim
