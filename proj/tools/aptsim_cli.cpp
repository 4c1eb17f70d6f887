// Command-line front end: scenario runs, threshold best responses, the
// single-server grid solver, equilibrium checks on recorded traces, and the
// analytic two-conjecture oracle.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aptsim/equilibrium.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/optimizer.hpp"
#include "aptsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace aptsim;

namespace {

struct CommonArgs {
    std::string config_path;
    int scenario = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int seeds = 0;
    std::string out_dir = "out";
    int threads = 0;
};

ScenarioConfig resolve_config(const CommonArgs& args) {
    ScenarioConfig cfg;
    if (!args.config_path.empty())
        cfg = load_scenario_config(args.config_path);
    else if (args.scenario >= 1)
        cfg = scenario_preset(args.scenario);
    else
        throw ConfigError("either --config or --scenario is required");
    if (args.seed_set) cfg.seed = args.seed;
    if (args.seeds > 0) cfg.seeds = args.seeds;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs* args, bool with_seeds) {
    cmd->add_option("--config", args->config_path, "Path to a JSON scenario config");
    cmd->add_option("--scenario", args->scenario, "Built-in preset id (1-4)")
        ->check(CLI::Range(1, 4));
    cmd->add_option("--seed", args->seed, "Base random seed")
        ->each([args](const std::string&) { args->seed_set = true; });
    if (with_seeds)
        cmd->add_option("--seeds", args->seeds, "Number of seeds (episodes) to run");
    cmd->add_option("--out", args->out_dir, "Output directory");
    cmd->add_option("--threads", args->threads, "Worker threads for seed-level parallelism");
}

int cmd_run(const CommonArgs& args) {
    ScenarioConfig cfg = resolve_config(args);
    ExperimentResult res = run_experiment(cfg, args.out_dir);
    std::cout << "wrote " << res.trace_paths.size() << " trace(s), " << res.summary_path
              << " and " << res.manifest_path << "\n";
    if (!res.failed_seeds.empty()) {
        std::cerr << "failed seeds:";
        for (int s : res.failed_seeds) std::cerr << ' ' << s;
        std::cerr << "\n";
        return 3;
    }
    return 0;
}

int cmd_bestresponse(const CommonArgs& args, const std::string& player, int iterations,
                     int population, double elite_fraction, int samples, int horizon) {
    ScenarioConfig cfg = resolve_config(args);
    CemConfig cem;
    cem.population = population;
    cem.elite_fraction = elite_fraction;
    cem.eval_samples = samples;
    cem.eval_horizon = horizon > 0 ? horizon : cfg.horizon;
    cem.max_iterations = iterations;
    cem.seed = cfg.seed;

    CemResult res;
    if (player == "defender") {
        AttackerThreshold opponent(cfg.attacker_threshold);
        res = cem_best_response_defender(cfg.model, opponent, ParamBox::unit(1), cem);
    } else if (player == "attacker") {
        DefenderThreshold opponent(cfg.defender_threshold);
        res = cem_best_response_attacker(cfg.model, opponent, ParamBox::unit(1), cem);
    } else {
        throw ConfigError("--player must be defender or attacker");
    }

    fs::create_directories(args.out_dir);
    std::string curve_path =
        (fs::path(args.out_dir) / ("cem_" + player + ".csv")).string();
    std::ofstream out(curve_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + curve_path);
    out << CemResult::csv_header() << '\n' << res.csv_rows();

    std::cout << "best threshold " << res.best_params[0] << " with cost " << res.best_cost
              << (res.plateaued ? " (stopped on plateau)" : "") << "\n"
              << "curve written to " << curve_path << "\n";
    return 0;
}

int cmd_solve(const CommonArgs& args, const std::string& player, int grid, double tol,
              int max_iters) {
    ScenarioConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    std::string path = (fs::path(args.out_dir) / ("value_" + player + ".csv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);

    if (player == "defender") {
        AttackerThreshold attacker(cfg.attacker_threshold);
        GridValueFunction vf = grid_value_iteration(cfg.model, attacker, grid, tol, max_iters);
        out << "belief,value,policy\n";
        for (std::size_t i = 0; i < vf.grid.size(); ++i)
            out << vf.grid[i] << ',' << vf.values[i] << ',' << action_code(vf.policy[i])
                << '\n';
        std::cout << "converged after " << vf.iterations << " sweeps, residual "
                  << vf.residual << ", policy switches " << vf.policy_switches()
                  << ", interpolation error bound " << vf.interpolation_error_bound << "\n"
                  << "grid written to " << path << "\n";
    } else if (player == "attacker") {
        DefenderThreshold defender(cfg.defender_threshold);
        AttackerThreshold filter(cfg.attacker_threshold);
        AttackerGridValueFunction vf = grid_value_iteration_attacker(
            cfg.model, defender, filter, grid, tol, max_iters);
        out << "belief";
        for (int s = 0; s < cfg.model.num_states(); ++s)
            out << ",value_s" << s << ",policy_s" << s;
        out << '\n';
        for (std::size_t i = 0; i < vf.grid.size(); ++i) {
            out << vf.grid[i];
            for (int s = 0; s < cfg.model.num_states(); ++s)
                out << ',' << vf.values[i][s] << ',' << action_code(vf.policy[i][s]);
            out << '\n';
        }
        std::cout << "converged after " << vf.iterations << " sweeps, residual "
                  << vf.residual << "\n"
                  << "grid written to " << path << "\n";
    } else {
        throw ConfigError("--player must be defender or attacker");
    }
    return 0;
}

int cmd_check(const CommonArgs& args, int window, double tolerance) {
    ScenarioConfig cfg = resolve_config(args);
    Algorithm1Config a = build_algorithm1_config(cfg, cfg.seed);

    BerkNashInput in;
    in.true_model = scheduled_model(cfg, cfg.horizon);
    in.theta_d = a.theta_d.models;
    in.lookaheads = a.lookaheads.horizons;
    in.theta_a = a.theta_a.models;
    in.defender_base = a.defender_base;
    in.attacker_base = a.attacker_base;
    in.defender_lookahead = a.defender_lookahead;
    in.attacker_lookahead = a.attacker_lookahead;
    in.rollout = a.rollout;
    in.ctg_samples = a.ctg_samples;
    in.ctg_horizon = a.ctg_horizon;
    in.window = window;
    in.tolerance = tolerance;
    in.seed = cfg.seed;

    std::vector<fs::path> traces;
    if (fs::exists(args.out_dir))
        for (const auto& entry : fs::directory_iterator(args.out_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv")
                traces.push_back(entry.path());
        }
    std::sort(traces.begin(), traces.end());
    if (traces.empty())
        throw ConfigError("no trace_*.csv files found in " + args.out_dir);

    std::string report_path = (fs::path(args.out_dir) / "berk_nash.csv").string();
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + report_path);
    out << "trace," << BerkNashReport::csv_header() << '\n';

    bool all_hold = true;
    for (const auto& path : traces) {
        EpisodeTrace trace = trace_from_csv(path.string());
        BerkNashReport report = berk_nash_check(trace, in);
        all_hold = all_hold && report.verdict;
        std::cout << path.filename().string() << ":\n" << report.to_text();
        out << path.filename().string() << ',' << report.csv_row() << '\n';
    }
    std::cout << "report written to " << report_path << "\n"
              << (all_hold ? "all traces within tolerance" : "some traces exceed tolerance")
              << "\n";
    return 0;  // the verdict is informational, not a failure
}

int cmd_oracle(const CommonArgs& args, double gamma, double rho, int grid, double p_point,
               double q_point, bool point_mode) {
    fs::create_directories(args.out_dir);
    std::string path = (fs::path(args.out_dir) / "oracle.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "p,q,j_identity0,j_identity1,j_flipped0,j_flipped1,identity_consistent,"
           "flipped_consistent,nu0,equilibrium_exists\n";

    auto emit = [&](double p, double q) {
        Example1Result r = example1_oracle(gamma, p, q, rho);
        out << p << ',' << q << ',' << r.j_identity[0] << ',' << r.j_identity[1] << ','
            << r.j_flipped[0] << ',' << r.j_flipped[1] << ',' << (r.identity_consistent ? 1 : 0)
            << ',' << (r.flipped_consistent ? 1 : 0) << ',';
        if (r.nu0)
            out << *r.nu0;
        else
            out << "nan";
        out << ',' << (r.equilibrium_exists ? 1 : 0) << '\n';
    };

    if (point_mode) {
        emit(p_point, q_point);
        Example1Result r = example1_oracle(gamma, p_point, q_point, rho);
        std::cout << "j_identity (" << r.j_identity[0] << ", " << r.j_identity[1] << ")\n"
                  << "j_flipped  (" << r.j_flipped[0] << ", " << r.j_flipped[1] << ")\n"
                  << "consistent: identity=" << r.identity_consistent
                  << " flipped=" << r.flipped_consistent << "\n";
        if (r.nu0) std::cout << "nu0 " << *r.nu0 << "\n";
        std::cout << (r.equilibrium_exists ? "equilibrium exists" : "no equilibrium: " + r.note)
                  << "\n";
    } else {
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j)
                emit(static_cast<double>(i) / (grid - 1), static_cast<double>(j) / (grid - 1));
    }
    std::cout << "sweep written to " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and online-learning engine for an intrusion-response stopping game"};
    app.require_subcommand(1);

    CommonArgs run_args, br_args, solve_args, check_args, oracle_args;

    CLI::App* run = app.add_subcommand("run", "Run scenario episodes across seeds");
    add_common(run, &run_args, true);

    CLI::App* br = app.add_subcommand("bestresponse", "Cross-entropy threshold best response");
    add_common(br, &br_args, false);
    std::string br_player = "defender";
    int br_iterations = 30, br_population = 100, br_samples = 50, br_horizon = 0;
    double br_elites = 0.15;
    br->add_option("--player", br_player, "defender or attacker");
    br->add_option("--iterations", br_iterations, "Optimizer iterations");
    br->add_option("--population", br_population, "Candidates per iteration");
    br->add_option("--elite-fraction", br_elites, "Share of the population refit on");
    br->add_option("--samples", br_samples, "Evaluation episodes per candidate");
    br->add_option("--horizon", br_horizon, "Evaluation horizon (default: config horizon)");

    CLI::App* solve = app.add_subcommand("solve", "Belief-grid value iteration (1 server)");
    add_common(solve, &solve_args, false);
    std::string solve_player = "defender";
    int solve_grid = 201, solve_iters = 100000;
    double solve_tol = 1e-8;
    solve->add_option("--player", solve_player, "defender or attacker");
    solve->add_option("--grid", solve_grid, "Belief grid points");
    solve->add_option("--tol", solve_tol, "Convergence tolerance");
    solve->add_option("--max-iters", solve_iters, "Iteration cap");

    CLI::App* check = app.add_subcommand("check", "Equilibrium diagnostics on recorded traces");
    add_common(check, &check_args, false);
    int check_window = 50;
    double check_tol = 1e-2;
    check->add_option("--window", check_window, "Trailing rows the diagnostics use");
    check->add_option("--tolerance", check_tol, "Verdict tolerance");

    CLI::App* oracle = app.add_subcommand("oracle", "Analytic two-conjecture benchmark sweep");
    add_common(oracle, &oracle_args, false);
    double o_gamma = 0.99, o_rho = 1.0, o_p = -1.0, o_q = -1.0;
    int o_grid = 21;
    oracle->add_option("--gamma", o_gamma, "Discount factor");
    oracle->add_option("--rho", o_rho, "Posterior mass on the identity conjecture");
    oracle->add_option("--grid", o_grid, "Sweep resolution per axis");
    oracle->add_option("--p", o_p, "Evaluate a single point: alarm probability in state 0");
    oracle->add_option("--q", o_q, "Evaluate a single point: alarm probability in state 1");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (br->parsed())
            return cmd_bestresponse(br_args, br_player, br_iterations, br_population,
                                    br_elites, br_samples, br_horizon);
        if (solve->parsed())
            return cmd_solve(solve_args, solve_player, solve_grid, solve_tol, solve_iters);
        if (check->parsed()) return cmd_check(check_args, check_window, check_tol);
        if (oracle->parsed()) {
            bool point_mode = o_p >= 0.0 || o_q >= 0.0;
            if (point_mode && (o_p < 0.0 || o_q < 0.0))
                throw ConfigError("--p and --q must be given together");
            if (o_grid < 2) throw ConfigError("--grid must be at least 2");
            return cmd_oracle(oracle_args, o_gamma, o_rho, o_grid, o_p, o_q, point_mode);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
