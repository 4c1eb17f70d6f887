#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aptsim/conjecture.hpp"
#include "aptsim/game.hpp"
#include "aptsim/rollout.hpp"
#include "aptsim/strategy.hpp"

namespace aptsim {

// Closed-form reference for the two-conjecture single-server benchmark: true
// observations are Bernoulli (o=1 with probability p in state 0 and q in
// state 1) and the defender weighs an identity-observation conjecture against
// a flipped one while both players keep their base threshold strategies.
// Everything here is analytic; it cross-checks the simulated pipeline.
struct Example1Result {
    // Value per belief state {0,1} of the base profile under each conjecture.
    std::array<double, 2> j_identity{};
    std::array<double, 2> j_flipped{};
    // Belief-state chains induced by each conjecture, and the stage costs of
    // the base profile on those states.
    std::array<std::array<double, 2>, 2> chain_identity{};
    std::array<std::array<double, 2>, 2> chain_flipped{};
    std::array<double, 2> stage_cost{};
    // Membership of each conjecture in the minimal-discrepancy set.
    bool identity_consistent = false;
    bool flipped_consistent = false;
    // Stationary weight of belief 0 given posterior mass rho_identity on the
    // identity conjecture; empty if the formula leaves [0,1].
    std::optional<double> nu0;
    bool equilibrium_exists = true;
    std::string note;
};

Example1Result example1_oracle(double gamma, double p, double q, double rho_identity);

// Exact discounted cost of a finite chain: solves (I - gamma P) J = c.
// P must be row stochastic within 1e-12 and the returned solution's Bellman
// residual is verified to 1e-10.
std::vector<double> chain_value(const std::vector<std::vector<double>>& P,
                                const std::vector<double>& c, double gamma);

// ---- Belief-grid value iteration (single-server games) ----

struct GridValueFunction {
    std::vector<double> grid;     // belief-of-compromise coordinates
    std::vector<double> values;
    std::vector<Action> policy;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;   // sup-norm change per sweep
    double interpolation_error_bound = 0.0; // second-difference estimate

    int policy_switches() const;  // action changes along the grid
};

// Defender's optimal stopping against a fixed attacker, solved on a uniform
// belief grid with linear interpolation between grid points. Throws
// NonConvergenceError if the sup-norm residual stays above tol for max_iters
// sweeps.
GridValueFunction grid_value_iteration(const GameModel& m, const AttackerStrategy& attacker,
                                       int grid_points, double tol, int max_iters);

struct AttackerGridValueFunction {
    std::vector<double> grid;
    std::vector<std::vector<double>> values;   // [grid point][state]
    std::vector<std::vector<Action>> policy;
    int iterations = 0;
    double residual = 0.0;
};

// Attacker counterpart against a fixed defender. filter_conjecture is the
// attacker strategy the defender's belief filter conditions on.
AttackerGridValueFunction grid_value_iteration_attacker(
    const GameModel& m, const DefenderStrategy& defender,
    const AttackerStrategy& filter_conjecture, int grid_points, double tol, int max_iters);

// ---- Empirical equilibrium diagnostics on a played episode ----

struct BerkNashInput {
    GameModel true_model;
    std::vector<GameModel> theta_d;
    std::vector<int> lookaheads;
    std::vector<GameModel> theta_a;
    std::shared_ptr<const DefenderStrategy> defender_base;
    std::shared_ptr<const AttackerStrategy> attacker_base;
    int defender_lookahead = 1;
    int attacker_lookahead = 1;
    RolloutConfig rollout;
    int ctg_samples = 100;
    int ctg_horizon = 50;
    int window = 50;        // trailing rows the diagnostics average over
    int min_rows = 10;
    double tolerance = 1e-2;
    std::uint64_t seed = 0;
};

struct BerkNashReport {
    // Largest cost improvement a one-step deviation finds over the actions
    // the trace actually played, evaluated in the tail conjectured world.
    double bounded_rationality_gap = 0.0;
    // Tail posterior mass lying outside the minimal-discrepancy set.
    double consistency_gap = 0.0;
    // Total variation between the tail belief occupancy and its one-step
    // pushforward under the posterior-mean conjecture.
    double stationarity_residual = 0.0;
    double tolerance = 0.0;
    bool verdict = false;   // all three gaps within tolerance
    int tail_rows = 0;

    std::string to_text() const;
    static std::string csv_header();
    std::string csv_row() const;
};

BerkNashReport berk_nash_check(const EpisodeTrace& trace, const BerkNashInput& input);

}  // namespace aptsim
