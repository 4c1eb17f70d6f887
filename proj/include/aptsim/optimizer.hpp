#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aptsim/game.hpp"
#include "aptsim/strategy.hpp"

namespace aptsim {

struct CemConfig {
    int population = 100;          // candidates per iteration
    double elite_fraction = 0.15;  // share of the population refit on
    int eval_samples = 50;         // episodes per candidate evaluation
    int eval_horizon = 50;
    int max_iterations = 30;
    std::vector<double> init_mean;  // per parameter; empty = box midpoints
    std::vector<double> init_std;   // per parameter; empty = box width / 3
    // Stop once the best-ever cost has not improved by more than plateau_tol
    // for plateau_iters consecutive iterations.
    double plateau_tol = 1e-6;
    int plateau_iters = 5;
    std::uint64_t seed = 0;

    void validate(std::size_t dims) const;  // throws ConfigError
};

// Per-parameter sampling box; the truncated-Gaussian sampler never leaves it.
struct ParamBox {
    std::vector<double> lo;
    std::vector<double> hi;

    static ParamBox unit(std::size_t dims);
    void validate() const;
};

struct CemCurvePoint {
    int iteration = 0;
    double mean_cost = 0.0;  // population mean
    double ci_low = 0.0;     // Student-t 95% interval over the population
    double ci_high = 0.0;
    double best_cost = 0.0;  // best ever seen up to this iteration
};

struct CemResult {
    std::vector<double> best_params;
    double best_cost = 0.0;
    std::vector<CemCurvePoint> curve;
    bool plateaued = false;

    static std::string csv_header();  // iteration,mean,ci_low,ci_high
    std::string csv_rows() const;
};

// Objective evaluated with a per-candidate RNG so population members can be
// computed in any order (or in parallel) without changing results.
using CemObjective = std::function<double(const std::vector<double>&, Rng&)>;

CemResult cem_minimize(const CemObjective& objective, const ParamBox& box,
                       const CemConfig& cfg);

// Approximate best responses over threshold strategies. The defender tunes
// the belief threshold alpha it stops at; the attacker tunes the
// belief-of-exposure threshold beta it attacks below. Costs are the
// defender's, so the attacker minimizes the negated evaluation.
CemResult cem_best_response_defender(const GameModel& m, const AttackerStrategy& opponent,
                                     const ParamBox& box, const CemConfig& cfg,
                                     const Belief& initial_belief = {});

CemResult cem_best_response_attacker(const GameModel& m, const DefenderStrategy& opponent,
                                     const ParamBox& box, const CemConfig& cfg,
                                     const Belief& initial_belief = {});

struct ProfileCost {
    int half_round = 0;
    char mover = 'D';  // which player just best-responded
    double alpha = 0.0;
    double beta = 0.0;
    double cost_mean = 0.0;  // defender cost of the updated profile
    double cost_se = 0.0;
};

// Baseline learner: alternate exact-order best responses, re-evaluating the
// profile after each half-round.
std::vector<ProfileCost> best_response_dynamics(const GameModel& m, double init_alpha,
                                                double init_beta, int rounds,
                                                const CemConfig& cfg,
                                                const Belief& initial_belief = {});

}  // namespace aptsim
