#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "aptsim/game.hpp"
#include "aptsim/rollout.hpp"
#include "aptsim/strategy.hpp"

namespace aptsim {

// What to do when every candidate assigns zero probability to the feedback.
enum class PosteriorFallback { Error, KeepPrior };

struct PosteriorUpdateOptions {
    // Exponential forgetting: prior weights are raised to this power before
    // multiplying in the likelihood. 1 recovers the plain Bayes rule.
    double forgetting = 1.0;
    PosteriorFallback fallback = PosteriorFallback::Error;
};

// posterior_i proportional to prior_i^forgetting * likelihood_i.
std::vector<double> bayes_update(const std::vector<double>& prior,
                                 const std::vector<double>& likelihood,
                                 const PosteriorUpdateOptions& opts = {});

// Empirical distribution over visited beliefs. Beliefs closer than 1e-9
// (max-norm) merge into one atom.
class OccupancyMeasure {
public:
    void add(const Belief& b, double weight = 1.0);
    const std::vector<Belief>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::vector<double> normalized_weights() const;
    double total_weight() const { return total_; }
    std::size_t size() const { return atoms_.size(); }

private:
    std::vector<Belief> atoms_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

constexpr double kInfDiscrepancy = std::numeric_limits<double>::infinity();

// Expected log-likelihood ratio of the true feedback kernel against a
// conjectured one, averaged over the occupancy measure:
//   sum_b nu(b) sum_i p_true(i|b) ln(p_true(i|b) / p_conj(i|b)).
// Conventions: 0 ln 0 = 0, and any i with p_true > 0 but p_conj = 0 makes the
// result +infinity.
double discrepancy(const std::vector<double>& nu_weights,
                   const std::vector<std::vector<double>>& p_true,
                   const std::vector<std::vector<double>>& p_conj);

using FeedbackKernel = std::function<std::vector<double>(const Belief&)>;

double discrepancy(const OccupancyMeasure& nu, const FeedbackKernel& true_kernel,
                   const FeedbackKernel& conj_kernel);

// Indices attaining the minimum discrepancy, with ties within tol all
// included. If every candidate is +infinity they are all consistent in the
// degenerate sense and all indices are returned.
std::vector<int> consistent_set(const std::vector<double>& k_values, double tol = 1e-9);

enum class ConjectureSelection { Sample, Map };

// A candidate model the defender or attacker may hold about the world.
// Candidates share the state/action spaces of the true game.
struct ConjectureSpace {
    std::vector<GameModel> models;   // candidate models (theta)
    std::vector<double> prior;       // full-support prior, empty = uniform
};

struct LookaheadSpace {
    std::vector<int> horizons;       // candidate opponent lookaheads (L)
    std::vector<double> prior;       // empty = uniform
};

struct Algorithm1Config {
    GameModel model;  // true model at t = 1
    // Optional drift of the true model; called with t >= 2 to get the model
    // that generates s_t / o_t. Null means stationary.
    std::function<GameModel(int)> schedule;

    std::shared_ptr<const DefenderStrategy> defender_base;
    std::shared_ptr<const AttackerStrategy> attacker_base;
    Belief initial_belief;  // empty = point mass on state 0

    ConjectureSpace theta_d;     // defender's model candidates
    ConjectureSpace theta_a;     // attacker's model candidates
    LookaheadSpace lookaheads;   // defender's candidates for the attacker lookahead

    int defender_lookahead = 1;
    int attacker_lookahead = 1;  // the attacker's real lookahead

    RolloutConfig rollout;
    int ctg_samples = 100;
    int ctg_horizon = 50;

    ConjectureSelection selection = ConjectureSelection::Sample;
    PosteriorUpdateOptions posterior_opts;
    BeliefFallback belief_fallback = BeliefFallback::Error;

    int horizon = 50;  // episode length T
    std::uint64_t seed = 0;
    bool diagnostics = true;  // expected-discrepancy trace columns
};

struct TraceRow {
    int t = 0;
    int s = 0;
    Action a_d = Action::Continue;
    Action a_a = Action::Continue;
    int o = -1;  // no observation on the first step
    Belief b;
    std::vector<double> mu;
    std::vector<double> rho_d;
    std::vector<double> rho_a;
    double cost = 0.0;
    double k_expected_mu = 0.0;
    double k_expected_rho_d = 0.0;
};

struct EpisodeTrace {
    int num_states = 0;
    std::size_t mu_size = 0;
    std::size_t rho_d_size = 0;
    std::size_t rho_a_size = 0;
    std::vector<TraceRow> rows;

    OccupancyMeasure occupancy() const;
    double discounted_cost(double gamma) const;
};

// Online play with simultaneous Bayesian reestimation of both players'
// conjectures and per-step rollout strategy improvement.
EpisodeTrace run_algorithm1(const Algorithm1Config& cfg);

}  // namespace aptsim
