#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aptsim/errors.hpp"
#include "aptsim/rng.hpp"

namespace aptsim {

// Both players choose between continuing and stopping each step. For the
// defender, Stop triggers recovery (wipes the intrusion); for the attacker,
// Stop means committing an intrusion step against the next server.
enum class Action : int { Continue = 0, Stop = 1 };

inline char action_code(Action a) { return a == Action::Stop ? 'S' : 'C'; }

// Distribution over states; b[s] = P[current number of compromised servers = s].
using Belief = std::vector<double>;

constexpr double kProbTol = 1e-12;

// Row-stochastic observation matrix z[s][o] = P[o | s].
class ObservationModel {
public:
    ObservationModel() = default;
    ObservationModel(std::vector<std::vector<double>> rows);

    static ObservationModel uniform(int num_states, int num_obs);
    static ObservationModel identity(int num_states);
    // Row s is BetaBinomial(n, alpha[s], beta[s]) over {0..n}.
    static ObservationModel beta_binomial(int num_states, int n,
                                          const std::vector<double>& alpha,
                                          const std::vector<double>& beta);
    // Plain text: one row per state, whitespace-separated probabilities,
    // '#' starts a comment.
    static ObservationModel from_file(const std::string& path);

    int num_states() const { return static_cast<int>(z_.size()); }
    int num_obs() const { return z_.empty() ? 0 : static_cast<int>(z_[0].size()); }
    double prob(int o, int s) const { return z_[s][o]; }
    const std::vector<double>& row(int s) const { return z_[s]; }
    const std::vector<std::vector<double>>& matrix() const { return z_; }

    int sample(int s, Rng& rng) const;

private:
    std::vector<std::vector<double>> z_;
};

// Totally positive of order 2: every 2x2 minor of the matrix is non-negative.
// Row s' dominates row s in likelihood ratio whenever s' > s.
bool is_tp2(const std::vector<std::vector<double>>& m, double tol = 1e-12);

struct CostParams {
    double exponent = 1.25;   // per-step cost of s compromised servers is s^exponent
    double stop_base = 1.0;   // cost of stopping with nothing compromised
    double stop_bonus = 2.0;  // reward for stopping an active intrusion
};

struct GameModel {
    int num_servers = 10;      // states are 0..num_servers
    double p_attack = 1.0;     // success probability of one intrusion step
    double gamma = 0.99;
    CostParams cost_params;
    ObservationModel obs;

    int num_states() const { return num_servers + 1; }
    void validate() const;  // throws ConfigError
};

// c(s, a_D): stopping pays stop_base - stop_bonus*sgn(s), continuing pays s^exponent.
double cost(const GameModel& m, int s, Action a_d);

// Distribution of the next state given the joint action. Defender Stop resets
// to 0; attacker Stop advances to min(s+1, N) with probability p_attack.
std::vector<double> transition_dist(const GameModel& m, int s, Action a_d, Action a_a);

int sample_transition(const GameModel& m, int s, Action a_d, Action a_a, Rng& rng);

// ---- Belief helpers ----

void validate_belief(const Belief& b, int num_states);

// P[at least one server compromised]. Threshold strategies act on this.
inline double prob_compromised(const Belief& b) { return 1.0 - b[0]; }

inline Belief point_belief(int num_states, int s) {
    Belief b(num_states, 0.0);
    b[s] = 1.0;
    return b;
}

bool beliefs_equal(const Belief& a, const Belief& b, double tol = 1e-9);

// What to do when the observed feedback has zero probability under the
// conjectured world: surface the broken conjecture, or restart from a prior.
enum class BeliefFallback { Error, ResetToPrior };

struct BeliefUpdateOptions {
    BeliefFallback fallback = BeliefFallback::Error;
    Belief reset_belief;  // used when fallback == ResetToPrior
};

class AttackerStrategy;  // strategy.hpp

// Bayesian filter step: posterior over s' given the defender's action, the new
// observation, and the conjectured attacker behaviour at the prior belief.
Belief belief_update(const GameModel& m, const Belief& b, Action a_d, int o,
                     const AttackerStrategy& attacker,
                     const BeliefUpdateOptions& opts = {});

// P[o | b, a_d, attacker, m] for every o: the normalizer of belief_update and
// the per-step likelihood behind the defender's conjecture posteriors.
std::vector<double> defender_feedback_distribution(const GameModel& m, const Belief& b,
                                                   Action a_d,
                                                   const AttackerStrategy& attacker);

double defender_feedback_likelihood(const GameModel& m, const Belief& b, Action a_d,
                                    int o, const AttackerStrategy& attacker);

// The attacker observes the state directly, so its per-step feedback
// likelihood factors into transition times observation probabilities.
double attacker_feedback_likelihood(const GameModel& m, int s_prev, Action a_d,
                                    Action a_a, int s_now, int o_now);

}  // namespace aptsim
