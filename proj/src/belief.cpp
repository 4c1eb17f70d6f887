#include <cmath>

#include "aptsim/game.hpp"
#include "aptsim/strategy.hpp"

namespace aptsim {

namespace {

// Predictive state distribution before the observation arrives:
// pred[s'] = sum_s b(s) sum_{a_A} pi_A(a_A | b, s) f(s' | s, a_d, a_A).
std::vector<double> predictive_dist(const GameModel& m, const Belief& b, Action a_d,
                                    const AttackerStrategy& attacker) {
    std::vector<double> pred(m.num_states(), 0.0);
    if (a_d == Action::Stop) {
        pred[0] = 1.0;  // recovery, regardless of the attacker
        return pred;
    }
    for (int s = 0; s < m.num_states(); ++s) {
        if (b[s] <= 0.0) continue;
        double p_stop = attacker.stop_prob(b, s);
        double stay = b[s] * (1.0 - p_stop);
        pred[s] += stay;
        if (p_stop > 0.0) {
            int up = std::min(s + 1, m.num_servers);
            pred[s] += b[s] * p_stop * (1.0 - m.p_attack);
            pred[up] += b[s] * p_stop * m.p_attack;
        }
    }
    return pred;
}

}  // namespace

Belief belief_update(const GameModel& m, const Belief& b, Action a_d, int o,
                     const AttackerStrategy& attacker, const BeliefUpdateOptions& opts) {
    std::vector<double> post = predictive_dist(m, b, a_d, attacker);
    double norm = 0.0;
    for (int sp = 0; sp < m.num_states(); ++sp) {
        post[sp] *= m.obs.prob(o, sp);
        norm += post[sp];
    }
    if (norm <= 0.0) {
        if (opts.fallback == BeliefFallback::ResetToPrior) {
            return opts.reset_belief;
        }
        throw ZeroLikelihoodError("observation " + std::to_string(o) +
                                  " has zero probability under the conjectured world");
    }
    for (double& p : post) p /= norm;
    return post;
}

std::vector<double> defender_feedback_distribution(const GameModel& m, const Belief& b,
                                                   Action a_d,
                                                   const AttackerStrategy& attacker) {
    std::vector<double> pred = predictive_dist(m, b, a_d, attacker);
    std::vector<double> dist(m.obs.num_obs(), 0.0);
    for (int sp = 0; sp < m.num_states(); ++sp) {
        if (pred[sp] <= 0.0) continue;
        for (int o = 0; o < m.obs.num_obs(); ++o) {
            dist[o] += m.obs.prob(o, sp) * pred[sp];
        }
    }
    return dist;
}

double defender_feedback_likelihood(const GameModel& m, const Belief& b, Action a_d,
                                    int o, const AttackerStrategy& attacker) {
    std::vector<double> pred = predictive_dist(m, b, a_d, attacker);
    double like = 0.0;
    for (int sp = 0; sp < m.num_states(); ++sp) {
        like += m.obs.prob(o, sp) * pred[sp];
    }
    return like;
}

double attacker_feedback_likelihood(const GameModel& m, int s_prev, Action a_d,
                                    Action a_a, int s_now, int o_now) {
    std::vector<double> dist = transition_dist(m, s_prev, a_d, a_a);
    return dist[s_now] * m.obs.prob(o_now, s_now);
}

}  // namespace aptsim
