#include "aptsim/strategy.hpp"

#include <cmath>

namespace aptsim {

McEstimate evaluate_cost(const GameModel& m, const DefenderStrategy& defender,
                         const AttackerStrategy& attacker, const Belief& b0, int horizon,
                         int num_samples, Rng& rng, const BeliefUpdateOptions& opts) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < num_samples; ++i) {
        int s = rng.categorical(b0);
        Belief b = b0;
        double total = 0.0;
        double discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            Action a_d = defender.sample(b, rng);
            Action a_a = attacker.sample(b, s, rng);
            total += discount * cost(m, s, a_d);
            discount *= m.gamma;
            s = sample_transition(m, s, a_d, a_a, rng);
            int o = m.obs.sample(s, rng);
            b = belief_update(m, b, a_d, o, attacker, opts);
        }
        sum += total;
        sum_sq += total * total;
    }
    McEstimate est;
    est.samples = num_samples;
    est.mean = sum / num_samples;
    if (num_samples > 1) {
        double var = (sum_sq - sum * sum / num_samples) / (num_samples - 1);
        est.stderror = std::sqrt(std::max(0.0, var) / num_samples);
    }
    return est;
}

}  // namespace aptsim
