#pragma once

#include <memory>
#include <vector>

#include "aptsim/game.hpp"
#include "aptsim/rng.hpp"

namespace aptsim {

// The defender acts on its belief alone.
class DefenderStrategy {
public:
    virtual ~DefenderStrategy() = default;
    virtual double stop_prob(const Belief& b) const = 0;

    Action sample(const Belief& b, Rng& rng) const {
        return rng.bernoulli(stop_prob(b)) ? Action::Stop : Action::Continue;
    }
};

// The attacker sees both the defender's belief and the true state.
class AttackerStrategy {
public:
    virtual ~AttackerStrategy() = default;
    virtual double stop_prob(const Belief& b, int s) const = 0;

    Action sample(const Belief& b, int s, Rng& rng) const {
        return rng.bernoulli(stop_prob(b, s)) ? Action::Stop : Action::Continue;
    }
};

// Stop once the probability that anything is compromised reaches alpha.
class DefenderThreshold : public DefenderStrategy {
public:
    explicit DefenderThreshold(double alpha) : alpha_(alpha) {}
    double stop_prob(const Belief& b) const override {
        return prob_compromised(b) >= alpha_ ? 1.0 : 0.0;
    }
    double alpha() const { return alpha_; }

private:
    double alpha_;
};

class DefenderConstant : public DefenderStrategy {
public:
    explicit DefenderConstant(double p) : p_(p) {}
    double stop_prob(const Belief&) const override { return p_; }

private:
    double p_;
};

// Start the intrusion from the safe state while the defender still looks
// inattentive (belief of compromise below beta); otherwise lie low.
class AttackerThreshold : public AttackerStrategy {
public:
    explicit AttackerThreshold(double beta) : beta_(beta) {}
    double stop_prob(const Belief& b, int s) const override {
        return (s == 0 && prob_compromised(b) < beta_) ? 1.0 : 0.0;
    }
    double beta() const { return beta_; }

private:
    double beta_;
};

class AttackerConstant : public AttackerStrategy {
public:
    explicit AttackerConstant(double p) : p_(p) {}
    double stop_prob(const Belief&, int) const override { return p_; }

private:
    double p_;
};

// Stop probability per state, belief-independent. Used for randomized filter
// tests and as a frozen snapshot of a conjectured strategy at one belief.
class TabularAttacker : public AttackerStrategy {
public:
    explicit TabularAttacker(std::vector<double> stop_probs)
        : stop_probs_(std::move(stop_probs)) {}
    double stop_prob(const Belief&, int s) const override { return stop_probs_[s]; }

private:
    std::vector<double> stop_probs_;
};

struct McEstimate {
    double mean = 0.0;
    double stderror = 0.0;
    int samples = 0;
};

// Monte Carlo estimate of the defender's discounted cost from belief b0 under
// the profile (defender, attacker). The initial state is drawn from b0 and the
// simulated belief evolves with the same attacker strategy and model, so the
// simulation is coherent with the world it is run in.
McEstimate evaluate_cost(const GameModel& m, const DefenderStrategy& defender,
                         const AttackerStrategy& attacker, const Belief& b0, int horizon,
                         int num_samples, Rng& rng,
                         const BeliefUpdateOptions& opts = {});

}  // namespace aptsim
