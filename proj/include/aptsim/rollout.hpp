#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "aptsim/game.hpp"
#include "aptsim/strategy.hpp"

namespace aptsim {

enum class ExpectationStyle { Exact, MonteCarlo };

struct RolloutConfig {
    int lookahead = 1;
    ExpectationStyle style = ExpectationStyle::Exact;
    int branch_samples = 1000;  // per candidate sequence, MonteCarlo style only
    std::uint64_t node_limit = 1000000;
    double tie_tol = 1e-9;
    BeliefUpdateOptions belief_opts;
};

// Discounted cost of a fixed strategy profile as a function of the start
// belief, estimated by simulation under one model. sign = +1 gives the
// defender's cost, -1 the attacker's. Queries are memoized on a quantized
// belief key and each key gets its own derived seed, so cached values do not
// depend on query order.
class CostToGo {
public:
    CostToGo(GameModel model, std::shared_ptr<const DefenderStrategy> defender,
             std::shared_ptr<const AttackerStrategy> attacker, double sign, int samples,
             int horizon, std::uint64_t seed, BeliefUpdateOptions opts = {});

    double operator()(const Belief& b) const;
    McEstimate fresh_estimate(const Belief& b) const;  // bypasses the cache

    const GameModel& model() const { return model_; }

private:
    GameModel model_;
    std::shared_ptr<const DefenderStrategy> defender_;
    std::shared_ptr<const AttackerStrategy> attacker_;
    double sign_;
    int samples_;
    int horizon_;
    std::uint64_t seed_;
    BeliefUpdateOptions opts_;
    mutable std::map<std::vector<std::int64_t>, double> cache_;
};

struct RolloutDecision {
    Action action = Action::Continue;
    double value[2] = {0.0, 0.0};     // best sequence value per first action
    double se[2] = {0.0, 0.0};        // standard errors, MonteCarlo style only
    std::vector<Action> sequence;     // the minimizing open-loop sequence
    std::uint64_t nodes = 0;          // expanded tree nodes
};

// One-step improvement of the defender's base strategy: minimize, over
// open-loop action sequences of the configured lookahead, the expected
// discounted stage costs plus the terminal cost-to-go at the reached belief.
// The opponent plays `opponent` inside the tree and belief updates are taken
// under the same model and opponent. Ties prefer Continue, then the
// lexicographically first sequence. Throws BudgetExceededError past the node
// limit. `rng` is required for the MonteCarlo style.
RolloutDecision rollout_defender(const GameModel& m, const Belief& b,
                                 const AttackerStrategy& opponent, const CostToGo& jbar,
                                 const RolloutConfig& cfg, Rng* rng = nullptr);

// Attacker counterpart; maximizes its own objective by minimizing the negated
// cost supplied by an attacker-signed CostToGo. The attacker conditions on its
// known state s; `belief_conjecture` is the attacker strategy the defender's
// belief filter conditions on inside the tree.
RolloutDecision rollout_attacker(const GameModel& m, const Belief& b, int s,
                                 const DefenderStrategy& opponent,
                                 const AttackerStrategy& belief_conjecture,
                                 const CostToGo& jbar, const RolloutConfig& cfg,
                                 Rng* rng = nullptr);

// Strategy views of the rollout operator, with per-belief decision caches.
class RolloutDefenderStrategy : public DefenderStrategy {
public:
    RolloutDefenderStrategy(GameModel model, std::shared_ptr<const AttackerStrategy> opponent,
                            std::shared_ptr<const CostToGo> jbar, RolloutConfig cfg,
                            std::uint64_t seed = 0);
    double stop_prob(const Belief& b) const override;
    std::uint64_t nodes_used() const { return nodes_; }

private:
    GameModel model_;
    std::shared_ptr<const AttackerStrategy> opponent_;
    std::shared_ptr<const CostToGo> jbar_;
    RolloutConfig cfg_;
    std::uint64_t seed_;
    mutable std::uint64_t nodes_ = 0;
    mutable std::map<std::vector<std::int64_t>, double> cache_;
};

class RolloutAttackerStrategy : public AttackerStrategy {
public:
    RolloutAttackerStrategy(GameModel model, std::shared_ptr<const DefenderStrategy> opponent,
                            std::shared_ptr<const AttackerStrategy> belief_conjecture,
                            std::shared_ptr<const CostToGo> jbar, RolloutConfig cfg,
                            std::uint64_t seed = 0);
    double stop_prob(const Belief& b, int s) const override;
    std::uint64_t nodes_used() const { return nodes_; }

private:
    GameModel model_;
    std::shared_ptr<const DefenderStrategy> opponent_;
    std::shared_ptr<const AttackerStrategy> belief_conjecture_;
    std::shared_ptr<const CostToGo> jbar_;
    RolloutConfig cfg_;
    std::uint64_t seed_;
    mutable std::uint64_t nodes_ = 0;
    mutable std::map<std::vector<std::int64_t>, double> cache_;
};

// Shared quantized-key helper (also used by occupancy bookkeeping).
std::vector<std::int64_t> quantize_belief(const Belief& b, double scale);

}  // namespace aptsim
