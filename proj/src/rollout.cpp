#include "aptsim/rollout.hpp"

#include <cmath>

namespace aptsim {

namespace {

constexpr double kCtgKeyScale = 1e4;       // cost-to-go cache resolution 1e-4
constexpr double kDecisionKeyScale = 1e9;  // strategy decision cache resolution 1e-9

std::uint64_t fnv1a(const std::vector<std::int64_t>& key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::int64_t v : key) {
        auto u = static_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (u >> (8 * i)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// Enumerates {C,S}^lookahead in lexicographic order with Continue first, so
// scanning in order and keeping strict improvements implements the tie rule.
std::vector<Action> nth_sequence(int lookahead, int idx) {
    std::vector<Action> seq(lookahead);
    for (int d = 0; d < lookahead; ++d) {
        seq[d] = (idx >> (lookahead - 1 - d)) & 1 ? Action::Stop : Action::Continue;
    }
    return seq;
}

struct TreeCounter {
    std::uint64_t nodes = 0;
    std::uint64_t limit;
    void tick() {
        if (++nodes > limit) {
            throw BudgetExceededError("lookahead tree exceeded node limit " +
                                      std::to_string(limit));
        }
    }
};

double eval_defender_seq(const GameModel& m, const AttackerStrategy& opp,
                         const CostToGo& jbar, const RolloutConfig& cfg,
                         const std::vector<Action>& seq, std::size_t d, const Belief& b,
                         TreeCounter& counter) {
    Action a = seq[d];
    double stage = 0.0;
    for (int s = 0; s < m.num_states(); ++s) {
        if (b[s] > 0.0) stage += b[s] * cost(m, s, a);
    }
    std::vector<double> obs_dist = defender_feedback_distribution(m, b, a, opp);
    double cont = 0.0;
    for (int o = 0; o < m.obs.num_obs(); ++o) {
        if (obs_dist[o] <= 0.0) continue;
        counter.tick();
        Belief next = belief_update(m, b, a, o, opp, cfg.belief_opts);
        double tail = (d + 1 == seq.size()) ? jbar(next)
                                            : eval_defender_seq(m, opp, jbar, cfg, seq,
                                                                d + 1, next, counter);
        cont += obs_dist[o] * tail;
    }
    return stage + m.gamma * cont;
}

double eval_attacker_seq(const GameModel& m, const DefenderStrategy& opp,
                         const AttackerStrategy& belief_conj, const CostToGo& jbar,
                         const RolloutConfig& cfg, const std::vector<Action>& seq,
                         std::size_t d, const Belief& b, int s, TreeCounter& counter) {
    Action a_a = seq[d];
    double p_stop = opp.stop_prob(b);
    double value = 0.0;
    for (Action a_d : {Action::Continue, Action::Stop}) {
        double w_d = a_d == Action::Stop ? p_stop : 1.0 - p_stop;
        if (w_d <= 0.0) continue;
        double stage = -cost(m, s, a_d);
        std::vector<double> tdist = transition_dist(m, s, a_d, a_a);
        double cont = 0.0;
        for (int sp = 0; sp < m.num_states(); ++sp) {
            if (tdist[sp] <= 0.0) continue;
            for (int o = 0; o < m.obs.num_obs(); ++o) {
                double w = tdist[sp] * m.obs.prob(o, sp);
                if (w <= 0.0) continue;
                counter.tick();
                Belief next = belief_update(m, b, a_d, o, belief_conj, cfg.belief_opts);
                double tail = (d + 1 == seq.size())
                                  ? jbar(next)
                                  : eval_attacker_seq(m, opp, belief_conj, jbar, cfg, seq,
                                                      d + 1, next, sp, counter);
                cont += w * tail;
            }
        }
        value += w_d * (stage + m.gamma * cont);
    }
    return value;
}

struct SeqEstimate {
    double mean = 0.0;
    double se = 0.0;
};

SeqEstimate mc_defender_seq(const GameModel& m, const AttackerStrategy& opp,
                            const CostToGo& jbar, const RolloutConfig& cfg,
                            const std::vector<Action>& seq, const Belief& b, Rng& rng,
                            TreeCounter& counter) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < cfg.branch_samples; ++i) {
        int s = rng.categorical(b);
        Belief cur = b;
        double total = 0.0;
        double disc = 1.0;
        for (Action a : seq) {
            counter.tick();
            total += disc * cost(m, s, a);
            Action a_a = opp.sample(cur, s, rng);
            s = sample_transition(m, s, a, a_a, rng);
            int o = m.obs.sample(s, rng);
            cur = belief_update(m, cur, a, o, opp, cfg.belief_opts);
            disc *= m.gamma;
        }
        total += disc * jbar(cur);
        sum += total;
        sum_sq += total * total;
    }
    SeqEstimate est;
    est.mean = sum / cfg.branch_samples;
    if (cfg.branch_samples > 1) {
        double var = (sum_sq - sum * sum / cfg.branch_samples) / (cfg.branch_samples - 1);
        est.se = std::sqrt(std::max(0.0, var) / cfg.branch_samples);
    }
    return est;
}

SeqEstimate mc_attacker_seq(const GameModel& m, const DefenderStrategy& opp,
                            const AttackerStrategy& belief_conj, const CostToGo& jbar,
                            const RolloutConfig& cfg, const std::vector<Action>& seq,
                            const Belief& b, int s0, Rng& rng, TreeCounter& counter) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < cfg.branch_samples; ++i) {
        int s = s0;
        Belief cur = b;
        double total = 0.0;
        double disc = 1.0;
        for (Action a_a : seq) {
            counter.tick();
            Action a_d = opp.sample(cur, rng);
            total += disc * -cost(m, s, a_d);
            s = sample_transition(m, s, a_d, a_a, rng);
            int o = m.obs.sample(s, rng);
            cur = belief_update(m, cur, a_d, o, belief_conj, cfg.belief_opts);
            disc *= m.gamma;
        }
        total += disc * jbar(cur);
        sum += total;
        sum_sq += total * total;
    }
    SeqEstimate est;
    est.mean = sum / cfg.branch_samples;
    if (cfg.branch_samples > 1) {
        double var = (sum_sq - sum * sum / cfg.branch_samples) / (cfg.branch_samples - 1);
        est.se = std::sqrt(std::max(0.0, var) / cfg.branch_samples);
    }
    return est;
}

}  // namespace

std::vector<std::int64_t> quantize_belief(const Belief& b, double scale) {
    std::vector<std::int64_t> key(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        key[i] = static_cast<std::int64_t>(std::llround(b[i] * scale));
    }
    return key;
}

CostToGo::CostToGo(GameModel model, std::shared_ptr<const DefenderStrategy> defender,
                   std::shared_ptr<const AttackerStrategy> attacker, double sign,
                   int samples, int horizon, std::uint64_t seed, BeliefUpdateOptions opts)
    : model_(std::move(model)),
      defender_(std::move(defender)),
      attacker_(std::move(attacker)),
      sign_(sign),
      samples_(samples),
      horizon_(horizon),
      seed_(seed),
      opts_(std::move(opts)) {}

double CostToGo::operator()(const Belief& b) const {
    std::vector<std::int64_t> key = quantize_belief(b, kCtgKeyScale);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Rng rng = Rng::child(seed_, fnv1a(key));
    McEstimate est =
        evaluate_cost(model_, *defender_, *attacker_, b, horizon_, samples_, rng, opts_);
    double value = sign_ * est.mean;
    cache_.emplace(std::move(key), value);
    return value;
}

McEstimate CostToGo::fresh_estimate(const Belief& b) const {
    Rng rng = Rng::child(seed_, fnv1a(quantize_belief(b, kCtgKeyScale)));
    McEstimate est =
        evaluate_cost(model_, *defender_, *attacker_, b, horizon_, samples_, rng, opts_);
    est.mean *= sign_;
    return est;
}

RolloutDecision rollout_defender(const GameModel& m, const Belief& b,
                                 const AttackerStrategy& opponent, const CostToGo& jbar,
                                 const RolloutConfig& cfg, Rng* rng) {
    if (cfg.style == ExpectationStyle::MonteCarlo && rng == nullptr) {
        throw ConfigError("MonteCarlo rollout needs an rng");
    }
    TreeCounter counter{0, cfg.node_limit};
    RolloutDecision dec;
    bool have[2] = {false, false};
    double best = 0.0;
    bool have_best = false;
    const int num_seq = 1 << cfg.lookahead;
    for (int idx = 0; idx < num_seq; ++idx) {
        std::vector<Action> seq = nth_sequence(cfg.lookahead, idx);
        double v;
        double se = 0.0;
        if (cfg.style == ExpectationStyle::Exact) {
            v = eval_defender_seq(m, opponent, jbar, cfg, seq, 0, b, counter);
        } else {
            SeqEstimate est = mc_defender_seq(m, opponent, jbar, cfg, seq, b, *rng, counter);
            v = est.mean;
            se = est.se;
        }
        int first = static_cast<int>(seq[0]);
        if (!have[first] || v < dec.value[first]) {
            dec.value[first] = v;
            dec.se[first] = se;
            have[first] = true;
        }
        if (!have_best || v < best - cfg.tie_tol) {
            best = v;
            have_best = true;
            dec.sequence = seq;
        }
    }
    dec.action = dec.sequence[0];
    dec.nodes = counter.nodes;
    return dec;
}

RolloutDecision rollout_attacker(const GameModel& m, const Belief& b, int s,
                                 const DefenderStrategy& opponent,
                                 const AttackerStrategy& belief_conjecture,
                                 const CostToGo& jbar, const RolloutConfig& cfg, Rng* rng) {
    if (cfg.style == ExpectationStyle::MonteCarlo && rng == nullptr) {
        throw ConfigError("MonteCarlo rollout needs an rng");
    }
    TreeCounter counter{0, cfg.node_limit};
    RolloutDecision dec;
    bool have[2] = {false, false};
    double best = 0.0;
    bool have_best = false;
    const int num_seq = 1 << cfg.lookahead;
    for (int idx = 0; idx < num_seq; ++idx) {
        std::vector<Action> seq = nth_sequence(cfg.lookahead, idx);
        double v;
        double se = 0.0;
        if (cfg.style == ExpectationStyle::Exact) {
            v = eval_attacker_seq(m, opponent, belief_conjecture, jbar, cfg, seq, 0, b, s,
                                  counter);
        } else {
            SeqEstimate est = mc_attacker_seq(m, opponent, belief_conjecture, jbar, cfg, seq,
                                              b, s, *rng, counter);
            v = est.mean;
            se = est.se;
        }
        int first = static_cast<int>(seq[0]);
        if (!have[first] || v < dec.value[first]) {
            dec.value[first] = v;
            dec.se[first] = se;
            have[first] = true;
        }
        if (!have_best || v < best - cfg.tie_tol) {
            best = v;
            have_best = true;
            dec.sequence = seq;
        }
    }
    dec.action = dec.sequence[0];
    dec.nodes = counter.nodes;
    return dec;
}

RolloutDefenderStrategy::RolloutDefenderStrategy(GameModel model,
                                                 std::shared_ptr<const AttackerStrategy> opponent,
                                                 std::shared_ptr<const CostToGo> jbar,
                                                 RolloutConfig cfg, std::uint64_t seed)
    : model_(std::move(model)),
      opponent_(std::move(opponent)),
      jbar_(std::move(jbar)),
      cfg_(std::move(cfg)),
      seed_(seed) {}

double RolloutDefenderStrategy::stop_prob(const Belief& b) const {
    std::vector<std::int64_t> key = quantize_belief(b, kDecisionKeyScale);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Rng rng = Rng::child(seed_, fnv1a(key));
    RolloutDecision dec = rollout_defender(model_, b, *opponent_, *jbar_, cfg_, &rng);
    nodes_ += dec.nodes;
    double p = dec.action == Action::Stop ? 1.0 : 0.0;
    cache_.emplace(std::move(key), p);
    return p;
}

RolloutAttackerStrategy::RolloutAttackerStrategy(
    GameModel model, std::shared_ptr<const DefenderStrategy> opponent,
    std::shared_ptr<const AttackerStrategy> belief_conjecture,
    std::shared_ptr<const CostToGo> jbar, RolloutConfig cfg, std::uint64_t seed)
    : model_(std::move(model)),
      opponent_(std::move(opponent)),
      belief_conjecture_(std::move(belief_conjecture)),
      jbar_(std::move(jbar)),
      cfg_(std::move(cfg)),
      seed_(seed) {}

double RolloutAttackerStrategy::stop_prob(const Belief& b, int s) const {
    std::vector<std::int64_t> key = quantize_belief(b, kDecisionKeyScale);
    key.push_back(s);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Rng rng = Rng::child(seed_, fnv1a(key));
    RolloutDecision dec =
        rollout_attacker(model_, b, s, *opponent_, *belief_conjecture_, *jbar_, cfg_, &rng);
    nodes_ += dec.nodes;
    double p = dec.action == Action::Stop ? 1.0 : 0.0;
    cache_.emplace(std::move(key), p);
    return p;
}

}  // namespace aptsim
