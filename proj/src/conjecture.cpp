#include "aptsim/conjecture.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace aptsim {

std::vector<double> bayes_update(const std::vector<double>& prior,
                                 const std::vector<double>& likelihood,
                                 const PosteriorUpdateOptions& opts) {
    if (prior.size() != likelihood.size()) {
        throw ConfigError("bayes_update: prior and likelihood sizes differ");
    }
    std::vector<double> post(prior.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        if (!(likelihood[i] >= 0.0)) {
            throw ConfigError("bayes_update: negative or NaN likelihood");
        }
        double base = opts.forgetting == 1.0 ? prior[i] : std::pow(prior[i], opts.forgetting);
        post[i] = base * likelihood[i];
        norm += post[i];
    }
    if (norm <= 0.0) {
        if (opts.fallback == PosteriorFallback::KeepPrior) return prior;
        throw AllZeroLikelihoodError(
            "all candidate conjectures assign zero probability to the feedback");
    }
    for (double& w : post) w /= norm;
    return post;
}

void OccupancyMeasure::add(const Belief& b, double weight) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (beliefs_equal(atoms_[i], b, 1e-9)) {
            weights_[i] += weight;
            total_ += weight;
            return;
        }
    }
    atoms_.push_back(b);
    weights_.push_back(weight);
    total_ += weight;
}

std::vector<double> OccupancyMeasure::normalized_weights() const {
    std::vector<double> w = weights_;
    if (total_ > 0.0) {
        for (double& x : w) x /= total_;
    }
    return w;
}

namespace {

// sum_i p ln(p/q) with 0 ln 0 = 0 and p>0, q=0 giving +infinity.
double feedback_kl(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInfDiscrepancy;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(0.0, kl);
}

}  // namespace

double discrepancy(const std::vector<double>& nu_weights,
                   const std::vector<std::vector<double>>& p_true,
                   const std::vector<std::vector<double>>& p_conj) {
    if (nu_weights.size() != p_true.size() || nu_weights.size() != p_conj.size()) {
        throw ConfigError("discrepancy: mismatched atom counts");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < nu_weights.size(); ++i) {
        if (nu_weights[i] <= 0.0) continue;
        double kl = feedback_kl(p_true[i], p_conj[i]);
        if (kl == kInfDiscrepancy) return kInfDiscrepancy;
        total += nu_weights[i] * kl;
    }
    return total;
}

double discrepancy(const OccupancyMeasure& nu, const FeedbackKernel& true_kernel,
                   const FeedbackKernel& conj_kernel) {
    std::vector<double> w = nu.normalized_weights();
    std::vector<std::vector<double>> pt, pc;
    pt.reserve(nu.size());
    pc.reserve(nu.size());
    for (const Belief& b : nu.atoms()) {
        pt.push_back(true_kernel(b));
        pc.push_back(conj_kernel(b));
    }
    return discrepancy(w, pt, pc);
}

std::vector<int> consistent_set(const std::vector<double>& k_values, double tol) {
    if (k_values.empty()) return {};
    double best = kInfDiscrepancy;
    for (double k : k_values) best = std::min(best, k);
    std::vector<int> out;
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] == kInfDiscrepancy ? best == kInfDiscrepancy
                                           : k_values[i] <= best + tol) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

OccupancyMeasure EpisodeTrace::occupancy() const {
    OccupancyMeasure nu;
    for (const TraceRow& r : rows) nu.add(r.b);
    return nu;
}

double EpisodeTrace::discounted_cost(double gamma) const {
    double total = 0.0;
    double disc = 1.0;
    for (const TraceRow& r : rows) {
        total += disc * r.cost;
        disc *= gamma;
    }
    return total;
}

// ======================== Algorithm internals ========================

namespace {

std::vector<double> normalized_prior(const std::vector<double>& prior, std::size_t n,
                                     const char* what) {
    if (n == 0) throw ConfigError(std::string(what) + ": empty candidate set");
    std::vector<double> w = prior;
    if (w.empty()) w.assign(n, 1.0 / static_cast<double>(n));
    if (w.size() != n) throw ConfigError(std::string(what) + ": prior size mismatch");
    double sum = 0.0;
    for (double x : w) {
        if (!(x > 0.0)) throw ConfigError(std::string(what) + ": prior must be full support");
        sum += x;
    }
    for (double& x : w) x /= sum;
    return w;
}

int select_index(const std::vector<double>& weights, ConjectureSelection mode, Rng& rng) {
    if (mode == ConjectureSelection::Sample) return rng.categorical(weights);
    int best = 0;
    for (std::size_t i = 1; i < weights.size(); ++i) {
        if (weights[i] > weights[best]) best = static_cast<int>(i);
    }
    return best;
}

// Stream tags keeping every pooled object's seed on a distinct path from the
// master seed.
enum SeedTag : std::uint64_t {
    kSeedJbarD = 1,
    kSeedJbarA = 2,
    kSeedDefStar = 3,
    kSeedAttStar = 4,
    kSeedDefExec = 5,
    kSeedAttExec = 6,
    kSeedEnv = 7,
    kSeedSelect = 8,
};

// Stationary strategy objects, lazily built per conjectured model (and
// conjectured lookahead). Terminal cost-to-go estimators simulate the base
// strategy profile under the conjectured model; lookahead trees use the full
// conjectured opponent strategies. Seeds derive from structural indices only,
// so construction order cannot change any sampled value.
class StrategyPool {
public:
    StrategyPool(const Algorithm1Config& cfg) : cfg_(cfg) {}

    std::shared_ptr<const CostToGo> jbar_d(const GameModel& m, std::uint64_t key) {
        auto it = jbar_d_.find(key);
        if (it != jbar_d_.end()) return it->second;
        auto ptr = std::make_shared<CostToGo>(
            m, cfg_.defender_base, cfg_.attacker_base, +1.0, cfg_.ctg_samples,
            cfg_.ctg_horizon, stream(kSeedJbarD, key), belief_opts());
        jbar_d_.emplace(key, ptr);
        return ptr;
    }

    std::shared_ptr<const CostToGo> jbar_a(const GameModel& m, std::uint64_t key) {
        auto it = jbar_a_.find(key);
        if (it != jbar_a_.end()) return it->second;
        auto ptr = std::make_shared<CostToGo>(
            m, cfg_.defender_base, cfg_.attacker_base, -1.0, cfg_.ctg_samples,
            cfg_.ctg_horizon, stream(kSeedJbarA, key), belief_opts());
        jbar_a_.emplace(key, ptr);
        return ptr;
    }

    // Rollout of the defender base against the attacker base: the public
    // stand-in for the defender's previous strategy inside conjectures.
    std::shared_ptr<const DefenderStrategy> def_star(int di) {
        auto it = def_star_.find(di);
        if (it != def_star_.end()) return it->second;
        const GameModel& m = cfg_.theta_d.models[di];
        RolloutConfig rc = cfg_.rollout;
        rc.lookahead = cfg_.defender_lookahead;
        rc.belief_opts = belief_opts();
        auto ptr = std::make_shared<RolloutDefenderStrategy>(
            m, cfg_.attacker_base, jbar_d(m, di), rc, stream(kSeedDefStar, di));
        def_star_.emplace(di, ptr);
        return ptr;
    }

    // The conjectured attacker: rollout with candidate lookahead L[li] under
    // candidate model theta_d[di].
    std::shared_ptr<const AttackerStrategy> att_star(int di, int li) {
        auto key = std::make_pair(di, li);
        auto it = att_star_.find(key);
        if (it != att_star_.end()) return it->second;
        const GameModel& m = cfg_.theta_d.models[di];
        RolloutConfig rc = cfg_.rollout;
        rc.lookahead = cfg_.lookaheads.horizons[li];
        rc.belief_opts = belief_opts();
        auto ptr = std::make_shared<RolloutAttackerStrategy>(
            m, def_star(di), cfg_.attacker_base, jbar_a(m, di), rc,
            stream(kSeedAttStar, pack(di, li)));
        att_star_.emplace(key, ptr);
        return ptr;
    }

    // The defender's executed strategy: rollout against the conjectured
    // attacker under the sampled conjecture pair.
    std::shared_ptr<const DefenderStrategy> def_exec(int di, int li) {
        auto key = std::make_pair(di, li);
        auto it = def_exec_.find(key);
        if (it != def_exec_.end()) return it->second;
        const GameModel& m = cfg_.theta_d.models[di];
        RolloutConfig rc = cfg_.rollout;
        rc.lookahead = cfg_.defender_lookahead;
        rc.belief_opts = belief_opts();
        auto ptr = std::make_shared<RolloutDefenderStrategy>(
            m, att_star(di, li), jbar_d(m, di), rc, stream(kSeedDefExec, pack(di, li)));
        def_exec_.emplace(key, ptr);
        return ptr;
    }

    // The attacker's executed strategy: rollout under its own sampled model
    // against the defender's current strategy, with the defender's belief
    // filter conditioned on the defender's conjectured attacker.
    std::shared_ptr<const AttackerStrategy> att_exec(int ai, int di, int li) {
        auto key = std::make_tuple(ai, di, li);
        auto it = att_exec_.find(key);
        if (it != att_exec_.end()) return it->second;
        const GameModel& m = cfg_.theta_a.models[ai];
        RolloutConfig rc = cfg_.rollout;
        rc.lookahead = cfg_.attacker_lookahead;
        rc.belief_opts = belief_opts();
        auto ptr = std::make_shared<RolloutAttackerStrategy>(
            m, def_exec(di, li), att_star(di, li),
            jbar_a(m, (1ULL << 32) + static_cast<std::uint64_t>(ai)), rc,
            stream(kSeedAttExec, pack(ai, pack(di, li))));
        att_exec_.emplace(key, ptr);
        return ptr;
    }

private:
    BeliefUpdateOptions belief_opts() const {
        BeliefUpdateOptions o;
        o.fallback = cfg_.belief_fallback;
        o.reset_belief = cfg_.initial_belief;
        return o;
    }

    std::uint64_t stream(SeedTag tag, std::uint64_t idx) const {
        return mix_seed(mix_seed(cfg_.seed, tag), idx);
    }

    static std::uint64_t pack(std::uint64_t hi, std::uint64_t lo) {
        return (hi << 20) | lo;
    }

    const Algorithm1Config& cfg_;
    std::map<std::uint64_t, std::shared_ptr<const CostToGo>> jbar_d_, jbar_a_;
    std::map<int, std::shared_ptr<const DefenderStrategy>> def_star_;
    std::map<std::pair<int, int>, std::shared_ptr<const AttackerStrategy>> att_star_;
    std::map<std::pair<int, int>, std::shared_ptr<const DefenderStrategy>> def_exec_;
    std::map<std::tuple<int, int, int>, std::shared_ptr<const AttackerStrategy>> att_exec_;
};

}  // namespace

EpisodeTrace run_algorithm1(const Algorithm1Config& cfg) {
    cfg.model.validate();
    if (!cfg.defender_base || !cfg.attacker_base) {
        throw ConfigError("run_algorithm1: base strategies are required");
    }
    for (const GameModel& m : cfg.theta_d.models) m.validate();
    for (const GameModel& m : cfg.theta_a.models) m.validate();
    if (cfg.lookaheads.horizons.empty()) {
        throw ConfigError("run_algorithm1: empty lookahead candidate set");
    }
    for (int l : cfg.lookaheads.horizons) {
        if (l < 1) throw ConfigError("run_algorithm1: lookahead candidates must be >= 1");
    }
    if (cfg.horizon < 1) throw ConfigError("run_algorithm1: horizon must be >= 1");

    const std::size_t n_theta_d = cfg.theta_d.models.size();
    const std::size_t n_theta_a = cfg.theta_a.models.size();
    const std::size_t n_look = cfg.lookaheads.horizons.size();

    std::vector<double> rho_d = normalized_prior(cfg.theta_d.prior, n_theta_d, "theta_d");
    std::vector<double> rho_a = normalized_prior(cfg.theta_a.prior, n_theta_a, "theta_a");
    std::vector<double> mu = normalized_prior(cfg.lookaheads.prior, n_look, "lookaheads");

    Belief b = cfg.initial_belief.empty() ? point_belief(cfg.model.num_states(), 0)
                                          : cfg.initial_belief;
    validate_belief(b, cfg.model.num_states());

    Algorithm1Config pool_cfg = cfg;
    pool_cfg.initial_belief = b;
    StrategyPool pool(pool_cfg);

    Rng env = Rng::child(cfg.seed, kSeedEnv);
    Rng sel = Rng::child(cfg.seed, kSeedSelect);

    BeliefUpdateOptions bopts;
    bopts.fallback = cfg.belief_fallback;
    bopts.reset_belief = b;

    EpisodeTrace trace;
    trace.num_states = cfg.model.num_states();
    trace.mu_size = n_look;
    trace.rho_d_size = n_theta_d;
    trace.rho_a_size = n_theta_a;

    // Running discrepancy sums per candidate over the visited beliefs.
    std::vector<double> kl_sum_mu(n_look, 0.0);
    std::vector<double> kl_sum_rho(n_theta_d, 0.0);
    int kl_count = 0;

    // ---- t = 1: base strategies, no observation yet ----
    GameModel model_t = cfg.model;
    int s = env.categorical(b);
    int di = select_index(rho_d, cfg.selection, sel);
    int ai = select_index(rho_a, cfg.selection, sel);
    int li = select_index(mu, cfg.selection, sel);
    Action a_d = cfg.defender_base->sample(b, env);
    Action a_a = cfg.attacker_base->sample(b, s, env);

    TraceRow row;
    row.t = 1;
    row.s = s;
    row.a_d = a_d;
    row.a_a = a_a;
    row.o = -1;
    row.b = b;
    row.mu = mu;
    row.rho_d = rho_d;
    row.rho_a = rho_a;
    row.cost = cost(model_t, s, a_d);
    trace.rows.push_back(row);

    int s_next = sample_transition(model_t, s, a_d, a_a, env);

    int di_prev = di;
    int li_prev = li;
    Action a_d_prev = a_d;
    Action a_a_prev = a_a;
    bool first_update = true;  // the conjectured attacker starts as the base strategy

    for (int t = 2; t <= cfg.horizon; ++t) {
        if (cfg.schedule) model_t = cfg.schedule(t);
        int s_prev = s;
        s = s_next;
        int o = model_t.obs.sample(s, env);

        const GameModel& prev_model = cfg.theta_d.models[di_prev];

        // Defender's conjecture updates from the new observation. On the first
        // update the conjectured attacker is still the base strategy, so the
        // lookahead candidates are indistinguishable.
        std::vector<double> like_mu(n_look);
        for (std::size_t l2 = 0; l2 < n_look; ++l2) {
            const AttackerStrategy& conj =
                first_update ? *cfg.attacker_base
                             : *pool.att_star(di_prev, static_cast<int>(l2));
            like_mu[l2] = defender_feedback_likelihood(prev_model, b, a_d_prev, o, conj);
        }
        const AttackerStrategy& att_conj_prev =
            first_update ? static_cast<const AttackerStrategy&>(*cfg.attacker_base)
                         : *pool.att_star(di_prev, li_prev);
        std::vector<double> like_rho_d(n_theta_d);
        for (std::size_t i = 0; i < n_theta_d; ++i) {
            like_rho_d[i] = defender_feedback_likelihood(cfg.theta_d.models[i], b, a_d_prev,
                                                         o, att_conj_prev);
        }
        mu = bayes_update(mu, like_mu, cfg.posterior_opts);
        rho_d = bayes_update(rho_d, like_rho_d, cfg.posterior_opts);
        di = select_index(rho_d, cfg.selection, sel);
        li = select_index(mu, cfg.selection, sel);

        // Belief update under the sampled model and the previous conjectured
        // attacker strategy.
        b = belief_update(cfg.theta_d.models[di], b, a_d_prev, o, att_conj_prev, bopts);

        // Attacker's conjecture update; it observes the state directly.
        std::vector<double> like_rho_a(n_theta_a);
        for (std::size_t j = 0; j < n_theta_a; ++j) {
            like_rho_a[j] = attacker_feedback_likelihood(cfg.theta_a.models[j], s_prev,
                                                         a_d_prev, a_a_prev, s, o);
        }
        rho_a = bayes_update(rho_a, like_rho_a, cfg.posterior_opts);
        ai = select_index(rho_a, cfg.selection, sel);

        // Strategy improvement and action selection.
        auto defender = pool.def_exec(di, li);
        auto attacker = pool.att_exec(ai, di, li);
        a_d = defender->sample(b, env);
        a_a = attacker->sample(b, s, env);

        row = TraceRow();
        row.t = t;
        row.s = s;
        row.a_d = a_d;
        row.a_a = a_a;
        row.o = o;
        row.b = b;
        row.mu = mu;
        row.rho_d = rho_d;
        row.rho_a = rho_a;
        row.cost = cost(model_t, s, a_d);

        if (cfg.diagnostics) {
            std::vector<double> p_true =
                defender_feedback_distribution(model_t, b, a_d, *attacker);
            for (std::size_t l2 = 0; l2 < n_look; ++l2) {
                std::vector<double> p_conj = defender_feedback_distribution(
                    cfg.theta_d.models[di], b, a_d, *pool.att_star(di, static_cast<int>(l2)));
                double kl = feedback_kl(p_true, p_conj);
                kl_sum_mu[l2] =
                    kl == kInfDiscrepancy ? kInfDiscrepancy : kl_sum_mu[l2] + kl;
            }
            const AttackerStrategy& att_now = *pool.att_star(di, li);
            for (std::size_t i = 0; i < n_theta_d; ++i) {
                std::vector<double> p_conj =
                    defender_feedback_distribution(cfg.theta_d.models[i], b, a_d, att_now);
                double kl = feedback_kl(p_true, p_conj);
                kl_sum_rho[i] =
                    kl == kInfDiscrepancy ? kInfDiscrepancy : kl_sum_rho[i] + kl;
            }
            ++kl_count;
            double k_mu = 0.0, k_rho = 0.0;
            for (std::size_t l2 = 0; l2 < n_look; ++l2) {
                if (mu[l2] > 0.0) k_mu += mu[l2] * kl_sum_mu[l2] / kl_count;
            }
            for (std::size_t i = 0; i < n_theta_d; ++i) {
                if (rho_d[i] > 0.0) k_rho += rho_d[i] * kl_sum_rho[i] / kl_count;
            }
            row.k_expected_mu = k_mu;
            row.k_expected_rho_d = k_rho;
        }
        trace.rows.push_back(row);

        s_next = sample_transition(model_t, s, a_d, a_a, env);
        di_prev = di;
        li_prev = li;
        a_d_prev = a_d;
        a_a_prev = a_a;
        first_update = false;
    }
    return trace;
}

}  // namespace aptsim
