#include "aptsim/equilibrium.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "aptsim/errors.hpp"

namespace aptsim {

namespace {

constexpr double kParamTol = 1e-12;

}  // namespace

Example1Result example1_oracle(double gamma, double p, double q, double rho_identity) {
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("example1_oracle: gamma must be in [0,1)");
    for (double v : {p, q, rho_identity})
        if (v < 0.0 || v > 1.0)
            throw ConfigError("example1_oracle: p, q and rho_identity must be in [0,1]");

    Example1Result r;

    // Base profile on belief states {0,1}: nobody stops at belief 0, the
    // defender stops at belief 1 and collects the stop bonus.
    r.stage_cost = {0.0, -1.0};
    // Belief chain per conjecture: from belief 0 an alarm (probability q under
    // the identity conjecture, p under the flipped one) jumps the belief to 1,
    // and the stop at belief 1 resets it.
    r.chain_identity = {{{1.0 - q, q}, {1.0, 0.0}}};
    r.chain_flipped = {{{1.0 - p, p}, {1.0, 0.0}}};

    const double denom_q = (gamma - 1.0) * (1.0 + gamma * q);
    const double denom_p = (gamma - 1.0) * (1.0 + gamma * p);
    assert(std::abs(denom_q) > kParamTol && std::abs(denom_p) > kParamTol);
    r.j_identity = {gamma * q / denom_q, (1.0 + gamma * (q - 1.0)) / denom_q};
    r.j_flipped = {gamma * p / denom_p, (1.0 + gamma * (p - 1.0)) / denom_p};

    // Minimal-discrepancy membership. The conjectures only disagree with the
    // truth (and with each other) when the observation channel is degenerate:
    // a perfectly informative channel singles out the matching conjecture,
    // a perfectly misleading one singles out the flipped conjecture, and in
    // every other case both attain the same discrepancy.
    const bool perfectly_informative = p < kParamTol && q > 1.0 - kParamTol;
    const bool perfectly_misleading = p > 1.0 - kParamTol && q < kParamTol;
    if (perfectly_informative) {
        r.identity_consistent = true;
        r.flipped_consistent = false;
    } else if (perfectly_misleading) {
        r.identity_consistent = false;
        r.flipped_consistent = true;
    } else {
        r.identity_consistent = true;
        r.flipped_consistent = true;
    }

    const double denom_nu = 1.0 + p + rho_identity * (q - p);
    if (denom_nu > kParamTol) {
        double nu0 = 1.0 / denom_nu;
        if (nu0 >= -kParamTol && nu0 <= 1.0 + kParamTol)
            r.nu0 = std::min(1.0, std::max(0.0, nu0));
    }

    if (perfectly_misleading) {
        r.equilibrium_exists = false;
        r.note =
            "stationarity of the belief occupancy requires full posterior mass on the "
            "identity conjecture, but only the flipped conjecture is consistent";
    } else {
        r.equilibrium_exists = true;
    }
    return r;
}

std::vector<double> chain_value(const std::vector<std::vector<double>>& P,
                                const std::vector<double>& c, double gamma) {
    const std::size_t n = P.size();
    if (n == 0 || c.size() != n) throw ConfigError("chain_value: dimension mismatch");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("chain_value: gamma must be in [0,1)");
    for (const auto& row : P) {
        if (row.size() != n) throw ConfigError("chain_value: matrix must be square");
        double sum = 0.0;
        for (double v : row) {
            if (v < -kProbTol) throw ConfigError("chain_value: negative transition probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ConfigError("chain_value: matrix rows must sum to 1");
    }

    // Gaussian elimination with partial pivoting on (I - gamma P) J = c.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            a[i][j] = (i == j ? 1.0 : 0.0) - gamma * P[i][j];
        a[i][n] = c[i];
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a[i][col]) > std::abs(a[pivot][col])) pivot = i;
        assert(std::abs(a[pivot][col]) > kParamTol);  // I - gamma P is invertible for gamma < 1
        std::swap(a[col], a[pivot]);
        for (std::size_t i = col + 1; i < n; ++i) {
            double f = a[i][col] / a[col][col];
            for (std::size_t j = col; j <= n; ++j) a[i][j] -= f * a[col][j];
        }
    }
    std::vector<double> sol(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double v = a[i][n];
        for (std::size_t j = i + 1; j < n; ++j) v -= a[i][j] * sol[j];
        sol[i] = v / a[i][i];
    }

    for (std::size_t i = 0; i < n; ++i) {
        double bellman = c[i];
        for (std::size_t j = 0; j < n; ++j) bellman += gamma * P[i][j] * sol[j];
        if (std::abs(sol[i] - bellman) > 1e-10)
            throw NonConvergenceError("chain_value: Bellman residual above 1e-10");
    }
    return sol;
}

// ---- Belief-grid value iteration ----

namespace {

double interp(const std::vector<double>& grid_values, double x) {
    const std::size_t n = grid_values.size();
    double pos = std::min(1.0, std::max(0.0, x)) * static_cast<double>(n - 1);
    std::size_t i0 = std::min(n - 2, static_cast<std::size_t>(pos));
    double frac = pos - static_cast<double>(i0);
    return (1.0 - frac) * grid_values[i0] + frac * grid_values[i0 + 1];
}

double interp_state(const std::vector<std::vector<double>>& grid_values, double x, int s) {
    const std::size_t n = grid_values.size();
    double pos = std::min(1.0, std::max(0.0, x)) * static_cast<double>(n - 1);
    std::size_t i0 = std::min(n - 2, static_cast<std::size_t>(pos));
    double frac = pos - static_cast<double>(i0);
    return (1.0 - frac) * grid_values[i0][s] + frac * grid_values[i0 + 1][s];
}

void check_grid_args(const GameModel& m, int grid_points, double tol) {
    m.validate();
    if (m.num_servers != 1)
        throw ConfigError("grid value iteration only supports single-server games");
    if (grid_points < 11) throw ConfigError("grid value iteration needs at least 11 points");
    if (tol <= 0.0) throw ConfigError("grid value iteration needs a positive tolerance");
}

double second_difference_bound(const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        worst = std::max(worst, std::abs(v[i - 1] - 2.0 * v[i] + v[i + 1]));
    return worst / 8.0;
}

}  // namespace

int GridValueFunction::policy_switches() const {
    int switches = 0;
    for (std::size_t i = 1; i < policy.size(); ++i)
        if (policy[i] != policy[i - 1]) ++switches;
    return switches;
}

GridValueFunction grid_value_iteration(const GameModel& m, const AttackerStrategy& attacker,
                                       int grid_points, double tol, int max_iters) {
    check_grid_args(m, grid_points, tol);

    GridValueFunction out;
    out.grid.resize(grid_points);
    for (int i = 0; i < grid_points; ++i)
        out.grid[i] = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    out.values.assign(grid_points, 0.0);
    out.policy.assign(grid_points, Action::Continue);

    BeliefUpdateOptions opts;  // only positive-probability branches are visited

    std::vector<double> next(grid_points, 0.0);
    for (int iter = 1; iter <= max_iters; ++iter) {
        for (int i = 0; i < grid_points; ++i) {
            const double x = out.grid[i];
            const Belief b = {1.0 - x, x};
            double action_value[2];
            for (Action a_d : {Action::Continue, Action::Stop}) {
                double stage = (1.0 - x) * cost(m, 0, a_d) + x * cost(m, 1, a_d);
                double cont = 0.0;
                std::vector<double> pd = defender_feedback_distribution(m, b, a_d, attacker);
                for (int o = 0; o < m.obs.num_obs(); ++o) {
                    if (pd[o] <= kProbTol) continue;
                    Belief b2 = belief_update(m, b, a_d, o, attacker, opts);
                    cont += pd[o] * interp(out.values, b2[1]);
                }
                action_value[static_cast<int>(a_d)] = stage + m.gamma * cont;
            }
            next[i] = std::min(action_value[0], action_value[1]);
            out.policy[i] =
                action_value[1] < action_value[0] - kParamTol ? Action::Stop : Action::Continue;
        }
        double residual = 0.0;
        for (int i = 0; i < grid_points; ++i)
            residual = std::max(residual, std::abs(next[i] - out.values[i]));
        out.values = next;
        out.iterations = iter;
        out.residual = residual;
        out.residual_history.push_back(residual);
        if (residual < tol) {
            out.interpolation_error_bound = second_difference_bound(out.values);
            return out;
        }
    }
    throw NonConvergenceError("grid_value_iteration: residual " + std::to_string(out.residual) +
                              " after " + std::to_string(max_iters) + " sweeps");
}

AttackerGridValueFunction grid_value_iteration_attacker(
    const GameModel& m, const DefenderStrategy& defender,
    const AttackerStrategy& filter_conjecture, int grid_points, double tol, int max_iters) {
    check_grid_args(m, grid_points, tol);
    const int num_states = m.num_states();
    const int num_obs = m.obs.num_obs();

    AttackerGridValueFunction out;
    out.grid.resize(grid_points);
    for (int i = 0; i < grid_points; ++i)
        out.grid[i] = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    out.values.assign(grid_points, std::vector<double>(num_states, 0.0));
    out.policy.assign(grid_points, std::vector<Action>(num_states, Action::Continue));

    // When the observed feedback is impossible under the filter's conjecture
    // the tracked belief restarts from the clean state, mirroring play.
    BeliefUpdateOptions opts;
    opts.fallback = BeliefFallback::ResetToPrior;
    opts.reset_belief = point_belief(num_states, 0);

    auto next = out.values;
    for (int iter = 1; iter <= max_iters; ++iter) {
        for (int i = 0; i < grid_points; ++i) {
            const double x = out.grid[i];
            const Belief b = {1.0 - x, x};
            const double wd = defender.stop_prob(b);

            // The attacker's next belief coordinate depends on the defender's
            // action and the observation only; cache it per (a_d, o).
            std::vector<std::vector<double>> next_x(2, std::vector<double>(num_obs, 0.0));
            for (Action a_d : {Action::Continue, Action::Stop}) {
                double w = a_d == Action::Stop ? wd : 1.0 - wd;
                if (w <= kProbTol) continue;
                for (int o = 0; o < num_obs; ++o) {
                    Belief b2 = belief_update(m, b, a_d, o, filter_conjecture, opts);
                    next_x[static_cast<int>(a_d)][o] = b2[1];
                }
            }

            for (int s = 0; s < num_states; ++s) {
                double action_value[2];
                for (Action a_a : {Action::Continue, Action::Stop}) {
                    double total = 0.0;
                    for (Action a_d : {Action::Continue, Action::Stop}) {
                        double w = a_d == Action::Stop ? wd : 1.0 - wd;
                        if (w <= kProbTol) continue;
                        double stage = -cost(m, s, a_d);
                        std::vector<double> td = transition_dist(m, s, a_d, a_a);
                        double cont = 0.0;
                        for (int s2 = 0; s2 < num_states; ++s2) {
                            if (td[s2] <= kProbTol) continue;
                            for (int o = 0; o < num_obs; ++o) {
                                double po = m.obs.prob(o, s2);
                                if (po <= kProbTol) continue;
                                cont += td[s2] * po *
                                        interp_state(out.values,
                                                     next_x[static_cast<int>(a_d)][o], s2);
                            }
                        }
                        total += w * (stage + m.gamma * cont);
                    }
                    action_value[static_cast<int>(a_a)] = total;
                }
                next[i][s] = std::min(action_value[0], action_value[1]);
                out.policy[i][s] = action_value[1] < action_value[0] - kParamTol
                                       ? Action::Stop
                                       : Action::Continue;
            }
        }
        double residual = 0.0;
        for (int i = 0; i < grid_points; ++i)
            for (int s = 0; s < num_states; ++s)
                residual = std::max(residual, std::abs(next[i][s] - out.values[i][s]));
        out.values = next;
        out.iterations = iter;
        out.residual = residual;
        if (residual < tol) return out;
    }
    throw NonConvergenceError("grid_value_iteration_attacker: residual " +
                              std::to_string(out.residual) + " after " +
                              std::to_string(max_iters) + " sweeps");
}

// ---- Berk-Nash diagnostics ----

namespace {

GameModel posterior_mean_model(const std::vector<GameModel>& models,
                               const std::vector<double>& weights) {
    if (models.empty() || models.size() != weights.size())
        throw ConfigError("posterior and candidate space sizes do not match");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("negative posterior weight");
        total += w;
    }
    if (total <= 0.0) throw ConfigError("posterior has no mass");

    GameModel out = models[0];
    out.p_attack = 0.0;
    std::vector<std::vector<double>> rows(models[0].obs.num_states(),
                                          std::vector<double>(models[0].obs.num_obs(), 0.0));
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double w = weights[i] / total;
        if (models[i].num_servers != out.num_servers ||
            models[i].obs.num_obs() != models[0].obs.num_obs())
            throw ConfigError("candidate models must share state and observation spaces");
        out.p_attack += w * models[i].p_attack;
        for (int s = 0; s < models[i].obs.num_states(); ++s)
            for (int o = 0; o < models[i].obs.num_obs(); ++o)
                rows[s][o] += w * models[i].obs.prob(o, s);
    }
    out.obs = ObservationModel(rows);
    return out;
}

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double mass_outside(const std::vector<double>& posterior, const std::vector<int>& kept) {
    std::set<int> in(kept.begin(), kept.end());
    double total = 0.0, outside = 0.0;
    for (std::size_t i = 0; i < posterior.size(); ++i) {
        total += posterior[i];
        if (!in.count(static_cast<int>(i))) outside += posterior[i];
    }
    return total > 0.0 ? outside / total : 0.0;
}

// KL between two finite feedback distributions with the usual conventions.
double kernel_kl(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInfDiscrepancy;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

Action decide_defender(const DefenderStrategy& d, const Belief& b) {
    return d.stop_prob(b) >= 0.5 ? Action::Stop : Action::Continue;
}

Action decide_attacker(const AttackerStrategy& a, const Belief& b, int s) {
    return a.stop_prob(b, s) >= 0.5 ? Action::Stop : Action::Continue;
}

// Joint distribution over (next state, observation) seen by the attacker.
std::vector<double> attacker_kernel(const GameModel& m, int s, Action a_d, Action a_a) {
    const int num_states = m.num_states();
    const int num_obs = m.obs.num_obs();
    std::vector<double> td = transition_dist(m, s, a_d, a_a);
    std::vector<double> joint(static_cast<std::size_t>(num_states) * num_obs, 0.0);
    for (int s2 = 0; s2 < num_states; ++s2)
        for (int o = 0; o < num_obs; ++o)
            joint[static_cast<std::size_t>(s2) * num_obs + o] = td[s2] * m.obs.prob(o, s2);
    return joint;
}

}  // namespace

std::string BerkNashReport::to_text() const {
    std::ostringstream os;
    os << std::setprecision(9);
    os << "bounded_rationality_gap " << bounded_rationality_gap << "\n"
       << "consistency_gap " << consistency_gap << "\n"
       << "stationarity_residual " << stationarity_residual << "\n"
       << "tolerance " << tolerance << "\n"
       << "verdict " << (verdict ? "equilibrium" : "no-equilibrium") << "\n"
       << "tail_rows " << tail_rows << "\n";
    return os.str();
}

std::string BerkNashReport::csv_header() {
    return "bounded_rationality_gap,consistency_gap,stationarity_residual,tolerance,verdict,"
           "tail_rows";
}

std::string BerkNashReport::csv_row() const {
    std::ostringstream os;
    os << std::setprecision(9);
    os << bounded_rationality_gap << ',' << consistency_gap << ',' << stationarity_residual
       << ',' << tolerance << ',' << (verdict ? 1 : 0) << ',' << tail_rows;
    return os.str();
}

BerkNashReport berk_nash_check(const EpisodeTrace& trace, const BerkNashInput& in) {
    const int total = static_cast<int>(trace.rows.size());
    if (total < in.min_rows)
        throw InsufficientDataError("berk_nash_check: trace has " + std::to_string(total) +
                                    " rows, needs " + std::to_string(in.min_rows));
    if (in.theta_d.empty() || in.theta_a.empty() || in.lookaheads.empty())
        throw ConfigError("berk_nash_check: empty candidate space");
    if (!in.defender_base || !in.attacker_base)
        throw ConfigError("berk_nash_check: base strategies are required");
    in.true_model.validate();
    for (const auto& m : in.theta_d) m.validate();
    for (const auto& m : in.theta_a) m.validate();

    const TraceRow& last = trace.rows.back();
    if (last.rho_d.size() != in.theta_d.size() || last.mu.size() != in.lookaheads.size() ||
        last.rho_a.size() != in.theta_a.size())
        throw ConfigError("berk_nash_check: trace posteriors do not match the candidate spaces");

    const int window = std::min(in.window, total);
    const int start = total - window;

    BerkNashReport report;
    report.tolerance = in.tolerance;
    report.tail_rows = window;

    // The conjectured world the tail is checked against: posterior-mean model
    // parameters and the most probable opponent lookahead.
    GameModel td_hat = posterior_mean_model(in.theta_d, last.rho_d);
    GameModel ta_hat = posterior_mean_model(in.theta_a, last.rho_a);
    const int l_hat = in.lookaheads[argmax_index(last.mu)];

    BeliefUpdateOptions bop;
    bop.fallback = BeliefFallback::ResetToPrior;
    bop.reset_belief = trace.rows.front().b;

    RolloutConfig rc_d = in.rollout;
    rc_d.lookahead = in.defender_lookahead;
    rc_d.belief_opts = bop;
    RolloutConfig rc_l = in.rollout;
    rc_l.lookahead = l_hat;
    rc_l.belief_opts = bop;
    RolloutConfig rc_a = in.rollout;
    rc_a.lookahead = in.attacker_lookahead;
    rc_a.belief_opts = bop;

    auto jd = std::make_shared<CostToGo>(td_hat, in.defender_base, in.attacker_base, +1.0,
                                         in.ctg_samples, in.ctg_horizon,
                                         mix_seed(in.seed, 0xB001), bop);
    auto ja = std::make_shared<CostToGo>(td_hat, in.defender_base, in.attacker_base, -1.0,
                                         in.ctg_samples, in.ctg_horizon,
                                         mix_seed(in.seed, 0xB002), bop);
    auto ja_att = std::make_shared<CostToGo>(ta_hat, in.defender_base, in.attacker_base, -1.0,
                                             in.ctg_samples, in.ctg_horizon,
                                             mix_seed(in.seed, 0xB003), bop);

    auto dstar = std::make_shared<RolloutDefenderStrategy>(td_hat, in.attacker_base, jd, rc_d,
                                                           mix_seed(in.seed, 0xB004));
    auto astar = std::make_shared<RolloutAttackerStrategy>(td_hat, dstar, in.attacker_base, ja,
                                                           rc_l, mix_seed(in.seed, 0xB005));
    auto dexec = std::make_shared<RolloutDefenderStrategy>(td_hat, astar, jd, rc_d,
                                                           mix_seed(in.seed, 0xB006));
    auto aexec = std::make_shared<RolloutAttackerStrategy>(ta_hat, dexec, astar, ja_att, rc_a,
                                                           mix_seed(in.seed, 0xB007));

    // (i) Bounded rationality: replay the tail decisions under the conjectured
    // world and measure how much a one-step deviation would have saved.
    Rng rg(mix_seed(in.seed, 0xB008));
    std::set<std::vector<std::int64_t>> seen_d, seen_a;
    for (int i = start; i < total; ++i) {
        const TraceRow& row = trace.rows[i];
        auto key = quantize_belief(row.b, 1e9);
        auto kd = key;
        kd.push_back(static_cast<int>(row.a_d));
        if (seen_d.insert(kd).second) {
            RolloutDecision dd = rollout_defender(td_hat, row.b, *astar, *jd, rc_d, &rg);
            double best = std::min(dd.value[0], dd.value[1]);
            report.bounded_rationality_gap = std::max(
                report.bounded_rationality_gap, dd.value[static_cast<int>(row.a_d)] - best);
        }
        auto ka = key;
        ka.push_back(row.s);
        ka.push_back(100 + static_cast<int>(row.a_a));
        if (seen_a.insert(ka).second) {
            RolloutDecision da =
                rollout_attacker(ta_hat, row.b, row.s, *dexec, *astar, *ja_att, rc_a, &rg);
            double best = std::min(da.value[0], da.value[1]);
            report.bounded_rationality_gap = std::max(
                report.bounded_rationality_gap, da.value[static_cast<int>(row.a_a)] - best);
        }
    }

    // Tail occupancy over beliefs, and over (belief, state) pairs for the
    // attacker-side kernels.
    OccupancyMeasure nu;
    std::vector<std::pair<Belief, int>> state_atoms;
    std::vector<double> state_weights;
    for (int i = start; i < total; ++i) {
        const TraceRow& row = trace.rows[i];
        nu.add(row.b);
        bool merged = false;
        for (std::size_t k = 0; k < state_atoms.size(); ++k) {
            if (state_atoms[k].second == row.s &&
                beliefs_equal(state_atoms[k].first, row.b)) {
                state_weights[k] += 1.0;
                merged = true;
                break;
            }
        }
        if (!merged) {
            state_atoms.emplace_back(row.b, row.s);
            state_weights.push_back(1.0);
        }
    }
    const std::vector<double> nu_w = nu.normalized_weights();
    const auto& atoms = nu.atoms();

    // (ii) Consistency: discrepancy of every candidate against the true
    // feedback kernel over the tail occupancy, then the posterior mass that
    // falls outside the minimizing set.
    std::vector<Action> atom_action(atoms.size());
    std::vector<std::vector<double>> p_true(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        atom_action[k] = decide_defender(*dexec, atoms[k]);
        p_true[k] =
            defender_feedback_distribution(in.true_model, atoms[k], atom_action[k], *aexec);
    }

    std::vector<double> k_rho(in.theta_d.size(), 0.0);
    for (std::size_t i = 0; i < in.theta_d.size(); ++i) {
        // The candidate's conjectured attacker, built exactly like the live
        // pipeline's: a rollout under the candidate model at the most probable
        // lookahead, against a defender improved under that same model.
        auto jd_i = std::make_shared<CostToGo>(in.theta_d[i], in.defender_base,
                                               in.attacker_base, +1.0, in.ctg_samples,
                                               in.ctg_horizon,
                                               mix_seed(in.seed, 0xC000 + i), bop);
        auto ja_i = std::make_shared<CostToGo>(in.theta_d[i], in.defender_base,
                                               in.attacker_base, -1.0, in.ctg_samples,
                                               in.ctg_horizon,
                                               mix_seed(in.seed, 0xD000 + i), bop);
        auto dstar_i = std::make_shared<RolloutDefenderStrategy>(
            in.theta_d[i], in.attacker_base, jd_i, rc_d, mix_seed(in.seed, 0xE000 + i));
        RolloutAttackerStrategy astar_i(in.theta_d[i], dstar_i, in.attacker_base, ja_i, rc_l,
                                        mix_seed(in.seed, 0xF000 + i));
        std::vector<std::vector<double>> p_conj(atoms.size());
        for (std::size_t k = 0; k < atoms.size(); ++k)
            p_conj[k] =
                defender_feedback_distribution(in.theta_d[i], atoms[k], atom_action[k], astar_i);
        k_rho[i] = discrepancy(nu_w, p_true, p_conj);
    }
    double gap_rho = mass_outside(last.rho_d, consistent_set(k_rho));

    // Lookahead candidates share the posterior-mean model and differ only in
    // the conjectured attacker's horizon.
    std::vector<double> k_mu(in.lookaheads.size(), 0.0);
    for (std::size_t j = 0; j < in.lookaheads.size(); ++j) {
        RolloutConfig rc_j = rc_l;
        rc_j.lookahead = in.lookaheads[j];
        RolloutAttackerStrategy astar_j(td_hat, dstar, in.attacker_base, ja, rc_j,
                                        mix_seed(in.seed, 0xA100 + j));
        std::vector<std::vector<double>> p_conj(atoms.size());
        for (std::size_t k = 0; k < atoms.size(); ++k)
            p_conj[k] = defender_feedback_distribution(td_hat, atoms[k], atom_action[k], astar_j);
        k_mu[j] = discrepancy(nu_w, p_true, p_conj);
    }
    double gap_mu = mass_outside(last.mu, consistent_set(k_mu));

    // Attacker-side kernels are closed forms over (next state, observation).
    double weight_total = 0.0;
    for (double w : state_weights) weight_total += w;
    std::vector<double> k_rho_a(in.theta_a.size(), 0.0);
    for (std::size_t k = 0; k < state_atoms.size(); ++k) {
        const Belief& b = state_atoms[k].first;
        const int s = state_atoms[k].second;
        const double w = state_weights[k] / weight_total;
        Action a_d = decide_defender(*dexec, b);
        Action a_a = decide_attacker(*aexec, b, s);
        std::vector<double> true_joint = attacker_kernel(in.true_model, s, a_d, a_a);
        for (std::size_t i = 0; i < in.theta_a.size(); ++i) {
            if (k_rho_a[i] == kInfDiscrepancy) continue;
            double kl = kernel_kl(true_joint, attacker_kernel(in.theta_a[i], s, a_d, a_a));
            k_rho_a[i] = kl == kInfDiscrepancy ? kInfDiscrepancy : k_rho_a[i] + w * kl;
        }
    }
    double gap_rho_a = mass_outside(last.rho_a, consistent_set(k_rho_a));

    report.consistency_gap = std::max({gap_rho, gap_mu, gap_rho_a});

    // (iii) Stationarity: push the tail occupancy once through the conjectured
    // belief kernel and compare in total variation.
    OccupancyMeasure push;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const Belief& b = atoms[k];
        Action a_d = atom_action[k];
        std::vector<double> pd = defender_feedback_distribution(td_hat, b, a_d, *astar);
        for (int o = 0; o < td_hat.obs.num_obs(); ++o) {
            if (pd[o] <= kProbTol) continue;
            Belief b2 = belief_update(td_hat, b, a_d, o, *astar, bop);
            push.add(b2, nu_w[k] * pd[o]);
        }
    }
    const auto& push_atoms = push.atoms();
    const std::vector<double> push_w = push.normalized_weights();
    std::vector<bool> matched(push_atoms.size(), false);
    double tv = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        double pushed = 0.0;
        for (std::size_t j = 0; j < push_atoms.size(); ++j) {
            if (!matched[j] && beliefs_equal(atoms[k], push_atoms[j])) {
                pushed = push_w[j];
                matched[j] = true;
                break;
            }
        }
        tv += std::abs(nu_w[k] - pushed);
    }
    for (std::size_t j = 0; j < push_atoms.size(); ++j)
        if (!matched[j]) tv += push_w[j];
    report.stationarity_residual = 0.5 * tv;

    report.verdict = report.bounded_rationality_gap <= in.tolerance &&
                     report.consistency_gap <= in.tolerance &&
                     report.stationarity_residual <= in.tolerance;
    return report;
}

}  // namespace aptsim
