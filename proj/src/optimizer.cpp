#include "aptsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "aptsim/errors.hpp"
#include "aptsim/stats.hpp"

namespace aptsim {

namespace {

enum SeedTag : std::uint64_t { kSeedSample = 1, kSeedEval = 2, kSeedProfile = 3 };

std::uint64_t stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t iter,
                     std::uint64_t k) {
    return mix_seed(mix_seed(mix_seed(seed, tag), iter), k);
}

double standard_normal(Rng& rng) {
    // Box-Muller; the log argument is kept away from zero.
    double u1 = 1.0 - rng.uniform();
    double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double truncated_gaussian(double mean, double std, double lo, double hi, Rng& rng) {
    if (std <= 0.0) return std::min(hi, std::max(lo, mean));
    for (int attempt = 0; attempt < 100; ++attempt) {
        double x = mean + std * standard_normal(rng);
        if (x >= lo && x <= hi) return x;
    }
    return std::min(hi, std::max(lo, mean + std * standard_normal(rng)));
}

Belief start_belief(const GameModel& m, const Belief& initial_belief) {
    if (initial_belief.empty()) return point_belief(m.num_states(), 0);
    validate_belief(initial_belief, m.num_states());
    return initial_belief;
}

}  // namespace

void CemConfig::validate(std::size_t dims) const {
    if (population < 1) throw ConfigError("cem: population must be at least 1");
    if (elite_fraction <= 0.0 || elite_fraction >= 1.0)
        throw ConfigError("cem: elite fraction must lie strictly between 0 and 1");
    if (eval_samples < 1) throw ConfigError("cem: eval_samples must be at least 1");
    if (eval_horizon < 1) throw ConfigError("cem: eval_horizon must be at least 1");
    if (max_iterations < 1) throw ConfigError("cem: max_iterations must be at least 1");
    if (!init_mean.empty() && init_mean.size() != dims)
        throw ConfigError("cem: init_mean dimension mismatch");
    if (!init_std.empty() && init_std.size() != dims)
        throw ConfigError("cem: init_std dimension mismatch");
    for (double s : init_std)
        if (s < 0.0) throw ConfigError("cem: negative init_std");
}

ParamBox ParamBox::unit(std::size_t dims) {
    ParamBox box;
    box.lo.assign(dims, 0.0);
    box.hi.assign(dims, 1.0);
    return box;
}

void ParamBox::validate() const {
    if (lo.empty() || lo.size() != hi.size())
        throw ConfigError("cem: parameter box dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) throw ConfigError("cem: parameter box has lo > hi");
}

std::string CemResult::csv_header() { return "iteration,mean,ci_low,ci_high"; }

std::string CemResult::csv_rows() const {
    std::ostringstream os;
    os << std::setprecision(9);
    for (const auto& pt : curve)
        os << pt.iteration << ',' << pt.mean_cost << ',' << pt.ci_low << ',' << pt.ci_high
           << '\n';
    return os.str();
}

CemResult cem_minimize(const CemObjective& objective, const ParamBox& box,
                       const CemConfig& cfg) {
    box.validate();
    const std::size_t dims = box.lo.size();
    cfg.validate(dims);

    std::vector<double> mean = cfg.init_mean;
    std::vector<double> std_dev = cfg.init_std;
    if (mean.empty()) {
        mean.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) mean[d] = 0.5 * (box.lo[d] + box.hi[d]);
    }
    if (std_dev.empty()) {
        std_dev.resize(dims);
        for (std::size_t d = 0; d < dims; ++d) std_dev[d] = (box.hi[d] - box.lo[d]) / 3.0;
    }

    const int n_elite =
        std::max(1, static_cast<int>(std::ceil(cfg.elite_fraction * cfg.population)));

    CemResult result;
    result.best_params = mean;
    result.best_cost = std::numeric_limits<double>::infinity();
    int plateau_streak = 0;

    struct Candidate {
        double cost;
        std::vector<double> params;
    };

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        std::vector<Candidate> pop(cfg.population);
        for (int k = 0; k < cfg.population; ++k) {
            Rng sample_rng(stream(cfg.seed, kSeedSample, iter, k));
            std::vector<double> params(dims);
            for (std::size_t d = 0; d < dims; ++d)
                params[d] =
                    truncated_gaussian(mean[d], std_dev[d], box.lo[d], box.hi[d], sample_rng);
            Rng eval_rng(stream(cfg.seed, kSeedEval, iter, k));
            pop[k] = {objective(params, eval_rng), std::move(params)};
        }

        std::stable_sort(pop.begin(), pop.end(), [](const Candidate& a, const Candidate& b) {
            if (a.cost != b.cost) return a.cost < b.cost;
            return a.params < b.params;
        });

        double prev_best = result.best_cost;
        if (pop.front().cost < result.best_cost) {
            result.best_cost = pop.front().cost;
            result.best_params = pop.front().params;
        }

        double pop_mean = 0.0;
        for (const auto& c : pop) pop_mean += c.cost;
        pop_mean /= cfg.population;
        double pop_var = 0.0;
        for (const auto& c : pop) pop_var += (c.cost - pop_mean) * (c.cost - pop_mean);
        double pop_sd = cfg.population > 1 ? std::sqrt(pop_var / (cfg.population - 1)) : 0.0;
        double hw = student_t_halfwidth(pop_sd, cfg.population);
        result.curve.push_back(
            {iter, pop_mean, pop_mean - hw, pop_mean + hw, result.best_cost});

        for (std::size_t d = 0; d < dims; ++d) {
            double em = 0.0;
            for (int k = 0; k < n_elite; ++k) em += pop[k].params[d];
            em /= n_elite;
            double ev = 0.0;
            for (int k = 0; k < n_elite; ++k)
                ev += (pop[k].params[d] - em) * (pop[k].params[d] - em);
            mean[d] = em;
            std_dev[d] = std::sqrt(ev / n_elite);
        }

        if (prev_best - result.best_cost <= cfg.plateau_tol)
            ++plateau_streak;
        else
            plateau_streak = 0;
        if (plateau_streak >= cfg.plateau_iters) {
            result.plateaued = true;
            break;
        }
    }
    return result;
}

CemResult cem_best_response_defender(const GameModel& m, const AttackerStrategy& opponent,
                                     const ParamBox& box, const CemConfig& cfg,
                                     const Belief& initial_belief) {
    m.validate();
    const Belief b0 = start_belief(m, initial_belief);
    auto objective = [&](const std::vector<double>& params, Rng& rng) {
        DefenderThreshold defender(params[0]);
        return evaluate_cost(m, defender, opponent, b0, cfg.eval_horizon, cfg.eval_samples,
                             rng)
            .mean;
    };
    return cem_minimize(objective, box, cfg);
}

CemResult cem_best_response_attacker(const GameModel& m, const DefenderStrategy& opponent,
                                     const ParamBox& box, const CemConfig& cfg,
                                     const Belief& initial_belief) {
    m.validate();
    const Belief b0 = start_belief(m, initial_belief);
    auto objective = [&](const std::vector<double>& params, Rng& rng) {
        AttackerThreshold attacker(params[0]);
        return -evaluate_cost(m, opponent, attacker, b0, cfg.eval_horizon, cfg.eval_samples,
                              rng)
                    .mean;
    };
    return cem_minimize(objective, box, cfg);
}

std::vector<ProfileCost> best_response_dynamics(const GameModel& m, double init_alpha,
                                                double init_beta, int rounds,
                                                const CemConfig& cfg,
                                                const Belief& initial_belief) {
    if (rounds < 1) throw ConfigError("best_response_dynamics: rounds must be at least 1");
    m.validate();
    const Belief b0 = start_belief(m, initial_belief);
    const ParamBox box = ParamBox::unit(1);

    double alpha = init_alpha;
    double beta = init_beta;
    std::vector<ProfileCost> history;

    auto record = [&](int half_round, char mover) {
        Rng rng(stream(cfg.seed, kSeedProfile, half_round, 0));
        McEstimate est = evaluate_cost(m, DefenderThreshold(alpha), AttackerThreshold(beta),
                                       b0, cfg.eval_horizon, cfg.eval_samples, rng);
        history.push_back({half_round, mover, alpha, beta, est.mean, est.stderror});
    };

    for (int r = 1; r <= rounds; ++r) {
        CemConfig cd = cfg;
        cd.seed = mix_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r));
        alpha = cem_best_response_defender(m, AttackerThreshold(beta), box, cd, b0)
                    .best_params[0];
        record(2 * r - 1, 'D');

        CemConfig ca = cfg;
        ca.seed = mix_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
        beta =
            cem_best_response_attacker(m, DefenderThreshold(alpha), box, ca, b0).best_params[0];
        record(2 * r, 'A');
    }
    return history;
}

}  // namespace aptsim
