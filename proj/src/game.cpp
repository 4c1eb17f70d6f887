#include "aptsim/game.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace aptsim {

namespace {

void validate_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ConfigError("observation model has no rows");
    const std::size_t width = rows[0].size();
    if (width == 0) throw ConfigError("observation model has empty rows");
    for (std::size_t s = 0; s < rows.size(); ++s) {
        if (rows[s].size() != width) {
            throw ConfigError("observation model rows have unequal lengths");
        }
        double sum = 0.0;
        for (double p : rows[s]) {
            if (!(p >= 0.0)) {
                throw ConfigError("observation probability negative or NaN in row " +
                                  std::to_string(s));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTol) {
            throw ConfigError("observation row " + std::to_string(s) +
                              " sums to " + std::to_string(sum));
        }
    }
}

double beta_binomial_pmf(int n, double a, double b, int k) {
    // C(n,k) * B(k+a, n-k+b) / B(a,b), evaluated in log space.
    double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    double log_beta_num = std::lgamma(k + a) + std::lgamma(n - k + b) - std::lgamma(n + a + b);
    double log_beta_den = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp(log_choose + log_beta_num - log_beta_den);
}

}  // namespace

ObservationModel::ObservationModel(std::vector<std::vector<double>> rows) : z_(std::move(rows)) {
    validate_rows(z_);
}

ObservationModel ObservationModel::uniform(int num_states, int num_obs) {
    std::vector<std::vector<double>> rows(
        num_states, std::vector<double>(num_obs, 1.0 / num_obs));
    return ObservationModel(std::move(rows));
}

ObservationModel ObservationModel::identity(int num_states) {
    std::vector<std::vector<double>> rows(num_states, std::vector<double>(num_states, 0.0));
    for (int s = 0; s < num_states; ++s) rows[s][s] = 1.0;
    return ObservationModel(std::move(rows));
}

ObservationModel ObservationModel::beta_binomial(int num_states, int n,
                                                 const std::vector<double>& alpha,
                                                 const std::vector<double>& beta) {
    if (static_cast<int>(alpha.size()) != num_states ||
        static_cast<int>(beta.size()) != num_states) {
        throw ConfigError("beta_binomial needs one (alpha, beta) pair per state");
    }
    std::vector<std::vector<double>> rows(num_states, std::vector<double>(n + 1));
    for (int s = 0; s < num_states; ++s) {
        if (!(alpha[s] > 0.0) || !(beta[s] > 0.0)) {
            throw ConfigError("beta_binomial parameters must be positive");
        }
        double sum = 0.0;
        for (int k = 0; k <= n; ++k) {
            rows[s][k] = beta_binomial_pmf(n, alpha[s], beta[s], k);
            sum += rows[s][k];
        }
        for (int k = 0; k <= n; ++k) rows[s][k] /= sum;  // absorb rounding residue
    }
    return ObservationModel(std::move(rows));
}

ObservationModel ObservationModel::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open observation model file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (!ss.eof()) throw ConfigError("bad token in observation model file: " + path);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("observation model file is empty: " + path);
    return ObservationModel(std::move(rows));
}

int ObservationModel::sample(int s, Rng& rng) const {
    return rng.categorical(z_[s]);
}

bool is_tp2(const std::vector<std::vector<double>>& m, double tol) {
    const int rows = static_cast<int>(m.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(m[0].size());
    for (int s = 0; s < rows; ++s) {
        for (int sp = s + 1; sp < rows; ++sp) {
            for (int o = 0; o < cols; ++o) {
                for (int op = o + 1; op < cols; ++op) {
                    if (m[s][o] * m[sp][op] - m[s][op] * m[sp][o] < -tol) return false;
                }
            }
        }
    }
    return true;
}

void GameModel::validate() const {
    if (num_servers < 1) throw ConfigError("num_servers must be >= 1");
    if (!(p_attack >= 0.0 && p_attack <= 1.0)) throw ConfigError("p_attack must be in [0,1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
    if (!(cost_params.exponent > 0.0)) throw ConfigError("cost exponent must be positive");
    if (obs.num_states() != num_states()) {
        throw ConfigError("observation model has " + std::to_string(obs.num_states()) +
                          " rows, expected " + std::to_string(num_states()));
    }
}

double cost(const GameModel& m, int s, Action a_d) {
    if (a_d == Action::Stop) {
        return m.cost_params.stop_base - m.cost_params.stop_bonus * (s > 0 ? 1.0 : 0.0);
    }
    return std::pow(static_cast<double>(s), m.cost_params.exponent);
}

std::vector<double> transition_dist(const GameModel& m, int s, Action a_d, Action a_a) {
    std::vector<double> dist(m.num_states(), 0.0);
    if (a_d == Action::Stop) {
        dist[0] = 1.0;
    } else if (a_a == Action::Continue) {
        dist[s] = 1.0;
    } else {
        int up = std::min(s + 1, m.num_servers);
        dist[s] += 1.0 - m.p_attack;
        dist[up] += m.p_attack;
    }
    return dist;
}

int sample_transition(const GameModel& m, int s, Action a_d, Action a_a, Rng& rng) {
    if (a_d == Action::Stop) return 0;
    if (a_a == Action::Continue) return s;
    if (rng.bernoulli(m.p_attack)) return std::min(s + 1, m.num_servers);
    return s;
}

void validate_belief(const Belief& b, int num_states) {
    if (static_cast<int>(b.size()) != num_states) {
        throw ConfigError("belief has " + std::to_string(b.size()) + " entries, expected " +
                          std::to_string(num_states));
    }
    double sum = 0.0;
    for (double p : b) {
        if (!(p >= 0.0)) throw ConfigError("belief entry negative or NaN");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol) {
        throw ConfigError("belief sums to " + std::to_string(sum));
    }
}

bool beliefs_equal(const Belief& a, const Belief& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > tol) return false;
    }
    return true;
}

}  // namespace aptsim
