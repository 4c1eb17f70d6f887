#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "aptsim/game.hpp"
#include "aptsim/strategy.hpp"

using namespace aptsim;

namespace {

GameModel make_model(int num_servers, double p_attack, ObservationModel obs) {
    GameModel m;
    m.num_servers = num_servers;
    m.p_attack = p_attack;
    m.obs = std::move(obs);
    return m;
}

// Direct evaluation of the filter's defining sums, written independently of
// the production code path.
Belief enumerate_posterior(const GameModel& m, const Belief& b, Action a_d, int o,
                           const AttackerStrategy& attacker) {
    const int n = m.num_states();
    Belief post(n, 0.0);
    double total = 0.0;
    for (int s2 = 0; s2 < n; ++s2) {
        double mass = 0.0;
        for (int s = 0; s < n; ++s) {
            double ps = attacker.stop_prob(b, s);
            for (Action a_a : {Action::Continue, Action::Stop}) {
                double w = a_a == Action::Stop ? ps : 1.0 - ps;
                mass += w * b[s] * transition_dist(m, s, a_d, a_a)[s2];
            }
        }
        post[s2] = m.obs.prob(o, s2) * mass;
        total += post[s2];
    }
    REQUIRE(total > 0.0);
    for (double& v : post) v /= total;
    return post;
}

}  // namespace

TEST_CASE("transition law") {
    GameModel m = make_model(10, 0.1, ObservationModel::uniform(11, 3));

    SUBCASE("defender stop resets the state") {
        auto d = transition_dist(m, 3, Action::Stop, Action::Continue);
        CHECK(d[0] == 1.0);
        for (int s = 1; s <= 10; ++s) CHECK(d[s] == 0.0);
        auto d2 = transition_dist(m, 3, Action::Stop, Action::Stop);
        CHECK(d2[0] == 1.0);
    }

    SUBCASE("attack advances with the compromise probability") {
        auto d = transition_dist(m, 3, Action::Continue, Action::Stop);
        CHECK(d[3] == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(d[4] == doctest::Approx(0.1).epsilon(1e-15));
    }

    SUBCASE("both continue holds the state") {
        auto d = transition_dist(m, 7, Action::Continue, Action::Continue);
        CHECK(d[7] == 1.0);
    }

    SUBCASE("attack at the last server clamps") {
        GameModel one = make_model(1, 1.0, ObservationModel::uniform(2, 2));
        auto d = transition_dist(one, 1, Action::Continue, Action::Stop);
        CHECK(d[1] == 1.0);
    }

    SUBCASE("every distribution is normalized and supported on {0, s, s+1}") {
        for (int s = 0; s <= 10; ++s)
            for (Action a_d : {Action::Continue, Action::Stop})
                for (Action a_a : {Action::Continue, Action::Stop}) {
                    auto d = transition_dist(m, s, a_d, a_a);
                    double sum = 0.0;
                    for (int s2 = 0; s2 <= 10; ++s2) {
                        sum += d[s2];
                        if (d[s2] > 0.0)
                            CHECK((s2 == 0 || s2 == s || s2 == std::min(s + 1, 10)));
                    }
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
                }
    }
}

TEST_CASE("stage cost") {
    GameModel m = make_model(16, 0.5, ObservationModel::uniform(17, 2));

    CHECK(cost(m, 2, Action::Continue) == doctest::Approx(2.378414230005442).epsilon(1e-15));
    CHECK(cost(m, 3, Action::Continue) == doctest::Approx(3.9482220388574776).epsilon(1e-15));
    CHECK(cost(m, 4, Action::Continue) == doctest::Approx(5.656854249492381).epsilon(1e-15));
    CHECK(cost(m, 16, Action::Continue) == doctest::Approx(32.0).epsilon(1e-15));
    CHECK(cost(m, 0, Action::Continue) == 0.0);

    CHECK(cost(m, 0, Action::Stop) == 1.0);
    for (int s = 1; s <= 16; ++s) CHECK(cost(m, s, Action::Stop) == -1.0);

    double prev = -1.0;
    for (int s = 0; s <= 16; ++s) {
        CHECK(cost(m, s, Action::Continue) >= prev);
        prev = cost(m, s, Action::Continue);
    }
}

TEST_CASE("observation models") {
    SUBCASE("beta binomial rows are normalized and match direct evaluation") {
        auto obs = ObservationModel::beta_binomial(2, 10, {0.7, 1.0}, {3.0, 0.7});
        CHECK(obs.num_obs() == 11);
        for (int s = 0; s < 2; ++s) {
            double sum = 0.0;
            for (int o = 0; o <= 10; ++o) sum += obs.prob(o, s);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(obs.prob(0, 0) == doctest::Approx(0.34906206662217965).epsilon(1e-12));
        CHECK(obs.prob(3, 0) == doctest::Approx(0.1019578563688237).epsilon(1e-12));
        CHECK(obs.prob(10, 1) == doctest::Approx(0.17121255852442704).epsilon(1e-12));
        CHECK(obs.prob(0, 1) == doctest::Approx(0.06542056074766382).epsilon(1e-12));
    }

    SUBCASE("the default alert channel is totally positive of order 2") {
        std::vector<double> alpha = {0.7, 1.0, 1.0};
        std::vector<double> beta = {3.0, 0.7, 0.7};
        auto obs = ObservationModel::beta_binomial(3, 10, alpha, beta);
        CHECK(is_tp2(obs.matrix()));
    }

    SUBCASE("tp2 on the textbook matrices") {
        CHECK(is_tp2({{1.0, 0.0}, {0.0, 1.0}}));
        CHECK(is_tp2({{0.5, 0.5}, {0.5, 0.5}}));
        CHECK_FALSE(is_tp2({{0.1, 0.9}, {0.9, 0.1}}));
    }

    SUBCASE("identity and uniform factories") {
        auto id = ObservationModel::identity(3);
        CHECK(id.prob(2, 2) == 1.0);
        CHECK(id.prob(1, 2) == 0.0);
        auto uni = ObservationModel::uniform(2, 4);
        CHECK(uni.prob(3, 0) == doctest::Approx(0.25));
    }

    SUBCASE("matrix file round trip with comments") {
        const char* path = "obs_roundtrip.txt";
        {
            std::ofstream out(path);
            out << "# alarm channel\n0.8 0.2\n# compromised row\n0.3 0.7\n";
        }
        auto obs = ObservationModel::from_file(path);
        CHECK(obs.num_states() == 2);
        CHECK(obs.prob(1, 0) == doctest::Approx(0.2));
        CHECK(obs.prob(0, 1) == doctest::Approx(0.3));
        std::remove(path);
    }

    SUBCASE("invalid rows are rejected") {
        CHECK_THROWS_AS(ObservationModel({{0.5, 0.4}}), ConfigError);
        CHECK_THROWS_AS(ObservationModel({{1.2, -0.2}}), ConfigError);
        CHECK_THROWS_AS(ObservationModel({{1.0}, {0.5, 0.5}}), ConfigError);
    }
}

TEST_CASE("model validation") {
    GameModel m = make_model(2, 0.5, ObservationModel::uniform(3, 2));
    CHECK_NOTHROW(m.validate());

    GameModel bad = m;
    bad.num_servers = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = m;
    bad.p_attack = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = m;
    bad.gamma = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = m;
    bad.obs = ObservationModel::uniform(2, 2);  // one row short
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("belief update") {
    SUBCASE("defender stop forces the clean-state posterior") {
        GameModel m = make_model(3, 0.7, ObservationModel::uniform(4, 3));
        Belief b = {0.1, 0.2, 0.3, 0.4};
        AttackerConstant attacker(0.5);
        for (int o = 0; o < 3; ++o) {
            Belief post = belief_update(m, b, Action::Stop, o, attacker);
            CHECK(post[0] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("certain attack from an even prior concentrates on compromise") {
        GameModel m = make_model(1, 1.0, ObservationModel::uniform(2, 2));
        AttackerConstant attacker(1.0);
        Belief post = belief_update(m, {0.5, 0.5}, Action::Continue, 0, attacker);
        CHECK(post[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(post[1] == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("a passive attacker leaves the clean point mass in place") {
        GameModel m = make_model(1, 1.0, ObservationModel::beta_binomial(2, 4, {0.7, 1.0},
                                                                         {3.0, 0.7}));
        AttackerConstant attacker(0.0);
        for (int o = 0; o < 5; ++o) {
            Belief post = belief_update(m, {1.0, 0.0}, Action::Continue, o, attacker);
            CHECK(post[0] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("matches direct enumeration on randomized small games") {
        Rng rng(20240811);
        for (int rep = 0; rep < 60; ++rep) {
            int n_servers = 1 + static_cast<int>(rng.u64() % 3);
            int n_obs = 2 + static_cast<int>(rng.u64() % 3);
            int n = n_servers + 1;
            std::vector<std::vector<double>> rows(n, std::vector<double>(n_obs));
            for (auto& row : rows) {
                double sum = 0.0;
                for (double& v : row) {
                    v = 0.05 + rng.uniform();
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            GameModel m = make_model(n_servers, rng.uniform(), ObservationModel(rows));
            std::vector<double> stop_probs(n);
            for (double& v : stop_probs) v = rng.uniform();
            TabularAttacker attacker(stop_probs);

            Belief b(n);
            double sum = 0.0;
            for (double& v : b) {
                v = 0.01 + rng.uniform();
                sum += v;
            }
            for (double& v : b) v /= sum;

            Action a_d = rng.bernoulli(0.3) ? Action::Stop : Action::Continue;
            int o = static_cast<int>(rng.u64() % n_obs);
            Belief got = belief_update(m, b, a_d, o, attacker);
            Belief want = enumerate_posterior(m, b, a_d, o, attacker);
            for (int s = 0; s < n; ++s) CHECK(got[s] == doctest::Approx(want[s]).epsilon(1e-10));
        }
    }

    SUBCASE("impossible feedback raises or resets per the fallback") {
        GameModel m = make_model(1, 1.0, ObservationModel::identity(2));
        AttackerConstant passive(0.0);
        // The state stays clean, so an alarm for state 1 has zero likelihood.
        CHECK_THROWS_AS(belief_update(m, {1.0, 0.0}, Action::Continue, 1, passive),
                        ZeroLikelihoodError);

        BeliefUpdateOptions opts;
        opts.fallback = BeliefFallback::ResetToPrior;
        opts.reset_belief = {0.25, 0.75};
        Belief post = belief_update(m, {1.0, 0.0}, Action::Continue, 1, passive, opts);
        CHECK(post[0] == doctest::Approx(0.25));
        CHECK(post[1] == doctest::Approx(0.75));
    }

    SUBCASE("feedback distribution matches the update normalizer") {
        GameModel m = make_model(2, 0.4, ObservationModel::beta_binomial(3, 4, {0.7, 1.0, 1.0},
                                                                         {3.0, 0.7, 0.7}));
        AttackerConstant attacker(0.3);
        Belief b = {0.6, 0.3, 0.1};
        auto pd = defender_feedback_distribution(m, b, Action::Continue, attacker);
        double total = 0.0;
        for (double v : pd) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(defender_feedback_likelihood(m, b, Action::Continue, 2, attacker) ==
              doctest::Approx(pd[2]).epsilon(1e-15));
    }
}

TEST_CASE("sampling") {
    SUBCASE("transition frequencies match the law") {
        GameModel m = make_model(1, 0.5, ObservationModel::uniform(2, 2));
        Rng rng(42);
        int advanced = 0;
        const int trials = 100000;
        for (int i = 0; i < trials; ++i)
            if (sample_transition(m, 0, Action::Continue, Action::Stop, rng) == 1) ++advanced;
        double frac = static_cast<double>(advanced) / trials;
        CHECK(frac == doctest::Approx(0.5).epsilon(0.02));
    }

    SUBCASE("a zero compromise probability never advances the state") {
        GameModel m = make_model(3, 0.0, ObservationModel::uniform(4, 2));
        Rng rng(7);
        int s = 0;
        for (int i = 0; i < 1000; ++i) {
            s = sample_transition(m, s, Action::Continue, Action::Stop, rng);
            CHECK(s == 0);
        }
    }

    SUBCASE("a defender stop lands in the clean state") {
        GameModel m = make_model(3, 1.0, ObservationModel::uniform(4, 2));
        Rng rng(9);
        CHECK(sample_transition(m, 2, Action::Stop, Action::Continue, rng) == 0);
    }

    SUBCASE("identical seeds reproduce identical draws") {
        auto obs = ObservationModel::beta_binomial(2, 6, {0.7, 1.0}, {3.0, 0.7});
        Rng a(123), b(123);
        for (int i = 0; i < 200; ++i) CHECK(obs.sample(1, a) == obs.sample(1, b));
    }
}

TEST_CASE("belief helpers") {
    CHECK_THROWS_AS(validate_belief({0.5, 0.4}, 2), ConfigError);
    CHECK_THROWS_AS(validate_belief({1.5, -0.5}, 2), ConfigError);
    CHECK_THROWS_AS(validate_belief({1.0}, 2), ConfigError);
    CHECK_NOTHROW(validate_belief({0.25, 0.75}, 2));

    Belief p = point_belief(4, 2);
    CHECK(p[2] == 1.0);
    CHECK(prob_compromised(p) == 1.0);
    CHECK(prob_compromised(point_belief(4, 0)) == 0.0);

    CHECK(beliefs_equal({0.5, 0.5}, {0.5 + 1e-10, 0.5 - 1e-10}));
    CHECK_FALSE(beliefs_equal({0.5, 0.5}, {0.6, 0.4}));
}
