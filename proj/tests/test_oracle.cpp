#include <doctest.h>

#include <cmath>

#include "gesched/index_oracle.hpp"
#include "gesched/rng.hpp"
#include "gesched/whittle.hpp"

using namespace gesched;

TEST_CASE("oracle matches the closed form on post-OFF states and the stationary state") {
    const ChannelModel m(0.2, 0.8, 0);
    IndexOracle oracle(m, OracleOptions{200, 1e-10, 1000000, 30, 0.0});

    CHECK(oracle.index_at(BeliefState{Obs::OFF, 1}, 1e-5) == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(oracle.index_at(BeliefState{Obs::OFF, 2}, 1e-5) ==
          doctest::Approx(11.0 / 28.0).epsilon(1e-3));
    CHECK(oracle.index_at(BeliefState::stationary(), 1e-5) ==
          doctest::Approx(5.0 / 7.0).epsilon(1e-3));
    CHECK(oracle.index_at(BeliefState::stationary(), 1e-5) ==
          doctest::Approx(whittle_index_value(m, BeliefState::stationary())).epsilon(1e-3));
}

TEST_CASE("oracle agrees with the closed form across random channels") {
    StreamRng rng(404, 0, 0);
    for (int trial = 0; trial < 3; ++trial) {
        const ChannelModel m(rng.uniform(0.06, 0.45), rng.uniform(0.55, 0.94), trial);
        IndexOracle oracle(m, OracleOptions{200, 1e-10, 1000000, 30, 0.0});
        for (int l : {1, 3, 7, 15}) {
            const BeliefState key{Obs::OFF, l};
            CHECK(std::fabs(oracle.index_at(key, 1e-5) - whittle_index_value(m, key)) <= 1e-3);
        }
        const BeliefState stat = BeliefState::stationary();
        CHECK(std::fabs(oracle.index_at(stat, 1e-5) - whittle_index_value(m, stat)) <= 1e-3);
    }
}

TEST_CASE("oracle is monotone in the belief") {
    const ChannelModel m(0.2, 0.8, 0);
    IndexOracle oracle(m, OracleOptions{100, 1e-10, 1000000, 30, 0.0});
    const double at_p11 = oracle.index_at(BeliefState{Obs::ON, 1}, 1e-5);
    CHECK(at_p11 >= oracle.index_at(BeliefState{Obs::OFF, 1}, 1e-5));
    CHECK(at_p11 >= oracle.index_at(BeliefState{Obs::OFF, 8}, 1e-5));
    CHECK(at_p11 >= oracle.index_at(BeliefState::stationary(), 1e-5));
}

TEST_CASE("measured subsidy on fresh post-ON states exceeds the plateau") {
    // The closed form assigns the whole [b_s, p11] interval one constant;
    // the optimality-equation oracle instead returns pi/(1 - p11 + pi) on
    // post-ON states, decaying to that constant as the belief ages. This
    // pins the measured behavior so the discrepancy stays visible.
    const ChannelModel m(0.2, 0.8, 0);
    IndexOracle oracle(m, OracleOptions{200, 1e-10, 1000000, 30, 0.0});
    for (int l : {1, 2, 5}) {
        const double pi = belief_closed_form(m, Obs::ON, l);
        const double expected = pi / (1.0 - m.p11 + pi);
        CHECK(oracle.index_at(BeliefState{Obs::ON, l}, 1e-6) ==
              doctest::Approx(expected).epsilon(1e-4));
    }
    CHECK(oracle.index_at(BeliefState{Obs::ON, 20}, 1e-6) ==
          doctest::Approx(whittle_index_value(m, BeliefState::stationary())).epsilon(1e-3));
}

TEST_CASE("oracle rejects keys beyond the truncation") {
    const ChannelModel m(0.2, 0.8, 0);
    IndexOracle oracle(m, OracleOptions{50, 1e-10, 1000000, 30, 0.0});
    CHECK_THROWS_AS(oracle.index_at(BeliefState{Obs::OFF, 51}, 1e-5), std::invalid_argument);
}
