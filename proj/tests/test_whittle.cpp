#include <doctest.h>

#include <cmath>
#include <vector>

#include "gesched/rng.hpp"
#include "gesched/whittle.hpp"

using namespace gesched;

TEST_CASE("index at the freshest post-OFF belief equals p01") {
    const ChannelModel m(0.2, 0.8, 0);
    CHECK(whittle_index_value(m, BeliefState{Obs::OFF, 1}) ==
          doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("hand-evaluated post-OFF index at age 2") {
    // pi = 0.32, Q(pi) = 0.392: ((pi-Q)*3 + Q) / (0.2 + (pi-Q)*2 + Q) = 11/28.
    const ChannelModel m(0.2, 0.8, 0);
    CHECK(whittle_index_value(m, BeliefState{Obs::OFF, 2}) ==
          doctest::Approx(11.0 / 28.0).epsilon(1e-12));
}

TEST_CASE("plateau value is shared by stationary and post-ON states") {
    const ChannelModel m(0.2, 0.8, 0);
    const double plateau = 0.2 / ((1.0 - 0.8) * (1.0 + 0.2 - 0.8) + 0.2); // 5/7
    CHECK(whittle_index_value(m, BeliefState::stationary()) ==
          doctest::Approx(plateau).epsilon(1e-14));
    for (int l = 1; l <= 30; ++l)
        CHECK(whittle_index_value(m, BeliefState{Obs::ON, l}) == plateau);
}

TEST_CASE("weighted index scales the unweighted value") {
    const ChannelModel m(0.2, 0.8, 0);
    const BeliefState bs = BeliefState::stationary();
    CHECK(weighted_index(m, bs, 0.0).value == 0.0);
    CHECK(weighted_index(m, BeliefState{Obs::OFF, 3}, 0.0).value == 0.0);
    CHECK(weighted_index(m, bs, 1.0).value == whittle_index_value(m, bs));
    CHECK(weighted_index(m, bs, 3.5).value == doctest::Approx(3.5 * 5.0 / 7.0).epsilon(1e-12));
    CHECK_THROWS_AS(weighted_index(m, bs, -1.0), std::invalid_argument);
}

TEST_CASE("index is monotone in the belief and bounded in [0,1]") {
    StreamRng rng(31, 0, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const double p01 = rng.uniform(0.06, 0.45);
        const double p11 = rng.uniform(0.55, 0.94);
        const ChannelModel m(p01, p11, 0);
        const double plateau = whittle_index_value(m, BeliefState::stationary());
        // Below the age where the geometric term drops under double
        // resolution the branch is strictly increasing; beyond it the value
        // saturates at the plateau.
        const int lmax =
            std::min(60, static_cast<int>(std::log(1e-13) / std::log(m.p11 - m.p01)));
        double prev = 0.0;
        for (int l = 1; l <= lmax; ++l) {
            const double w = whittle_index_value(m, BeliefState{Obs::OFF, l});
            CHECK(w > prev); // strictly increasing along the post-OFF branch
            CHECK(w < plateau);
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            prev = w;
        }
        for (int l = lmax + 1; l <= 60; ++l) {
            const double w = whittle_index_value(m, BeliefState{Obs::OFF, l});
            CHECK(w >= prev - 1e-12);
            CHECK(w <= plateau + 1e-12);
            prev = w;
        }
        CHECK(plateau <= 1.0);
        CHECK(plateau < m.p11);
    }
}

TEST_CASE("post-OFF branch converges to the plateau value") {
    StreamRng rng(32, 0, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const double p01 = rng.uniform(0.06, 0.45);
        const double p11 = rng.uniform(0.55, 0.94);
        const ChannelModel m(p01, p11, 0);
        const double plateau = whittle_index_value(m, BeliefState::stationary());
        const double tail = whittle_index_value(m, BeliefState{Obs::OFF, 200});
        CHECK(std::fabs(tail - plateau) <= 1e-6);
    }
}

TEST_CASE("common weight scaling preserves the cross-user ranking") {
    StreamRng rng(33, 0, 0);
    std::vector<ChannelModel> models;
    std::vector<BeliefState> beliefs;
    std::vector<double> weights;
    for (int u = 0; u < 8; ++u) {
        models.emplace_back(rng.uniform(0.06, 0.45), rng.uniform(0.55, 0.94), u);
        beliefs.push_back(u % 2 ? BeliefState{Obs::OFF, 1 + u} : BeliefState{Obs::ON, 1 + u});
        weights.push_back(rng.uniform(0.1, 5.0));
    }
    auto ranking = [&](double scale) {
        std::vector<int> order(models.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = weighted_index(models[a], beliefs[a], scale * weights[a]).value;
            const double vb = weighted_index(models[b], beliefs[b], scale * weights[b]).value;
            if (va != vb) return va > vb;
            return a < b;
        });
        return order;
    };
    CHECK(ranking(1.0) == ranking(7.25));
    CHECK(ranking(1.0) == ranking(0.035));
}
