#include <doctest.h>

#include <cmath>
#include <vector>

#include "gesched/calibration.hpp"
#include "gesched/rng.hpp"
#include "gesched/whittle.hpp"

using namespace gesched;

namespace {

// Independent Monte Carlo estimate of the single-user active fraction under
// the same threshold rule, driving a real channel realization.
double mc_active_fraction(const ChannelModel& m, int tau, double threshold, double rho,
                          double weight, long slots, std::uint64_t seed) {
    const TruncatedBeliefSpace space(tau);
    StreamRng rng(seed, 0, 0);
    int c = rng.bernoulli(m.stationary_belief()) ? 1 : 0;
    int s = space.index_of(BeliefState::stationary());
    long active = 0;
    for (long t = 0; t < slots; ++t) {
        const double v = weight * whittle_index_value(m, space.key(s));
        const bool act = v > threshold || (v == threshold && rng.bernoulli(rho));
        if (act) {
            ++active;
            s = space.index_of(BeliefState{c == 1 ? Obs::ON : Obs::OFF, 1});
        } else {
            s = space.aged_successor(s);
        }
        c = rng.bernoulli(c == 1 ? m.p11 : m.p01) ? 1 : 0;
    }
    return static_cast<double>(active) / static_cast<double>(slots);
}

std::vector<ChannelModel> random_models(int n, std::uint64_t seed) {
    StreamRng rng(seed, 0, 0);
    std::vector<ChannelModel> out;
    for (int u = 0; u < n; ++u)
        out.emplace_back(rng.uniform(0.06, 0.45), rng.uniform(0.55, 0.94), u);
    return out;
}

} // namespace

TEST_CASE("active fraction saturates at the threshold extremes") {
    const ChannelModel m(0.2, 0.8, 0);
    const TruncatedBeliefSpace space(10);
    CHECK(active_fraction(m, space, 2.0, 1.0, 1.0) == 0.0);  // above every weighted index
    CHECK(active_fraction(m, space, 0.0, 1.0, 1.0) == 1.0);  // below every weighted index
    CHECK(active_fraction(m, space, 0.0, 0.0, 2.5) == 1.0);
}

TEST_CASE("active fraction matches a slot-level Monte Carlo run") {
    const ChannelModel m(0.2, 0.8, 0);
    const TruncatedBeliefSpace space(10);
    const double analytic = active_fraction(m, space, 0.21, 1.0, 1.0);
    CHECK(analytic > 0.0);
    CHECK(analytic < 1.0);
    const double mc = mc_active_fraction(m, 10, 0.21, 1.0, 1.0, 10000000, 99);
    CHECK(std::fabs(analytic - mc) <= 1e-3);
}

TEST_CASE("active fraction is monotone in threshold and rho") {
    const ChannelModel m(0.25, 0.75, 0);
    const TruncatedBeliefSpace space(8);
    double prev = 1.0;
    for (double thr : {0.1, 0.3, 0.4, 0.55, 0.62, 0.9}) {
        const double f = active_fraction(m, space, thr, 1.0, 1.0);
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
    const double plateau = whittle_index_value(m, BeliefState::stationary());
    double prev_rho = 0.0;
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double f = active_fraction(m, space, plateau, rho, 1.0);
        CHECK(f >= prev_rho - 1e-12);
        prev_rho = f;
    }
}

TEST_CASE("solve_rho endpoints and self-consistency") {
    const ChannelModel m(0.2, 0.8, 0);
    const TruncatedBeliefSpace space(10);
    const double plateau = whittle_index_value(m, BeliefState::stationary());
    const double f0 = active_fraction(m, space, plateau, 0.0, 1.0);
    const double f1 = active_fraction(m, space, plateau, 1.0, 1.0);
    REQUIRE(f0 < f1);

    CHECK(solve_rho(m, space, plateau, f1, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(solve_rho(m, space, plateau, f0, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    const double target = 0.5 * (f0 + f1);
    const double rho = solve_rho(m, space, plateau, target, 1.0);
    CHECK(std::fabs(active_fraction(m, space, plateau, rho, 1.0) - target) <= 1e-10);

    CHECK_THROWS_AS(solve_rho(m, space, plateau, f1 + 0.05, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_rho(m, space, plateau, f0 - 0.05, 1.0), std::invalid_argument);
}

TEST_CASE("calibration with a slack budget is degenerate") {
    const auto models = random_models(6, 17);
    const std::vector<double> w(6, 1.0);
    const CalibrationResult c = calibrate(models, w, 10, 6);
    CHECK(c.degenerate);
    CHECK(c.omega_tau == 0.0);
    CHECK(c.rho_tau == 1.0);
    for (double t : c.tx_time) CHECK(t == 1.0);
    CHECK(c.total_time == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("two identical users split a unit budget evenly") {
    const std::vector<ChannelModel> models{ChannelModel(0.2, 0.8, 0), ChannelModel(0.2, 0.8, 1)};
    const std::vector<double> w{1.0, 1.0};
    const CalibrationResult c = calibrate(models, w, 10, 1);
    CHECK(!c.degenerate);
    CHECK(c.tx_time[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c.tx_time[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(c.total_time == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.rho_tau >= 0.0);
    CHECK(c.rho_tau <= 1.0);
}

TEST_CASE("heterogeneous calibration hits the budget exactly") {
    const auto models = random_models(10, 23);
    const std::vector<double> w(10, 1.0);
    const CalibrationResult c = calibrate(models, w, 10, 3);
    CHECK(std::fabs(c.total_time - 3.0) <= 1e-9);
    for (double t : c.tx_time) {
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
    }
    CHECK(c.marginal_user >= 0);
    CHECK(!c.marginal_set.empty());
}

TEST_CASE("weighted calibration hits the budget exactly") {
    const auto models = random_models(12, 31);
    StreamRng rng(77, 1, 0);
    std::vector<double> w;
    for (int u = 0; u < 12; ++u) w.push_back(rng.uniform(0.2, 4.0));
    const CalibrationResult c = calibrate(models, w, 12, 4);
    CHECK(std::fabs(c.total_time - 4.0) <= 1e-9);
}

TEST_CASE("zero-weight users never transmit") {
    auto models = random_models(5, 41);
    std::vector<double> w{1.0, 0.0, 2.0, 0.0, 1.5};
    const CalibrationResult c = calibrate(models, w, 8, 2);
    CHECK(c.tx_time[1] == 0.0);
    CHECK(c.tx_time[3] == 0.0);
    CHECK(std::fabs(c.total_time - 2.0) <= 1e-9);
    for (const auto& e : c.marginal_set) {
        CHECK(e.user != 1);
        CHECK(e.user != 3);
    }
}

TEST_CASE("users whose top index sits below the threshold get zero time") {
    // One user with a much weaker weight than three strong ones.
    const std::vector<ChannelModel> models{
        ChannelModel(0.2, 0.8, 0), ChannelModel(0.2, 0.8, 1), ChannelModel(0.2, 0.8, 2),
        ChannelModel(0.2, 0.8, 3)};
    const std::vector<double> w{1.0, 1.0, 1.0, 1e-4};
    const CalibrationResult c = calibrate(models, w, 10, 1);
    const double top_weak = 1e-4 * whittle_index_value(models[3], BeliefState::stationary());
    REQUIRE(top_weak < c.omega_tau);
    CHECK(c.tx_time[3] == 0.0);
}

TEST_CASE("invalid budgets are rejected") {
    const auto models = random_models(4, 53);
    const std::vector<double> w(4, 1.0);
    CHECK_THROWS_AS(calibrate(models, w, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(calibrate(models, w, 10, -2), std::invalid_argument);
    CHECK_THROWS_AS(calibrate(models, w, 10, 5), std::invalid_argument);
}

TEST_CASE("calibrated pair reproduces the budget through fresh evaluations") {
    // Re-evaluate every user's fraction from (omega_tau, rho_tau, marginal
    // set) alone and check the sum lands on the budget.
    const auto models = random_models(8, 61);
    const std::vector<double> w(8, 1.0);
    const int budget = 3;
    const CalibrationResult c = calibrate(models, w, 10, budget);
    const TruncatedBeliefSpace space(10);
    double total = 0.0;
    for (int u = 0; u < 8; ++u) {
        bool tied = false;
        for (const auto& e : c.marginal_set) tied |= e.user == u;
        total += active_fraction(models[u], space, c.omega_tau, tied ? c.rho_tau : 0.0, w[u]);
    }
    CHECK(std::fabs(total - budget) <= 1e-9);
}
