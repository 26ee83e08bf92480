#pragma once

#include <cstdint>
#include <vector>

#include "gesched/belief_space.hpp"
#include "gesched/channel.hpp"
#include "gesched/whittle.hpp"

namespace gesched {

/// One (user, belief-key-class) entry whose weighted index equals the
/// calibrated threshold. A plateau entry stands for the whole class of
/// states at or above the stationary belief (post-ON and never-observed),
/// which all share one index value; an OFF entry names a single key.
struct MarginalEntry {
    int user = -1;
    bool plateau = false;
    std::int64_t off_age = 0;

    bool matches(const BeliefState& truncated_key) const {
        if (plateau) return truncated_key.last_obs != Obs::OFF;
        return truncated_key.last_obs == Obs::OFF && truncated_key.age == off_age;
    }
};

/// Output of the threshold calibration: the threshold omega_tau, the
/// randomization rho_tau applied at states whose weighted index equals it,
/// and the per-user long-run active fractions the pair induces.
struct CalibrationResult {
    double omega_tau = 0.0;
    double rho_tau = 1.0;
    int marginal_user = -1;
    std::vector<MarginalEntry> marginal_set;
    std::vector<double> tx_time;
    double total_time = 0.0;
    int tau = 0;
    int budget = 0;
    bool degenerate = false; // budget covers every user with positive weight

    /// True iff (user, key) randomizes at rho_tau under the calibrated policy.
    bool is_marginal(int user, const BeliefState& truncated_key) const {
        for (const auto& e : marginal_set)
            if (e.user == user && e.matches(truncated_key)) return true;
        return false;
    }
};

/// Long-run fraction of slots a single user is active under the policy
/// "active if weighted index > threshold, active w.p. rho if equal, passive
/// below", evaluated on the truncated belief chain (active states jump to a
/// fresh post-feedback state, passive states age by one slot, saturating at
/// the stationary state). Exact stationary solve; the all-passive and
/// all-active cases short-circuit to 0 and 1.
double active_fraction(const ChannelModel& model, const TruncatedBeliefSpace& space,
                       double threshold, double rho, double weight);

/// Solve for the rho that makes active_fraction hit target_fraction at the
/// given threshold. Throws if the target lies outside
/// [active_fraction(rho=0), active_fraction(rho=1)].
double solve_rho(const ChannelModel& model, const TruncatedBeliefSpace& space,
                 double threshold, double target_fraction, double weight);

/// Threshold calibration: enumerate all weighted index values over the
/// truncated spaces, sort ascending, and raise the threshold through them
/// until the summed active fractions cross the budget; the crossing value
/// becomes omega_tau and rho_tau is solved so the total matches the budget
/// exactly. Users with zero weight never become candidates and contribute
/// zero active time.
CalibrationResult calibrate(const std::vector<ChannelModel>& models,
                            const std::vector<double>& weights, int tau, int budget);

} // namespace gesched
