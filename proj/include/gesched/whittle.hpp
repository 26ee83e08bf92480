#pragma once

#include <stdexcept>

#include "gesched/channel.hpp"

namespace gesched {

/// Whittle index of one belief state, with the (user, belief key) it scores.
struct IndexValue {
    double value = 0.0;
    int user_id = 0;
    BeliefState belief;
};

/// Closed-form Whittle index of a belief state.
///
/// Branch selection is by belief key, not by comparing floating values:
/// post-OFF beliefs sit strictly below the stationary point and take the
/// age-dependent branch; everything at or above it (post-ON and
/// never-observed states) shares one plateau value. The plateau value is
/// b_s / (1 - p11 + b_s), the per-active-slot yield of probing only at
/// and above the stationary belief, and is the limit of the lower branch
/// as the age grows, so the index is continuous and nondecreasing in the
/// belief.
inline double whittle_index_value(const ChannelModel& m, const BeliefState& b) {
    const double bs = m.stationary_belief();
    if (b.last_obs == Obs::OFF) {
        const double pi = b.value(m);
        if (!(pi >= m.p01 - 1e-12 && pi < bs + 1e-12))
            throw std::logic_error("whittle_index: post-OFF belief outside [p01, b_s)");
        const double q = m.q_update(pi);
        const double d = pi - q; // equals -p01 (p11-p01)^age, always <= 0
        const double l = static_cast<double>(b.age);
        return (d * (l + 1.0) + q) / (1.0 - m.p11 + d * l + q);
    }
    // Plateau: stationary and post-ON beliefs, p01 <= b_s <= pi <= p11.
    return bs / (1.0 - m.p11 + bs);
}

inline IndexValue whittle_index(const ChannelModel& m, const BeliefState& b) {
    return IndexValue{whittle_index_value(m, b), m.user_id, b};
}

inline IndexValue weighted_index(const ChannelModel& m, const BeliefState& b, double weight) {
    if (weight < 0.0) throw std::invalid_argument("weighted_index: weight must be >= 0");
    return IndexValue{weight * whittle_index_value(m, b), m.user_id, b};
}

} // namespace gesched
