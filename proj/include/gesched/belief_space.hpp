#pragma once

#include <stdexcept>
#include <vector>

#include "gesched/channel.hpp"

namespace gesched {

/// Finite belief space where states older than tau are identified with the
/// stationary belief. Holds 2*tau + 1 states per user, enumerated in a fixed
/// order: (OFF, 1..tau), NEVER, (ON, 1..tau).
struct TruncatedBeliefSpace {
    int tau;

    explicit TruncatedBeliefSpace(int tau_) : tau(tau_) {
        if (tau < 1) throw std::invalid_argument("TruncatedBeliefSpace: tau must be >= 1");
    }

    int size() const { return 2 * tau + 1; }

    BeliefState key(int idx) const {
        if (idx < 0 || idx >= size()) throw std::out_of_range("TruncatedBeliefSpace::key");
        if (idx < tau) return BeliefState{Obs::OFF, idx + 1};
        if (idx == tau) return BeliefState{Obs::NEVER, 0};
        return BeliefState{Obs::ON, idx - tau};
    }

    /// Map an arbitrary belief into this space: ages beyond tau collapse to
    /// the stationary state.
    BeliefState truncate(const BeliefState& b) const {
        if (b.last_obs == Obs::NEVER || b.age > tau) return BeliefState{Obs::NEVER, 0};
        return b;
    }

    int index_of(const BeliefState& b) const {
        const BeliefState t = truncate(b);
        if (t.last_obs == Obs::NEVER) return tau;
        if (t.last_obs == Obs::OFF) return static_cast<int>(t.age) - 1;
        return tau + static_cast<int>(t.age);
    }

    /// Deterministic order of states sharing an index value (used to break
    /// sorting ties): OFF states by age, then the stationary state, then ON
    /// states by age. Coincides with the enumeration index.
    int rank(const BeliefState& b) const { return index_of(b); }

    /// Where a state moves one slot later with no feedback.
    int aged_successor(int idx) const {
        const BeliefState b = key(idx);
        if (b.last_obs == Obs::NEVER) return idx;
        if (b.age >= tau) return tau; // saturates at the stationary state
        return index_of(BeliefState{b.last_obs, b.age + 1});
    }

    /// Belief values of all states under a model, in enumeration order.
    std::vector<double> values(const ChannelModel& m) const {
        std::vector<double> v(size());
        for (int i = 0; i < size(); ++i) v[i] = key(i).value(m);
        return v;
    }
};

} // namespace gesched
