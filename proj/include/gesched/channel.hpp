#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "gesched/rng.hpp"

namespace gesched {

/// Observation tag of a belief state: what was last seen on the channel.
enum class Obs : std::uint8_t { NEVER = 0, OFF = 1, ON = 2 };

/// Two-state Markov (Gilbert-Elliott) channel of one user.
///
/// State 1 (ON) delivers one packet, state 0 (OFF) delivers nothing.
/// p01 = Pr(ON | prev OFF), p11 = Pr(ON | prev ON). Positive correlation
/// (p01 < p11) is required, and both cross transitions must exceed the
/// global delta margin.
struct ChannelModel {
    double p01 = 0.0;
    double p11 = 0.0;
    int user_id = 0;

    ChannelModel() = default;

    ChannelModel(double p01_, double p11_, int user, double delta = 0.05)
        : p01(p01_), p11(p11_), user_id(user) {
        if (!(p01 > 0.0 && p01 < p11 && p11 < 1.0))
            throw std::invalid_argument("ChannelModel: need 0 < p01 < p11 < 1, got p01=" +
                                        std::to_string(p01) + " p11=" + std::to_string(p11));
        if (!(p01 > delta && 1.0 - p11 > delta))
            throw std::invalid_argument("ChannelModel: delta margin violated (delta=" +
                                        std::to_string(delta) + ", p01=" + std::to_string(p01) +
                                        ", p10=" + std::to_string(1.0 - p11) + ")");
    }

    /// One-step belief propagation without feedback.
    double q_update(double pi) const { return pi * p11 + (1.0 - pi) * p01; }

    /// Stationary ON probability b_s = p01 / (1 + p01 - p11).
    double stationary_belief() const { return p01 / (1.0 + p01 - p11); }
};

/// Belief value l slots after an observation of `obs`, in closed form:
///   b_{0,l} = (p01 - (p11-p01)^l p01) / (1 + p01 - p11)
///   b_{1,l} = (p01 + (1-p11)(p11-p01)^l) / (1 + p01 - p11)
inline double belief_closed_form(const ChannelModel& m, Obs obs, std::int64_t age) {
    if (age < 1) throw std::invalid_argument("belief_closed_form: age must be >= 1");
    if (obs == Obs::NEVER) return m.stationary_belief();
    const double r = std::pow(m.p11 - m.p01, static_cast<double>(age));
    const double denom = 1.0 + m.p01 - m.p11;
    if (obs == Obs::OFF) return (m.p01 - r * m.p01) / denom;
    return (m.p01 + (1.0 - m.p11) * r) / denom;
}

/// Belief (information) state of one channel, stored as (last_obs, age).
///
/// The numeric value is recomputed from the closed form on demand, so long
/// passive stretches cannot accumulate floating-point drift. Ages beyond
/// `age_cap` saturate; at that magnitude the value is b_s to full double
/// precision anyway.
struct BeliefState {
    Obs last_obs = Obs::NEVER;
    std::int64_t age = 0;

    static constexpr std::int64_t DEFAULT_AGE_CAP = 1000000;

    static BeliefState stationary() { return BeliefState{Obs::NEVER, 0}; }

    double value(const ChannelModel& m) const {
        if (last_obs == Obs::NEVER) return m.stationary_belief();
        return belief_closed_form(m, last_obs, age);
    }

    bool operator==(const BeliefState&) const = default;
};

/// Belief update per the feedback rule: an observation resets the belief to
/// p11/p01 with age 1; no observation ages the state by one slot.
inline BeliefState evolve_belief(const ChannelModel& m, const BeliefState& b,
                                 const Obs* observation = nullptr,
                                 std::int64_t age_cap = BeliefState::DEFAULT_AGE_CAP) {
    (void)m;
    if (observation != nullptr) {
        if (*observation == Obs::NEVER)
            throw std::invalid_argument("evolve_belief: observation must be ON or OFF");
        return BeliefState{*observation, 1};
    }
    if (b.last_obs == Obs::NEVER) return b;
    BeliefState out = b;
    if (out.age < age_cap) out.age += 1;
    return out;
}

inline double stationary_belief(const ChannelModel& m) { return m.stationary_belief(); }

/// True channel state plus the random stream that drives it.
struct ChannelRealization {
    int state = 0; // C_i[t]
    StreamRng rng;

    /// Draw the initial state from the stationary distribution.
    static ChannelRealization stationary_init(const ChannelModel& m, StreamRng stream) {
        ChannelRealization r;
        r.rng = stream;
        r.state = r.rng.bernoulli(m.stationary_belief()) ? 1 : 0;
        return r;
    }
};

/// Advance the true channel by one slot.
inline void step_channel(const ChannelModel& m, ChannelRealization& r) {
    const double p_on = (r.state == 1) ? m.p11 : m.p01;
    r.state = r.rng.bernoulli(p_on) ? 1 : 0;
}

} // namespace gesched
