#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gesched/calibration.hpp"
#include "gesched/channel.hpp"
#include "gesched/rng.hpp"

namespace gesched {

enum class PolicyKind {
    RELAXED_INDEX,
    STRINGENT_INDEX,
    FRAME,
    MYOPIC_MAXWEIGHT,
    QUEUE_INDEX_HEURISTIC,
    RANDOM,
};

enum class SlotMode { TRANSMIT, BROADCAST, IDLE };

/// Outcome of one slot's scheduling decision.
///
/// TRANSMIT: the candidates are served (at most M of them) and exactly the
/// served users report their channel state. BROADCAST: more than M
/// candidates; nobody is served, every candidate reports. IDLE: no
/// candidates at all.
struct SlotDecision {
    SlotMode mode = SlotMode::IDLE;
    std::vector<std::uint8_t> candidates;
    std::vector<std::uint8_t> scheduled;
    std::vector<int> feedback_set;
    int num_candidates = 0;
    int num_scheduled = 0;
};

struct PolicyParams {
    PolicyKind kind = PolicyKind::RELAXED_INDEX;
    int tau = 10;
    int M = 1; // per-slot cap (stringent, frame, baselines)
    int K = 1; // calibration budget (index policies)
    int T = 1; // frame length
    double g_exponent = 0.7;
};

/// Default budget K = M - ceil(M^exponent), floored at ceil(M/2)+1 (and at
/// most M) so the Chernoff regime applies. Sets *floored when the floor
/// binds.
int derive_budget(int M, double g_exponent, bool* floored = nullptr);

/// Per-slot decision engine for all policy kinds.
///
/// Index policies evaluate each user's weighted index on the tau-truncated
/// belief key (ages past tau count as the stationary state, matching the
/// chain the calibration solved) and compare against the calibrated
/// threshold; equality randomization applies exactly to the calibration's
/// marginal (user, key-class) entries. The frame policy recalibrates at
/// frame boundaries with the sampled queue vector as weights and keeps them
/// frozen within the frame.
class PolicyEngine {
public:
    PolicyEngine(PolicyParams params, std::vector<ChannelModel> models,
                 std::vector<double> weights);

    SlotDecision decide(long t, const std::vector<BeliefState>& beliefs,
                        const std::vector<long long>& queues, StreamRng& rng);

    /// The calibration currently in force (static, or the current frame's).
    const CalibrationResult* calibration() const {
        return calib_.has_value() ? &*calib_ : nullptr;
    }

    /// True when the per-slot cap M must hold for every decision.
    bool capped() const {
        return params_.kind != PolicyKind::RELAXED_INDEX;
    }

    const PolicyParams& params() const { return params_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    void adopt_calibration(const CalibrationResult& c, const std::vector<double>& w);
    void select_candidates(const std::vector<BeliefState>& beliefs, StreamRng& rng,
                           std::vector<std::uint8_t>& out, int& count) const;
    SlotDecision top_m_schedule(const std::vector<double>& scores) const;

    PolicyParams params_;
    std::vector<ChannelModel> models_;
    std::vector<double> weights_;

    TruncatedBeliefSpace space_;
    std::vector<std::vector<double>> index_table_; // per user, per truncated key
    std::optional<CalibrationResult> calib_;
    std::vector<double> active_weights_;

    // Per-user digest of the marginal set for O(1) equality tests.
    struct MarginalMatch {
        bool plateau = false;
        std::vector<std::int64_t> off_ages;
    };
    std::vector<MarginalMatch> marginal_;

    // Frame policy state.
    long frame_index_ = -1;
    bool idle_frame_ = false;

    std::vector<int> random_perm_;
};

} // namespace gesched
