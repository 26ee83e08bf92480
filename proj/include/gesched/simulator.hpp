#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gesched/channel.hpp"
#include "gesched/policies.hpp"
#include "gesched/rng.hpp"

namespace gesched {

enum class ArrivalKind { BERNOULLI, BATCH_UNIFORM };

/// I.i.d. packet arrival process with mean lambda packets/slot.
/// BERNOULLI: one packet w.p. lambda. BATCH_UNIFORM: a batch uniform on
/// {0..batch_max} arriving w.p. 2*lambda/batch_max, so the mean is exact.
struct ArrivalProcess {
    ArrivalKind kind = ArrivalKind::BERNOULLI;
    double lambda = 0.0;
    int batch_max = 1;

    ArrivalProcess() = default;
    ArrivalProcess(ArrivalKind k, double lam, int bmax = 1);

    double mean() const { return lambda; }
    double second_moment() const;

    long long draw(StreamRng& rng) const;
};

struct SimFlags {
    bool saturated = false;      // infinite backlogs: service never idles, queues untouched
    bool record_qtrace = true;   // keep a downsampled total-queue trajectory
    long qtrace_points = 2048;
};

/// Per-slot view handed to an observer callback (tests, trace output).
struct SlotObservation {
    long t = 0;
    const SlotDecision* decision = nullptr;
    const std::vector<int>* channel_states = nullptr;
    const std::vector<long long>* arrivals = nullptr;
    const std::vector<long long>* queues_after = nullptr;
    const std::vector<BeliefState>* beliefs_after = nullptr;
};

using SlotObserver = std::function<void(const SlotObservation&)>;

/// Replication-level time averages (all over post-warmup slots).
struct ExperimentRecord {
    int rep_id = 0;
    long horizon = 0;
    long warmup = 0;
    std::uint64_t seed = 0;

    double thr_belief_weighted = 0.0;  // sum_i r_i pi_i a_i
    double thr_realized_weighted = 0.0;
    double thr_belief_total = 0.0;     // unweighted sums
    double thr_realized_total = 0.0;
    std::vector<double> user_belief_rate;
    std::vector<double> user_realized_rate;

    double mean_active = 0.0;       // scheduled users per slot
    double mean_candidates = 0.0;
    double broadcast_fraction = 0.0;
    long broadcast_slots = 0;
    double frac_candidates_ge_m = 0.0;

    std::vector<double> queue_mean;
    double total_queue_mean = 0.0;
    std::array<double, 4> window_total_queue{};

    std::vector<double> frame_lyapunov;    // L(q) sampled at frame starts
    double mean_frame_drift_last_half = 0.0;

    std::vector<std::pair<long, double>> qtrace;

    long stringent_slots = 0;
    long stringent_violations = 0;
};

ExperimentRecord run_replication(const std::vector<ChannelModel>& models,
                                 const std::vector<ArrivalProcess>& arrivals,
                                 const PolicyParams& policy, const std::vector<double>& weights,
                                 long horizon, long warmup, std::uint64_t master_seed, int rep_id,
                                 const SimFlags& flags = {}, const SlotObserver& observer = {});

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;
    double ci95 = 0.0; // half-width
};

Aggregate aggregate(const std::vector<double>& xs);

struct ExperimentSummary {
    int replications = 0;
    Aggregate thr_belief_weighted, thr_realized_weighted;
    Aggregate thr_belief_total, thr_realized_total;
    Aggregate mean_active, broadcast_fraction, total_queue_mean, frac_candidates_ge_m;
};

struct ExperimentResult {
    std::vector<ExperimentRecord> records;
    ExperimentSummary summary;
};

ExperimentResult run_experiment(const std::vector<ChannelModel>& models,
                                const std::vector<ArrivalProcess>& arrivals,
                                const PolicyParams& policy, const std::vector<double>& weights,
                                long horizon, long warmup, int replications,
                                std::uint64_t master_seed, const SimFlags& flags = {},
                                int jobs = 1);

/// Ratio of the capped policy's weighted throughput to the relaxed policy's
/// at the same candidate budget K, from paired replications. Common random
/// numbers (shared channel/arrival/randomization streams) are on by default.
struct RatioEstimate {
    double mean = 0.0;
    double sd = 0.0;
    double ci95 = 0.0;
    std::vector<double> per_rep;
    Aggregate v_str, v_rel;
};

RatioEstimate estimate_ratio(const std::vector<ChannelModel>& models,
                             const std::vector<double>& weights, int tau, int M, int K,
                             long horizon, long warmup, int replications,
                             std::uint64_t master_seed, bool common_random_numbers = true,
                             int jobs = 1);

enum class StabilityVerdict { STABLE, UNSTABLE, INCONCLUSIVE };

struct StabilityReport {
    StabilityVerdict verdict = StabilityVerdict::INCONCLUSIVE;
    double window2_mean = 0.0;
    double window4_mean = 0.0;
    double window_ratio = 0.0;
    double slope = 0.0;
    double slope_ci = 0.0; // 95% half-width
    double mean_frame_drift_last_half = 0.0;
    double frame_drift_se = 0.0; // standard error across replications
};

/// Finite-horizon stability probe: STABLE when the last-quarter windowed
/// mean of the total queue stays within 1.1x the second quarter's, UNSTABLE
/// when the fitted total-queue slope is positive with its 95% CI above
/// zero, INCONCLUSIVE otherwise. Thresholds are conventions, not theory.
StabilityReport stability_probe(const std::vector<ChannelModel>& models,
                                const std::vector<ArrivalProcess>& arrivals,
                                const PolicyParams& policy, long horizon, long warmup,
                                int replications, std::uint64_t master_seed, int jobs = 1);

std::string to_string(StabilityVerdict v);

} // namespace gesched
