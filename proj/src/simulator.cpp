#include "gesched/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gesched/parallel.hpp"

namespace gesched {

ArrivalProcess::ArrivalProcess(ArrivalKind k, double lam, int bmax)
    : kind(k), lambda(lam), batch_max(bmax) {
    if (lambda < 0.0) throw std::invalid_argument("ArrivalProcess: lambda must be >= 0");
    if (kind == ArrivalKind::BERNOULLI && lambda > 1.0)
        throw std::invalid_argument("ArrivalProcess: Bernoulli lambda must be <= 1");
    if (kind == ArrivalKind::BATCH_UNIFORM) {
        if (batch_max < 1) throw std::invalid_argument("ArrivalProcess: batch_max must be >= 1");
        if (2.0 * lambda / batch_max > 1.0)
            throw std::invalid_argument("ArrivalProcess: batch arrival probability exceeds 1");
    }
}

double ArrivalProcess::second_moment() const {
    if (kind == ArrivalKind::BERNOULLI) return lambda;
    // E[A^2] = p E[U^2], U ~ Uniform{0..b}, p = 2 lambda / b.
    const double b = static_cast<double>(batch_max);
    return (2.0 * lambda / b) * (b * (2.0 * b + 1.0) / 6.0);
}

long long ArrivalProcess::draw(StreamRng& rng) const {
    if (lambda == 0.0) return 0;
    if (kind == ArrivalKind::BERNOULLI) return rng.bernoulli(lambda) ? 1 : 0;
    const double p = 2.0 * lambda / batch_max;
    if (!rng.bernoulli(p)) return 0;
    return static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(batch_max) + 1));
}

namespace {

// Per-user belief value lookup: closed form precomputed over small ages,
// stationary beyond (the geometric term is below double resolution there).
struct BeliefValueTable {
    static constexpr int CAP = 128;
    std::vector<double> off, on;
    double bs;

    explicit BeliefValueTable(const ChannelModel& m) : off(CAP + 1), on(CAP + 1) {
        bs = m.stationary_belief();
        for (int l = 1; l <= CAP; ++l) {
            off[l] = belief_closed_form(m, Obs::OFF, l);
            on[l] = belief_closed_form(m, Obs::ON, l);
        }
    }

    double value(const BeliefState& b) const {
        if (b.last_obs == Obs::NEVER || b.age > CAP) return bs;
        return b.last_obs == Obs::OFF ? off[b.age] : on[b.age];
    }
};

} // namespace

ExperimentRecord run_replication(const std::vector<ChannelModel>& models,
                                 const std::vector<ArrivalProcess>& arrivals,
                                 const PolicyParams& policy, const std::vector<double>& weights,
                                 long horizon, long warmup, std::uint64_t master_seed, int rep_id,
                                 const SimFlags& flags, const SlotObserver& observer) {
    const int n = static_cast<int>(models.size());
    if (static_cast<int>(arrivals.size()) != n)
        throw std::invalid_argument("run_replication: arrivals size mismatch");
    if (!(horizon > warmup && warmup >= 0))
        throw std::invalid_argument("run_replication: need horizon > warmup >= 0");

    PolicyEngine engine(policy, models, weights);
    const bool frame_metrics = policy.kind == PolicyKind::FRAME;

    // Stream ids: [0, n) channels, [n, 2n) arrivals, 2n policy randomization.
    std::vector<ChannelRealization> chan;
    chan.reserve(n);
    for (int u = 0; u < n; ++u)
        chan.push_back(ChannelRealization::stationary_init(
            models[u], StreamRng(master_seed, rep_id, static_cast<std::uint64_t>(u))));
    std::vector<StreamRng> arr_rng;
    arr_rng.reserve(n);
    for (int u = 0; u < n; ++u)
        arr_rng.emplace_back(master_seed, rep_id, static_cast<std::uint64_t>(n + u));
    StreamRng policy_rng(master_seed, rep_id, static_cast<std::uint64_t>(2 * n));

    std::vector<BeliefValueTable> vtab;
    vtab.reserve(n);
    for (int u = 0; u < n; ++u) vtab.emplace_back(models[u]);

    std::vector<BeliefState> beliefs(n, BeliefState::stationary());
    std::vector<long long> queues(n, 0);
    std::vector<int> cstates(n, 0);
    std::vector<long long> arr_now(n, 0);

    ExperimentRecord rec;
    rec.rep_id = rep_id;
    rec.horizon = horizon;
    rec.warmup = warmup;
    rec.seed = master_seed;
    rec.user_belief_rate.assign(n, 0.0);
    rec.user_realized_rate.assign(n, 0.0);
    rec.queue_mean.assign(n, 0.0);

    const long measured = horizon - warmup;
    const long window_len = std::max<long>(1, measured / 4);
    const long qstride =
        flags.record_qtrace ? std::max<long>(1, horizon / std::max<long>(1, flags.qtrace_points))
                            : 0;

    double sum_bw = 0.0, sum_rw = 0.0, sum_bt = 0.0, sum_rt = 0.0;
    double sum_active = 0.0, sum_cand = 0.0;
    long bcast = 0, ge_m = 0;
    double sum_qtotal = 0.0;
    std::array<double, 4> wsum{};
    std::array<long, 4> wcount{};

    for (long t = 0; t < horizon; ++t) {
        if (frame_metrics && t % policy.T == 0) {
            double L = 0.0;
            for (int u = 0; u < n; ++u)
                L += 0.5 * static_cast<double>(queues[u]) * static_cast<double>(queues[u]);
            rec.frame_lyapunov.push_back(L);
        }

        const SlotDecision d = engine.decide(t, beliefs, queues, policy_rng);

        if (engine.capped()) {
            ++rec.stringent_slots;
            if (d.num_scheduled > policy.M) {
                ++rec.stringent_violations;
                throw std::runtime_error("run_replication: per-slot cap violated at t=" +
                                         std::to_string(t) + " (" +
                                         std::to_string(d.num_scheduled) + " > " +
                                         std::to_string(policy.M) + ")");
            }
            if (d.mode == SlotMode::BROADCAST && d.num_scheduled != 0)
                throw std::runtime_error("run_replication: broadcast slot carries service");
        }

        for (int u = 0; u < n; ++u) cstates[u] = chan[u].state;

        // Service and throughput accrual at decision-time beliefs.
        double slot_bw = 0.0, slot_rw = 0.0, slot_bt = 0.0, slot_rt = 0.0;
        for (int u = 0; u < n; ++u) {
            if (!d.scheduled[u]) continue;
            const double pi = vtab[u].value(beliefs[u]);
            const double served = static_cast<double>(cstates[u]);
            slot_bt += pi;
            slot_rt += served;
            slot_bw += weights[u] * pi;
            slot_rw += weights[u] * served;
            if (t >= warmup) {
                rec.user_belief_rate[u] += pi;
                rec.user_realized_rate[u] += served;
            }
            if (!flags.saturated && cstates[u] == 1 && queues[u] > 0) queues[u] -= 1;
        }

        // Feedback: observed users reset their belief, everyone else ages.
        for (int u = 0; u < n; ++u) beliefs[u] = evolve_belief(models[u], beliefs[u]);
        for (int u : d.feedback_set) {
            const Obs o = cstates[u] == 1 ? Obs::ON : Obs::OFF;
            beliefs[u] = evolve_belief(models[u], beliefs[u], &o);
        }

        // Arrivals.
        if (!flags.saturated) {
            for (int u = 0; u < n; ++u) {
                arr_now[u] = arrivals[u].draw(arr_rng[u]);
                queues[u] += arr_now[u];
            }
        }

        if (t >= warmup) {
            sum_bw += slot_bw;
            sum_rw += slot_rw;
            sum_bt += slot_bt;
            sum_rt += slot_rt;
            sum_active += d.num_scheduled;
            sum_cand += d.num_candidates;
            if (d.mode == SlotMode::BROADCAST) ++bcast;
            if (d.num_candidates >= policy.M) ++ge_m;
            double qtot = 0.0;
            for (int u = 0; u < n; ++u) {
                rec.queue_mean[u] += static_cast<double>(queues[u]);
                qtot += static_cast<double>(queues[u]);
            }
            sum_qtotal += qtot;
            const long widx = std::min<long>(3, (t - warmup) / window_len);
            wsum[widx] += qtot;
            wcount[widx] += 1;
        }
        if (qstride > 0 && t % qstride == 0) {
            double qtot = 0.0;
            for (int u = 0; u < n; ++u) qtot += static_cast<double>(queues[u]);
            rec.qtrace.emplace_back(t, qtot);
        }

        if (observer) {
            SlotObservation obs;
            obs.t = t;
            obs.decision = &d;
            obs.channel_states = &cstates;
            obs.arrivals = &arr_now;
            obs.queues_after = &queues;
            obs.beliefs_after = &beliefs;
            observer(obs);
        }

        for (int u = 0; u < n; ++u) step_channel(models[u], chan[u]);
    }

    if (frame_metrics && horizon % policy.T == 0) {
        double L = 0.0;
        for (int u = 0; u < n; ++u)
            L += 0.5 * static_cast<double>(queues[u]) * static_cast<double>(queues[u]);
        rec.frame_lyapunov.push_back(L);
    }

    const double inv = 1.0 / static_cast<double>(measured);
    rec.thr_belief_weighted = sum_bw * inv;
    rec.thr_realized_weighted = sum_rw * inv;
    rec.thr_belief_total = sum_bt * inv;
    rec.thr_realized_total = sum_rt * inv;
    for (int u = 0; u < n; ++u) {
        rec.user_belief_rate[u] *= inv;
        rec.user_realized_rate[u] *= inv;
        rec.queue_mean[u] *= inv;
    }
    rec.mean_active = sum_active * inv;
    rec.mean_candidates = sum_cand * inv;
    rec.broadcast_slots = bcast;
    rec.broadcast_fraction = static_cast<double>(bcast) * inv;
    rec.frac_candidates_ge_m = static_cast<double>(ge_m) * inv;
    rec.total_queue_mean = sum_qtotal * inv;
    for (int w = 0; w < 4; ++w)
        rec.window_total_queue[w] = wcount[w] > 0 ? wsum[w] / static_cast<double>(wcount[w]) : 0.0;

    if (rec.frame_lyapunov.size() >= 3) {
        const size_t nf = rec.frame_lyapunov.size() - 1; // drifts
        const size_t from = nf / 2;
        double acc = 0.0;
        for (size_t k = from; k < nf; ++k)
            acc += (rec.frame_lyapunov[k + 1] - rec.frame_lyapunov[k]) /
                   static_cast<double>(policy.T);
        rec.mean_frame_drift_last_half = acc / static_cast<double>(nf - from);
    }
    return rec;
}

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    const int n = static_cast<int>(xs.size());
    if (n == 0) return a;
    double s = 0.0;
    for (double x : xs) s += x;
    a.mean = s / n;
    if (n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        a.sd = std::sqrt(ss / (n - 1));
        a.ci95 = 1.96 * a.sd / std::sqrt(static_cast<double>(n));
    }
    return a;
}

ExperimentResult run_experiment(const std::vector<ChannelModel>& models,
                                const std::vector<ArrivalProcess>& arrivals,
                                const PolicyParams& policy, const std::vector<double>& weights,
                                long horizon, long warmup, int replications,
                                std::uint64_t master_seed, const SimFlags& flags, int jobs) {
    if (replications < 1) throw std::invalid_argument("run_experiment: replications must be >= 1");
    ExperimentResult out;
    out.records.resize(replications);
    parallel_for(replications, jobs, [&](int r) {
        out.records[r] =
            run_replication(models, arrivals, policy, weights, horizon, warmup, master_seed, r,
                            flags);
    });

    auto collect = [&](auto proj) {
        std::vector<double> xs;
        xs.reserve(replications);
        for (const auto& r : out.records) xs.push_back(proj(r));
        return aggregate(xs);
    };
    out.summary.replications = replications;
    out.summary.thr_belief_weighted = collect([](const auto& r) { return r.thr_belief_weighted; });
    out.summary.thr_realized_weighted =
        collect([](const auto& r) { return r.thr_realized_weighted; });
    out.summary.thr_belief_total = collect([](const auto& r) { return r.thr_belief_total; });
    out.summary.thr_realized_total = collect([](const auto& r) { return r.thr_realized_total; });
    out.summary.mean_active = collect([](const auto& r) { return r.mean_active; });
    out.summary.broadcast_fraction = collect([](const auto& r) { return r.broadcast_fraction; });
    out.summary.total_queue_mean = collect([](const auto& r) { return r.total_queue_mean; });
    out.summary.frac_candidates_ge_m =
        collect([](const auto& r) { return r.frac_candidates_ge_m; });
    return out;
}

RatioEstimate estimate_ratio(const std::vector<ChannelModel>& models,
                             const std::vector<double>& weights, int tau, int M, int K,
                             long horizon, long warmup, int replications,
                             std::uint64_t master_seed, bool common_random_numbers, int jobs) {
    const int n = static_cast<int>(models.size());
    std::vector<ArrivalProcess> arrivals(n); // saturated mode: arrivals unused

    PolicyParams str;
    str.kind = PolicyKind::STRINGENT_INDEX;
    str.tau = tau;
    str.M = M;
    str.K = K;

    PolicyParams rel;
    rel.kind = PolicyKind::RELAXED_INDEX;
    rel.tau = tau;
    rel.M = M; // reference cap for candidate-count diagnostics only
    rel.K = K;

    SimFlags flags;
    flags.saturated = true;
    flags.record_qtrace = false;

    const std::uint64_t seed_rel = common_random_numbers ? master_seed : master_seed + 1;

    std::vector<double> vs(replications), vr(replications);
    parallel_for(replications, jobs, [&](int r) {
        const auto rs = run_replication(models, arrivals, str, weights, horizon, warmup,
                                        master_seed, r, flags);
        const auto rr =
            run_replication(models, arrivals, rel, weights, horizon, warmup, seed_rel, r, flags);
        vs[r] = rs.thr_belief_weighted;
        vr[r] = rr.thr_belief_weighted;
    });

    RatioEstimate est;
    est.per_rep.resize(replications);
    for (int r = 0; r < replications; ++r) {
        if (vr[r] <= 0.0)
            throw std::runtime_error("estimate_ratio: degenerate denominator in rep " +
                                     std::to_string(r));
        est.per_rep[r] = vs[r] / vr[r];
    }
    const Aggregate a = aggregate(est.per_rep);
    est.mean = a.mean;
    est.sd = a.sd;
    est.ci95 = a.ci95;
    est.v_str = aggregate(vs);
    est.v_rel = aggregate(vr);
    return est;
}

std::string to_string(StabilityVerdict v) {
    switch (v) {
    case StabilityVerdict::STABLE: return "STABLE";
    case StabilityVerdict::UNSTABLE: return "UNSTABLE";
    case StabilityVerdict::INCONCLUSIVE: return "INCONCLUSIVE";
    }
    return "?";
}

StabilityReport stability_probe(const std::vector<ChannelModel>& models,
                                const std::vector<ArrivalProcess>& arrivals,
                                const PolicyParams& policy, long horizon, long warmup,
                                int replications, std::uint64_t master_seed, int jobs) {
    std::vector<ExperimentRecord> recs(replications);
    SimFlags flags;
    flags.record_qtrace = true;
    const std::vector<double> unit_weights(models.size(), 1.0);
    parallel_for(replications, jobs, [&](int r) {
        recs[r] = run_replication(models, arrivals, policy, unit_weights, horizon, warmup,
                                  master_seed, r, flags);
    });

    StabilityReport rep;
    std::vector<double> drifts;
    drifts.reserve(replications);
    for (const auto& r : recs) {
        rep.window2_mean += r.window_total_queue[1];
        rep.window4_mean += r.window_total_queue[3];
        drifts.push_back(r.mean_frame_drift_last_half);
    }
    rep.window2_mean /= replications;
    rep.window4_mean /= replications;
    const Aggregate drift_agg = aggregate(drifts);
    rep.mean_frame_drift_last_half = drift_agg.mean;
    rep.frame_drift_se = replications > 1 ? drift_agg.sd / std::sqrt(double(replications)) : 0.0;
    rep.window_ratio =
        rep.window2_mean > 0.0 ? rep.window4_mean / rep.window2_mean
                               : (rep.window4_mean > 0.0 ? 1e300 : 0.0);

    // Least-squares slope of the replication-averaged total-queue trajectory
    // over the post-warmup horizon.
    const auto& base = recs[0].qtrace;
    std::vector<std::pair<long, double>> avg;
    for (size_t i = 0; i < base.size(); ++i) {
        if (base[i].first < warmup) continue;
        double y = 0.0;
        for (const auto& r : recs) y += r.qtrace[i].second;
        avg.emplace_back(base[i].first, y / replications);
    }
    const size_t np = avg.size();
    if (np >= 3) {
        double sx = 0.0, sy = 0.0;
        for (const auto& [x, y] : avg) {
            sx += static_cast<double>(x);
            sy += y;
        }
        const double mx = sx / np, my = sy / np;
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : avg) {
            const double dx = static_cast<double>(x) - mx;
            sxx += dx * dx;
            sxy += dx * (y - my);
        }
        rep.slope = sxy / sxx;
        double sse = 0.0;
        for (const auto& [x, y] : avg) {
            const double fit = my + rep.slope * (static_cast<double>(x) - mx);
            sse += (y - fit) * (y - fit);
        }
        const double sigma2 = sse / static_cast<double>(np - 2);
        rep.slope_ci = 1.96 * std::sqrt(sigma2 / sxx);
    }

    if (rep.window4_mean <= 1.1 * rep.window2_mean)
        rep.verdict = StabilityVerdict::STABLE;
    else if (rep.slope - rep.slope_ci > 0.0)
        rep.verdict = StabilityVerdict::UNSTABLE;
    else
        rep.verdict = StabilityVerdict::INCONCLUSIVE;
    return rep;
}

} // namespace gesched
