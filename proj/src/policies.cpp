#include "gesched/policies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "gesched/whittle.hpp"

namespace gesched {

int derive_budget(int M, double g_exponent, bool* floored) {
    if (M < 1) throw std::invalid_argument("derive_budget: M must be >= 1");
    const int g = static_cast<int>(std::ceil(std::pow(static_cast<double>(M), g_exponent)));
    const int floor_k = std::min(M, M / 2 + 1 + (M % 2));
    int k = M - g;
    bool bind = false;
    if (k < floor_k) {
        k = floor_k;
        bind = true;
    }
    if (floored) *floored = bind;
    return k;
}

PolicyEngine::PolicyEngine(PolicyParams params, std::vector<ChannelModel> models,
                           std::vector<double> weights)
    : params_(params), models_(std::move(models)), weights_(std::move(weights)),
      space_(params.tau) {
    const int n = static_cast<int>(models_.size());
    if (static_cast<int>(weights_.size()) != n)
        throw std::invalid_argument("PolicyEngine: weights size mismatch");
    if (params_.kind == PolicyKind::STRINGENT_INDEX || params_.kind == PolicyKind::FRAME) {
        if (params_.K > params_.M)
            throw std::invalid_argument("PolicyEngine: requires K <= M");
    }
    if (params_.kind == PolicyKind::FRAME && params_.T < 1)
        throw std::invalid_argument("PolicyEngine: frame length must be >= 1");

    index_table_.resize(n);
    for (int u = 0; u < n; ++u) {
        index_table_[u].resize(space_.size());
        for (int s = 0; s < space_.size(); ++s)
            index_table_[u][s] = whittle_index_value(models_[u], space_.key(s));
    }

    if (params_.kind == PolicyKind::RELAXED_INDEX || params_.kind == PolicyKind::STRINGENT_INDEX)
        adopt_calibration(calibrate(models_, weights_, params_.tau, params_.K), weights_);
}

void PolicyEngine::adopt_calibration(const CalibrationResult& c, const std::vector<double>& w) {
    calib_ = c;
    active_weights_ = w;
    marginal_.assign(models_.size(), MarginalMatch{});
    for (const auto& e : c.marginal_set) {
        if (e.plateau) marginal_[e.user].plateau = true;
        else marginal_[e.user].off_ages.push_back(e.off_age);
    }
}

void PolicyEngine::select_candidates(const std::vector<BeliefState>& beliefs, StreamRng& rng,
                                     std::vector<std::uint8_t>& out, int& count) const {
    const int n = static_cast<int>(models_.size());
    out.assign(n, 0);
    count = 0;
    const CalibrationResult& c = *calib_;
    for (int u = 0; u < n; ++u) {
        const double w = active_weights_[u];
        if (w <= 0.0) continue;
        const BeliefState key = space_.truncate(beliefs[u]);
        const double v = w * index_table_[u][space_.index_of(key)];
        bool cand = false;
        if (v > c.omega_tau) {
            cand = true;
        } else {
            const MarginalMatch& m = marginal_[u];
            const bool marginal =
                (key.last_obs != Obs::OFF)
                    ? m.plateau
                    : std::find(m.off_ages.begin(), m.off_ages.end(), key.age) !=
                          m.off_ages.end();
            if (marginal) cand = rng.bernoulli(c.rho_tau);
        }
        if (cand) {
            out[u] = 1;
            ++count;
        }
    }
}

SlotDecision PolicyEngine::top_m_schedule(const std::vector<double>& scores) const {
    const int n = static_cast<int>(scores.size());
    std::vector<int> order;
    order.reserve(n);
    for (int u = 0; u < n; ++u)
        if (scores[u] > 0.0) order.push_back(u);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b; // tie: lower user id wins
    });
    if (static_cast<int>(order.size()) > params_.M) order.resize(params_.M);

    SlotDecision d;
    d.candidates.assign(n, 0);
    d.scheduled.assign(n, 0);
    for (int u : order) {
        d.candidates[u] = 1;
        d.scheduled[u] = 1;
        d.feedback_set.push_back(u);
    }
    d.num_candidates = d.num_scheduled = static_cast<int>(order.size());
    d.mode = d.num_scheduled > 0 ? SlotMode::TRANSMIT : SlotMode::IDLE;
    return d;
}

SlotDecision PolicyEngine::decide(long t, const std::vector<BeliefState>& beliefs,
                                  const std::vector<long long>& queues, StreamRng& rng) {
    const int n = static_cast<int>(models_.size());
    SlotDecision d;

    switch (params_.kind) {
    case PolicyKind::RELAXED_INDEX: {
        select_candidates(beliefs, rng, d.candidates, d.num_candidates);
        d.scheduled = d.candidates;
        d.num_scheduled = d.num_candidates;
        d.mode = SlotMode::TRANSMIT; // no per-slot cap under the relaxed constraint
        for (int u = 0; u < n; ++u)
            if (d.scheduled[u]) d.feedback_set.push_back(u);
        return d;
    }
    case PolicyKind::FRAME: {
        const long k = t / params_.T;
        if (k != frame_index_) {
            frame_index_ = k;
            std::vector<double> qw(n);
            bool any = false;
            for (int u = 0; u < n; ++u) {
                qw[u] = static_cast<double>(queues[u]);
                if (qw[u] > 0.0) any = true;
            }
            idle_frame_ = !any;
            if (!idle_frame_) adopt_calibration(calibrate(models_, qw, params_.tau, params_.K), qw);
        }
        if (idle_frame_) {
            d.candidates.assign(n, 0);
            d.scheduled.assign(n, 0);
            d.mode = SlotMode::IDLE;
            return d;
        }
        [[fallthrough]];
    }
    case PolicyKind::STRINGENT_INDEX: {
        select_candidates(beliefs, rng, d.candidates, d.num_candidates);
        if (d.num_candidates <= params_.M) {
            d.scheduled = d.candidates;
            d.num_scheduled = d.num_candidates;
            d.mode = SlotMode::TRANSMIT;
            for (int u = 0; u < n; ++u)
                if (d.scheduled[u]) d.feedback_set.push_back(u);
        } else {
            d.scheduled.assign(n, 0);
            d.num_scheduled = 0;
            d.mode = SlotMode::BROADCAST;
            for (int u = 0; u < n; ++u)
                if (d.candidates[u]) d.feedback_set.push_back(u);
        }
        return d;
    }
    case PolicyKind::MYOPIC_MAXWEIGHT: {
        std::vector<double> scores(n);
        for (int u = 0; u < n; ++u)
            scores[u] = static_cast<double>(queues[u]) * beliefs[u].value(models_[u]);
        return top_m_schedule(scores);
    }
    case PolicyKind::QUEUE_INDEX_HEURISTIC: {
        std::vector<double> scores(n);
        for (int u = 0; u < n; ++u)
            scores[u] =
                static_cast<double>(queues[u]) * whittle_index_value(models_[u], beliefs[u]);
        return top_m_schedule(scores);
    }
    case PolicyKind::RANDOM: {
        if (random_perm_.size() != static_cast<size_t>(n)) {
            random_perm_.resize(n);
            for (int u = 0; u < n; ++u) random_perm_[u] = u;
        }
        d.candidates.assign(n, 0);
        d.scheduled.assign(n, 0);
        const int m = std::min(params_.M, n);
        for (int k = 0; k < m; ++k) {
            const int pick = k + static_cast<int>(rng.next_below(n - k));
            std::swap(random_perm_[k], random_perm_[pick]);
            const int u = random_perm_[k];
            d.candidates[u] = 1;
            d.scheduled[u] = 1;
        }
        for (int u = 0; u < n; ++u)
            if (d.scheduled[u]) d.feedback_set.push_back(u);
        d.num_candidates = d.num_scheduled = m;
        d.mode = m > 0 ? SlotMode::TRANSMIT : SlotMode::IDLE;
        return d;
    }
    }
    throw std::logic_error("PolicyEngine::decide: unhandled policy kind");
}

} // namespace gesched
