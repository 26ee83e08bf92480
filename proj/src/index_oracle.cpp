#include "gesched/index_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace gesched {

IndexOracle::IndexOracle(const ChannelModel& model, OracleOptions opts)
    : model_(model), opts_(opts), space_(opts.truncation) {
    const int n = space_.size();
    belief_ = space_.values(model_);
    aged_next_.resize(n);
    for (int s = 0; s < n; ++s) aged_next_[s] = space_.aged_successor(s);
    on1_ = space_.index_of(BeliefState{Obs::ON, 1});
    off1_ = space_.index_of(BeliefState{Obs::OFF, 1});
    h_.assign(n, 0.0);
    h_next_.assign(n, 0.0);
}

void IndexOracle::solve(double omega) {
    const int n = space_.size();
    const int ref = space_.index_of(BeliefState{Obs::NEVER, 0});
    double span = 0.0;
    for (long it = 0; it < opts_.vi_max_iters; ++it) {
        const double h_on1 = h_[on1_];
        const double h_off1 = h_[off1_];
        double lo = 1e300, hi = -1e300;
        for (int s = 0; s < n; ++s) {
            const double pi = belief_[s];
            const double qa = pi * (1.0 + h_on1) + (1.0 - pi) * h_off1;
            const double qp = omega + h_[aged_next_[s]];
            const double v = qa > qp ? qa : qp;
            h_next_[s] = v;
            const double diff = v - h_[s];
            if (diff < lo) lo = diff;
            if (diff > hi) hi = diff;
        }
        ++vi_iterations_;
        span = hi - lo;
        const double shift = h_next_[ref];
        for (int s = 0; s < n; ++s) h_[s] = h_next_[s] - shift;
        if (span <= opts_.vi_span_tol) return;
    }
    throw OracleError("index oracle: value iteration did not converge, residual span " +
                          std::to_string(span),
                      span);
}

bool IndexOracle::passive_optimal(const BeliefState& key, double omega) {
    solve(omega);
    const int s = space_.index_of(key);
    const double pi = belief_[s];
    const double qa = pi * (1.0 + h_[on1_]) + (1.0 - pi) * h_[off1_];
    const double qp = omega + h_[aged_next_[s]];
    return qp >= qa;
}

double IndexOracle::index_at(const BeliefState& key, double tolerance) {
    if (key.last_obs != Obs::NEVER && key.age > opts_.truncation)
        throw std::invalid_argument("index oracle: key age exceeds truncation");
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < opts_.bisect_iters && hi - lo > tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (passive_optimal(key, mid)) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

double numeric_index_oracle(const ChannelModel& model, const BeliefState& key, int truncation,
                            double tolerance) {
    OracleOptions opts;
    opts.truncation = truncation;
    IndexOracle oracle(model, opts);
    return oracle.index_at(key, tolerance);
}

} // namespace gesched
