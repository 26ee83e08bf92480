#include "gesched/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gesched {

namespace {

// Stationary distribution of the truncated single-user chain under a
// per-state activity probability. Solves (I - P^T + 11^T) x = 1, which is
// nonsingular whenever the chain has a single recurrent class.
std::vector<double> stationary_distribution(const ChannelModel& model,
                                            const TruncatedBeliefSpace& space,
                                            const std::vector<double>& act) {
    const int n = space.size();
    const std::vector<double> pi = space.values(model);
    const int off1 = space.index_of(BeliefState{Obs::OFF, 1});
    const int on1 = space.index_of(BeliefState{Obs::ON, 1});

    // A = I - P^T + ones
    std::vector<double> A(static_cast<size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i) A[static_cast<size_t>(i) * n + i] += 1.0;
    for (int s = 0; s < n; ++s) {
        const double a = act[s];
        if (a > 0.0) {
            A[static_cast<size_t>(on1) * n + s] -= a * pi[s];
            A[static_cast<size_t>(off1) * n + s] -= a * (1.0 - pi[s]);
        }
        if (a < 1.0) {
            const int nxt = space.aged_successor(s);
            A[static_cast<size_t>(nxt) * n + s] -= (1.0 - a);
        }
    }

    std::vector<double> b(n, 1.0);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::fabs(A[static_cast<size_t>(perm[col]) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(A[static_cast<size_t>(perm[r]) * n + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (best < 1e-13)
            throw std::runtime_error("active_fraction: singular stationary solve");
        std::swap(perm[col], perm[piv]);
        const double* prow = &A[static_cast<size_t>(perm[col]) * n];
        const double inv = 1.0 / prow[col];
        for (int r = col + 1; r < n; ++r) {
            double* row = &A[static_cast<size_t>(perm[r]) * n];
            const double f = row[col] * inv;
            if (f == 0.0) continue;
            row[col] = 0.0;
            for (int c = col + 1; c < n; ++c) row[c] -= f * prow[c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int row = n - 1; row >= 0; --row) {
        const double* arow = &A[static_cast<size_t>(perm[row]) * n];
        double acc = b[perm[row]];
        for (int c = row + 1; c < n; ++c) acc -= arow[c] * x[c];
        x[row] = acc / arow[row];
    }
    // Clamp tiny negatives from roundoff and renormalize.
    double sum = 0.0;
    for (double& v : x) {
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    for (double& v : x) v /= sum;
    return x;
}

std::vector<double> activity_vector(const ChannelModel& model, const TruncatedBeliefSpace& space,
                                    double threshold, double rho, double weight) {
    const int n = space.size();
    std::vector<double> act(n, 0.0);
    for (int s = 0; s < n; ++s) {
        const double v = weight * whittle_index_value(model, space.key(s));
        if (v > threshold) act[s] = 1.0;
        else if (v == threshold) act[s] = rho;
    }
    return act;
}

double fraction_for_activity(const ChannelModel& model, const TruncatedBeliefSpace& space,
                             const std::vector<double>& act) {
    bool all_zero = true, all_one = true;
    for (double a : act) {
        if (a != 0.0) all_zero = false;
        if (a != 1.0) all_one = false;
    }
    if (all_zero) return 0.0;
    if (all_one) return 1.0;
    const std::vector<double> occ = stationary_distribution(model, space, act);
    double f = 0.0;
    for (int s = 0; s < space.size(); ++s) f += occ[s] * act[s];
    return f;
}

} // namespace

double active_fraction(const ChannelModel& model, const TruncatedBeliefSpace& space,
                       double threshold, double rho, double weight) {
    if (rho < 0.0 || rho > 1.0)
        throw std::invalid_argument("active_fraction: rho must lie in [0,1]");
    return fraction_for_activity(model, space, activity_vector(model, space, threshold, rho, weight));
}

double solve_rho(const ChannelModel& model, const TruncatedBeliefSpace& space,
                 double threshold, double target_fraction, double weight) {
    const double lo_f = active_fraction(model, space, threshold, 0.0, weight);
    const double hi_f = active_fraction(model, space, threshold, 1.0, weight);
    const double eps = 1e-12;
    if (target_fraction < lo_f - eps || target_fraction > hi_f + eps)
        throw std::invalid_argument("solve_rho: target " + std::to_string(target_fraction) +
                                    " outside attainable bracket [" + std::to_string(lo_f) +
                                    ", " + std::to_string(hi_f) + "]");
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = active_fraction(model, space, threshold, mid, weight);
        if (std::fabs(f - target_fraction) <= 1e-12) return mid;
        if (f < target_fraction) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-16) break;
    }
    return 0.5 * (lo + hi);
}

CalibrationResult calibrate(const std::vector<ChannelModel>& models,
                            const std::vector<double>& weights, int tau, int budget) {
    const int n_users = static_cast<int>(models.size());
    if (static_cast<int>(weights.size()) != n_users)
        throw std::invalid_argument("calibrate: weights size mismatch");
    if (budget <= 0) throw std::invalid_argument("calibrate: budget must be positive");
    if (budget > n_users) throw std::invalid_argument("calibrate: budget exceeds user count");
    for (double w : weights)
        if (w < 0.0 || !std::isfinite(w))
            throw std::invalid_argument("calibrate: weights must be finite and nonnegative");

    const TruncatedBeliefSpace space(tau);

    CalibrationResult res;
    res.tau = tau;
    res.budget = budget;
    res.tx_time.assign(n_users, 0.0);

    std::vector<int> eligible;
    for (int u = 0; u < n_users; ++u)
        if (weights[u] > 0.0) eligible.push_back(u);

    if (budget >= static_cast<int>(eligible.size())) {
        // Constraint cannot bind: threshold below every index, all eligible
        // users are candidates in every slot.
        res.omega_tau = 0.0;
        res.rho_tau = 1.0;
        res.degenerate = true;
        for (int u : eligible) res.tx_time[u] = 1.0;
        res.total_time = static_cast<double>(eligible.size());
        return res;
    }

    struct Entry {
        double value;
        int user;
        int rank;
    };
    std::vector<Entry> entries;
    entries.reserve(eligible.size() * static_cast<size_t>(space.size()));
    for (int u : eligible)
        for (int s = 0; s < space.size(); ++s)
            entries.push_back(Entry{weights[u] * whittle_index_value(models[u], space.key(s)), u, s});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.user != b.user) return a.user < b.user;
        return a.rank < b.rank;
    });

    // Sweep the threshold up through the sorted values. cur[u] tracks the
    // user's active fraction with all states strictly above the last
    // processed value active; raising the threshold to the next value does
    // not change it (no index values lie in between), so only the
    // "exclusive" fraction after each value needs a fresh solve.
    std::vector<double> cur(n_users, 0.0);
    for (int u : eligible) cur[u] = 1.0;
    double total = static_cast<double>(eligible.size());

    size_t i = 0;
    while (i < entries.size()) {
        const double value = entries[i].value;
        size_t j = i;
        std::vector<int> touched;
        while (j < entries.size() && entries[j].value == value) {
            if (touched.empty() || touched.back() != entries[j].user)
                touched.push_back(entries[j].user);
            ++j;
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

        std::vector<double> excl(touched.size());
        double t0 = total;
        for (size_t k = 0; k < touched.size(); ++k) {
            const int u = touched[k];
            excl[k] = active_fraction(models[u], space, value, 0.0, weights[u]);
            t0 -= cur[u] - excl[k];
        }

        if (t0 < static_cast<double>(budget) - 1e-12) {
            // Crossing value: this is the threshold. Solve the shared rho so
            // the tied users' fractions absorb the residual budget exactly.
            res.omega_tau = value;
            double fixed = 0.0;
            std::vector<bool> tied(n_users, false);
            for (int u : touched) tied[u] = true;
            for (int u : eligible)
                if (!tied[u]) fixed += cur[u];
            const double target = static_cast<double>(budget) - fixed;

            double lo_sum = 0.0, hi_sum = 0.0;
            for (size_t k = 0; k < touched.size(); ++k) {
                lo_sum += excl[k];
                hi_sum += cur[touched[k]];
            }
            if (target < lo_sum - 1e-9 || target > hi_sum + 1e-9)
                throw std::runtime_error("calibrate: residual budget outside rho bracket");

            double lo = 0.0, hi = 1.0, rho = 1.0;
            std::vector<double> tied_frac(touched.size(), 0.0);
            for (int it = 0; it < 100; ++it) {
                rho = 0.5 * (lo + hi);
                double sum = 0.0;
                for (size_t k = 0; k < touched.size(); ++k) {
                    tied_frac[k] = active_fraction(models[touched[k]], space, value, rho,
                                                   weights[touched[k]]);
                    sum += tied_frac[k];
                }
                if (std::fabs(sum - target) <= 1e-12) break;
                if (sum < target) lo = rho;
                else hi = rho;
                if (hi - lo < 1e-16) break;
            }

            res.rho_tau = rho;
            for (int u : eligible) res.tx_time[u] = cur[u];
            for (size_t k = 0; k < touched.size(); ++k) res.tx_time[touched[k]] = tied_frac[k];
            res.total_time = 0.0;
            for (int u = 0; u < n_users; ++u) res.total_time += res.tx_time[u];

            // Record the tied (user, key-class) entries for the deployment
            // equality test: one plateau entry covers a user's whole tied
            // post-ON/stationary class, OFF keys are listed individually.
            for (size_t e = i; e < j; ++e) {
                const BeliefState key = space.key(entries[e].rank);
                MarginalEntry me;
                me.user = entries[e].user;
                if (key.last_obs == Obs::OFF) {
                    me.plateau = false;
                    me.off_age = key.age;
                } else {
                    me.plateau = true;
                }
                bool dup = false;
                for (const auto& prev : res.marginal_set)
                    if (prev.user == me.user && prev.plateau == me.plateau &&
                        (me.plateau || prev.off_age == me.off_age))
                        dup = true;
                if (!dup) res.marginal_set.push_back(me);
            }
            res.marginal_user = res.marginal_set.front().user;
            for (const auto& e : res.marginal_set)
                res.marginal_user = std::min(res.marginal_user, e.user);
            return res;
        }

        total = t0;
        for (size_t k = 0; k < touched.size(); ++k) cur[touched[k]] = excl[k];
        i = j;
    }
    throw std::logic_error("calibrate: sweep exhausted without crossing the budget");
}

} // namespace gesched
