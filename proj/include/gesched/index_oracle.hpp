#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gesched/belief_space.hpp"
#include "gesched/channel.hpp"

namespace gesched {

/// Raised when relative value iteration fails to reach the span tolerance
/// within the iteration cap; carries the final Bellman-residual span.
struct OracleError : std::runtime_error {
    double residual;
    explicit OracleError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

struct OracleOptions {
    int truncation = 200;
    double vi_span_tol = 1e-10;
    long vi_max_iters = 1000000;
    int bisect_iters = 30;
    double bisect_tol = 0.0; // extra early-out; 0 keeps the full iteration count
};

/// Subsidy-search oracle for the Whittle index of one channel.
///
/// For a subsidy omega the single-user average-reward problem (active reward
/// = current belief, passive reward = omega) is solved by relative value
/// iteration on the truncated belief space; the index of a state is located
/// by bisection on omega as the point where the optimal action at that state
/// switches from active to passive. The bias vector is kept warm between
/// solves, which makes the inner iterations cheap once a channel has been
/// queried once.
class IndexOracle {
public:
    IndexOracle(const ChannelModel& model, OracleOptions opts = {});

    /// Whittle index estimate at a belief key (age must be within the
    /// truncation). `tolerance` stops the bisection early once the bracket
    /// is at most this wide.
    double index_at(const BeliefState& key, double tolerance);

    /// True iff the passive action is (weakly) preferred at the state under
    /// subsidy omega.
    bool passive_optimal(const BeliefState& key, double omega);

    long total_vi_iterations() const { return vi_iterations_; }

private:
    void solve(double omega);

    ChannelModel model_;
    OracleOptions opts_;
    TruncatedBeliefSpace space_;
    std::vector<double> belief_;
    std::vector<int> aged_next_;
    int on1_ = 0, off1_ = 0;
    std::vector<double> h_, h_next_;
    long vi_iterations_ = 0;
};

/// One-call wrapper matching the operation signature used by the CLI and
/// tests: oracle index of (model, key) with fresh state.
double numeric_index_oracle(const ChannelModel& model, const BeliefState& key, int truncation,
                            double tolerance);

} // namespace gesched
