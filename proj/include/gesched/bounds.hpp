#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gesched/channel.hpp"

namespace gesched {

/// Truncation loss term of one user:
///   f_i(tau) = (1 + b_{0,tau} - p11) / (b_{0,tau} + (1 - p11) tau).
/// Decreasing in tau, vanishing as tau grows.
inline double f_tau(const ChannelModel& m, int tau) {
    if (tau < 1) throw std::invalid_argument("f_tau: tau must be >= 1");
    const double b0 = belief_closed_form(m, Obs::OFF, tau);
    return (1.0 + b0 - m.p11) / (b0 + (1.0 - m.p11) * static_cast<double>(tau));
}

inline double f_tau_total(const std::vector<ChannelModel>& models, int tau) {
    double s = 0.0;
    for (const auto& m : models) s += f_tau(m, tau);
    return s;
}

/// Smallest truncation with guaranteed loss control:
///   tau0 = ceil(4 max{1/(-log 2 delta), 1/log^2(2 delta)}).
/// Natural log by default; log_base can be set to 2.
inline int tau0(double delta, double log_base = 0.0) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::domain_error("tau0: requires 0 < delta < 1/2");
    double lg = std::log(2.0 * delta);
    if (log_base > 0.0) lg /= std::log(log_base);
    const double v = 4.0 * std::max(1.0 / -lg, 1.0 / (lg * lg));
    return static_cast<int>(std::ceil(v));
}

/// Chernoff factor exp(-(M-K)^2 / (3K)) bounding the stationary probability
/// of the candidate count reaching M when its mean is at most K. Valid for
/// K > M/2.
inline double chernoff_bound(int M, int K) {
    if (!(2 * K > M)) throw std::domain_error("chernoff_bound: requires K > M/2");
    const double d = static_cast<double>(M - K);
    return std::exp(-d * d / (3.0 * static_cast<double>(K)));
}

/// Optimizing exponent of the underlying Chernoff argument.
inline double chernoff_t_star(int M, int K) {
    if (!(2 * K > M)) throw std::domain_error("chernoff_t_star: requires K > M/2");
    return std::log(static_cast<double>(M) / static_cast<double>(K));
}

/// Value of the bound at t*: exp[(M-K) - M log(M/K)], always at most
/// chernoff_bound for K > M/2.
inline double chernoff_eta_star(int M, int K) {
    if (!(2 * K > M)) throw std::domain_error("chernoff_eta_star: requires K > M/2");
    const double m = static_cast<double>(M), k = static_cast<double>(K);
    return std::exp((m - k) - m * std::log(m / k));
}

/// Multiplicative throughput-ratio lower bound:
///   mu(M,K) = [1 - exp(-(M-K)^2/(3K))] [1 - (M-K)/(delta (K-1))]^+.
inline double mu(int M, int K, double delta) {
    if (K <= 1) throw std::domain_error("mu: requires K > 1");
    if (K > M) throw std::domain_error("mu: requires K <= M");
    const double d = static_cast<double>(M - K);
    const double first = 1.0 - std::exp(-d * d / (3.0 * static_cast<double>(K)));
    const double second = std::max(0.0, 1.0 - d / (delta * static_cast<double>(K - 1)));
    return first * second;
}

/// Throughput-loss term 1 - mu(M, K).
inline double loss(int M, int K, double delta) { return 1.0 - mu(M, K, delta); }

/// Default candidate-budget gap g(M) = ceil(M^exponent). The exponent must
/// stay in (0.5, 1) so g grows faster than sqrt(M) but slower than M.
inline int default_g(int M, double exponent) {
    if (!(exponent > 0.5 && exponent < 1.0))
        throw std::invalid_argument("default_g: exponent must lie in (0.5, 1)");
    return static_cast<int>(std::ceil(std::pow(static_cast<double>(M), exponent)));
}

/// All analytic quantities for one parameter set, for reporting.
struct BoundReport {
    std::vector<double> f_per_user;
    double f_total = 0.0;
    int tau0_value = 0;
    double mu_value = 0.0;
    double loss_value = 0.0;
    double chernoff = 0.0;
    double t_star = 0.0;
    double eta_star = 0.0;
    int tau = 0;
    int M = 0;
    int K = 0;
    double delta = 0.0;
};

inline BoundReport bound_report(const std::vector<ChannelModel>& models, int tau, int M, int K,
                                double delta) {
    BoundReport r;
    r.tau = tau;
    r.M = M;
    r.K = K;
    r.delta = delta;
    r.f_per_user.reserve(models.size());
    for (const auto& m : models) r.f_per_user.push_back(f_tau(m, tau));
    r.f_total = f_tau_total(models, tau);
    r.tau0_value = tau0(delta);
    r.mu_value = mu(M, K, delta);
    r.loss_value = 1.0 - r.mu_value;
    r.chernoff = chernoff_bound(M, K);
    r.t_star = chernoff_t_star(M, K);
    r.eta_star = chernoff_eta_star(M, K);
    return r;
}

} // namespace gesched
