#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesched/channel.hpp"
#include "gesched/policies.hpp"
#include "gesched/simulator.hpp"

namespace gesched {

/// Experiment description, loadable from JSON or a TOML subset. All
/// randomness derives from master_seed; validation happens before any run
/// and reports the offending field.
struct ExperimentConfig {
    // Channel set: explicit (p01, p11) pairs, or a generator spec.
    std::vector<std::pair<double, double>> channels;
    int generator_count = 0;
    std::pair<double, double> generator_p01_range{0.1, 0.4};
    std::pair<double, double> generator_p11_range{0.6, 0.9};
    std::uint64_t generator_seed = 1;

    int M = 1;
    std::optional<int> K;
    double g_exponent = 0.7;
    int tau = 10;
    double delta = 0.05;
    double tau0_log_base = 0.0; // 0 = natural log

    std::vector<double> weights; // empty = all ones

    std::string arrival_kind = "bernoulli"; // bernoulli | batch_uniform
    std::vector<double> lambdas;            // empty = all zero
    int batch_max = 1;

    std::string policy = "stringent_index";
    int T = 1;

    long horizon = 100000;
    long warmup = -1; // -1: max(1000, horizon/10)
    int replications = 1;
    std::uint64_t master_seed = 1;

    std::string out_dir = "out";
    bool saturated = false;
    bool common_random_numbers = true;
    bool trace = false;
    int jobs = 0; // 0 = available parallelism

    std::string sweep_axis; // "M" | "K" | "lambda_scale" | "T" | ""
    std::vector<double> sweep_values;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    void validate() const;

    int user_count() const;
    long effective_warmup() const;
    int effective_budget(bool* floored = nullptr) const;

    std::vector<ChannelModel> make_models() const;
    std::vector<ArrivalProcess> make_arrivals() const;
    std::vector<double> make_weights() const;
    PolicyParams make_policy() const;

    nlohmann::json resolved_json() const;
};

PolicyKind policy_kind_from_string(const std::string& s);
std::string to_string(PolicyKind k);

/// Parse the TOML subset used by config files (sections, scalar keys,
/// flat and nested arrays) into a JSON object.
nlohmann::json toml_subset_to_json(const std::string& text);

} // namespace gesched
