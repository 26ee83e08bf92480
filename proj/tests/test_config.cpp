#include <doctest.h>

#include <fstream>
#include <string>

#include "gesched/config.hpp"

using namespace gesched;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = std::string("/tmp/gesched_test_") + name;
    std::ofstream out(path);
    out << text;
    return path;
}

} // namespace

TEST_CASE("JSON and TOML forms of the shipped example load identically") {
    const ExperimentConfig a = ExperimentConfig::load("configs/example.json");
    const ExperimentConfig b = ExperimentConfig::load("configs/example.toml");
    CHECK(a.resolved_json() == b.resolved_json());
    CHECK(a.user_count() == 10);
    CHECK(a.M == 3);
    CHECK(a.effective_budget() == 2);
    CHECK(a.effective_warmup() == 10000);
    CHECK(a.make_models().size() == 10);
    CHECK(a.make_arrivals()[0].lambda == 0.1);
}

TEST_CASE("TOML subset handles sections, strings, booleans and nested arrays") {
    const std::string path = write_temp("mini.toml", R"(
# comment line
M = 2
K = 2
tau = 3
policy = "relaxed_index"
saturated = true
channels = [[0.2, 0.8],
            [0.3, 0.7]]
horizon = 5000
warmup = 100
lambda = 0.25

[sweep]
axis = "M"
values = [1, 2]
)");
    const ExperimentConfig c = ExperimentConfig::load(path);
    CHECK(c.M == 2);
    CHECK(c.tau == 3);
    CHECK(c.policy == "relaxed_index");
    CHECK(c.saturated);
    CHECK(c.channels.size() == 2);
    CHECK(c.channels[1].first == 0.3);
    CHECK(c.sweep_axis == "M");
    CHECK(c.sweep_values == std::vector<double>{1.0, 2.0});
    CHECK(c.lambdas == std::vector<double>{0.25});
}

TEST_CASE("validation failures name the offending field") {
    auto load_json = [](const std::string& body) {
        return ExperimentConfig::from_json(nlohmann::json::parse(body));
    };

    CHECK_THROWS_WITH_AS(load_json(R"({"M": 1})"),
                         doctest::Contains("config.channels"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_json(R"({"channels": [[0.2, 0.8]], "M": 5})"),
                         doctest::Contains("config.M"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_json(R"({"channels": [[0.2, 0.8]], "M": 1, "tau": 0})"),
                         doctest::Contains("config.tau"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.2, 0.8]], "M": 1, "delta": 0.7})"),
        doctest::Contains("config.delta"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.2, 0.8], [0.3, 0.7]], "M": 2, "K": 1, "policy": "frame", "T": 0})"),
        doctest::Contains("config.T"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.2, 0.8]], "M": 1, "weights": [1.0, 2.0]})"),
        doctest::Contains("config.weights"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.8, 0.2]], "M": 1})"),
        doctest::Contains("config.channels[0]"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.2, 0.8]], "M": 1, "policy": "nope"})"),
        doctest::Contains("config.policy"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        load_json(R"({"channels": [[0.2, 0.8]], "M": 1, "horizon": 100, "warmup": 100})"),
        doctest::Contains("config.horizon"), std::invalid_argument);
}

TEST_CASE("channel generator is deterministic in its seed") {
    const std::string body = R"({
        "channel_generator": {"count": 12, "p01_range": [0.1, 0.4], "p11_range": [0.6, 0.9], "seed": 5},
        "M": 3, "tau": 5
    })";
    const ExperimentConfig c = ExperimentConfig::from_json(nlohmann::json::parse(body));
    const auto m1 = c.make_models();
    const auto m2 = c.make_models();
    REQUIRE(m1.size() == 12);
    for (size_t i = 0; i < m1.size(); ++i) {
        CHECK(m1[i].p01 == m2[i].p01);
        CHECK(m1[i].p11 == m2[i].p11);
        CHECK(m1[i].p01 > 0.05);
        CHECK(m1[i].p11 < 0.95);
    }
}

TEST_CASE("derived budget flows through the config when K is omitted") {
    const std::string body = R"({
        "channel_generator": {"count": 30, "p01_range": [0.1, 0.4], "p11_range": [0.6, 0.9], "seed": 5},
        "M": 10, "tau": 5, "policy": "stringent_index"
    })";
    const ExperimentConfig c = ExperimentConfig::from_json(nlohmann::json::parse(body));
    bool floored = false;
    CHECK(c.effective_budget(&floored) == 6); // 10 - ceil(10^0.7) = 4, floored to 6
    CHECK(floored);
    CHECK(c.make_policy().K == 6);
}

TEST_CASE("resolved config embeds the expanded channel set and defaults") {
    const ExperimentConfig c = ExperimentConfig::load("configs/example.json");
    const nlohmann::json j = c.resolved_json();
    CHECK(j["N"] == 10);
    CHECK(j["channels"].size() == 10);
    CHECK(j["K"] == 2);
    CHECK(j["warmup"] == 10000);
    CHECK(j["master_seed"] == 12345);
}
