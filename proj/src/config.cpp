#include "gesched/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gesched {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw std::invalid_argument("config." + field + ": " + msg);
}

double get_num(const nlohmann::json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

} // namespace

PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "relaxed_index") return PolicyKind::RELAXED_INDEX;
    if (s == "stringent_index") return PolicyKind::STRINGENT_INDEX;
    if (s == "frame") return PolicyKind::FRAME;
    if (s == "myopic_maxweight") return PolicyKind::MYOPIC_MAXWEIGHT;
    if (s == "queue_index") return PolicyKind::QUEUE_INDEX_HEURISTIC;
    if (s == "random") return PolicyKind::RANDOM;
    fail("policy", "unknown policy kind '" + s + "'");
}

std::string to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::RELAXED_INDEX: return "relaxed_index";
    case PolicyKind::STRINGENT_INDEX: return "stringent_index";
    case PolicyKind::FRAME: return "frame";
    case PolicyKind::MYOPIC_MAXWEIGHT: return "myopic_maxweight";
    case PolicyKind::QUEUE_INDEX_HEURISTIC: return "queue_index";
    case PolicyKind::RANDOM: return "random";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("channels")) {
        if (!j["channels"].is_array()) fail("channels", "expected an array of [p01, p11] pairs");
        for (const auto& e : j["channels"]) {
            if (!e.is_array() || e.size() != 2) fail("channels", "each entry must be [p01, p11]");
            c.channels.emplace_back(get_num(e[0], "channels.p01"), get_num(e[1], "channels.p11"));
        }
    }
    if (j.contains("channel_generator")) {
        const auto& g = j["channel_generator"];
        if (!g.is_object()) fail("channel_generator", "expected an object");
        if (!g.contains("count")) fail("channel_generator.count", "required");
        c.generator_count = static_cast<int>(get_num(g["count"], "channel_generator.count"));
        auto range = [&](const char* name, std::pair<double, double>& out) {
            if (g.contains(name)) {
                const auto& r = g[name];
                if (!r.is_array() || r.size() != 2)
                    fail(std::string("channel_generator.") + name, "expected [lo, hi]");
                out = {get_num(r[0], name), get_num(r[1], name)};
            }
        };
        range("p01_range", c.generator_p01_range);
        range("p11_range", c.generator_p11_range);
        if (g.contains("seed"))
            c.generator_seed = static_cast<std::uint64_t>(get_num(g["seed"], "channel_generator.seed"));
    }

    auto opt_num = [&](const char* name, auto& out) {
        if (j.contains(name)) out = static_cast<std::decay_t<decltype(out)>>(get_num(j[name], name));
    };
    opt_num("M", c.M);
    if (j.contains("K")) c.K = static_cast<int>(get_num(j["K"], "K"));
    opt_num("g_exponent", c.g_exponent);
    opt_num("tau", c.tau);
    opt_num("delta", c.delta);
    opt_num("tau0_log_base", c.tau0_log_base);
    opt_num("T", c.T);
    opt_num("horizon", c.horizon);
    opt_num("warmup", c.warmup);
    opt_num("replications", c.replications);
    opt_num("master_seed", c.master_seed);
    opt_num("batch_max", c.batch_max);
    opt_num("jobs", c.jobs);

    if (j.contains("weights")) {
        if (j["weights"].is_array())
            for (const auto& w : j["weights"]) c.weights.push_back(get_num(w, "weights"));
        else
            fail("weights", "expected an array");
    }
    if (j.contains("lambda")) {
        if (j["lambda"].is_array())
            for (const auto& l : j["lambda"]) c.lambdas.push_back(get_num(l, "lambda"));
        else
            c.lambdas.assign(1, get_num(j["lambda"], "lambda")); // scalar: replicated later
    }
    if (j.contains("arrival_kind")) c.arrival_kind = j["arrival_kind"].get<std::string>();
    if (j.contains("policy")) c.policy = j["policy"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("saturated")) c.saturated = j["saturated"].get<bool>();
    if (j.contains("common_random_numbers"))
        c.common_random_numbers = j["common_random_numbers"].get<bool>();
    if (j.contains("trace")) c.trace = j["trace"].get<bool>();
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (!s.is_object() || !s.contains("axis") || !s.contains("values"))
            fail("sweep", "expected an object with 'axis' and 'values'");
        c.sweep_axis = s["axis"].get<std::string>();
        for (const auto& v : s["values"]) c.sweep_values.push_back(get_num(v, "sweep.values"));
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    const bool is_toml = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
    nlohmann::json j;
    if (is_toml) {
        j = toml_subset_to_json(text);
    } else {
        j = nlohmann::json::parse(text);
    }
    return from_json(j);
}

int ExperimentConfig::user_count() const {
    return channels.empty() ? generator_count : static_cast<int>(channels.size());
}

long ExperimentConfig::effective_warmup() const {
    if (warmup >= 0) return warmup;
    return std::max<long>(1000, horizon / 10);
}

int ExperimentConfig::effective_budget(bool* floored) const {
    if (K.has_value()) {
        if (floored) *floored = false;
        return *K;
    }
    return derive_budget(M, g_exponent, floored);
}

void ExperimentConfig::validate() const {
    const int n = user_count();
    if (n <= 0) fail("channels", "no channels given (need 'channels' or 'channel_generator')");
    if (!channels.empty() && generator_count > 0)
        fail("channels", "give either explicit channels or a generator, not both");
    if (tau < 1) fail("tau", "must be >= 1");
    if (!(delta > 0.0 && delta < 0.5)) fail("delta", "must lie in (0, 1/2)");
    if (M < 1 || M > n) fail("M", "must satisfy 1 <= M <= N");
    const int k = effective_budget();
    if (k < 1 || k > n) fail("K", "must satisfy 1 <= K <= N");
    const PolicyKind kind = policy_kind_from_string(policy);
    if ((kind == PolicyKind::STRINGENT_INDEX || kind == PolicyKind::FRAME) && k > M)
        fail("K", "must be <= M for capped policies");
    if (kind == PolicyKind::FRAME && T < 1) fail("T", "must be >= 1 for the frame policy");
    if (!weights.empty() && static_cast<int>(weights.size()) != n)
        fail("weights", "size must match the channel count");
    for (double w : weights)
        if (w < 0.0 || !std::isfinite(w)) fail("weights", "must be finite and nonnegative");
    if (!lambdas.empty() && lambdas.size() != 1 && static_cast<int>(lambdas.size()) != n)
        fail("lambda", "give one rate or one per user");
    if (arrival_kind != "bernoulli" && arrival_kind != "batch_uniform")
        fail("arrival_kind", "must be 'bernoulli' or 'batch_uniform'");
    if (horizon <= effective_warmup()) fail("horizon", "must exceed the warmup");
    if (replications < 1) fail("replications", "must be >= 1");
    if (!sweep_axis.empty()) {
        if (sweep_axis != "M" && sweep_axis != "K" && sweep_axis != "lambda_scale" &&
            sweep_axis != "T")
            fail("sweep.axis", "must be one of M, K, lambda_scale, T");
        if (sweep_values.empty()) fail("sweep.values", "must be nonempty");
    }
    // Channel parameter sanity, including the delta margin.
    for (size_t i = 0; i < channels.size(); ++i) {
        const auto [p01, p11] = channels[i];
        if (!(p01 > 0.0 && p01 < p11 && p11 < 1.0))
            fail("channels[" + std::to_string(i) + "]", "need 0 < p01 < p11 < 1");
        if (!(p01 > delta && 1.0 - p11 > delta))
            fail("channels[" + std::to_string(i) + "]", "violates the delta margin");
    }
    if (generator_count > 0) {
        if (!(generator_p01_range.first > delta))
            fail("channel_generator.p01_range", "lower end must exceed delta");
        if (!(generator_p11_range.second < 1.0 - delta))
            fail("channel_generator.p11_range", "upper end must stay below 1 - delta");
        if (!(generator_p01_range.first <= generator_p01_range.second &&
              generator_p11_range.first <= generator_p11_range.second))
            fail("channel_generator", "ranges must be ordered");
        if (!(generator_p01_range.second < generator_p11_range.first))
            fail("channel_generator", "p01 range must sit strictly below p11 range");
    }
}

std::vector<ChannelModel> ExperimentConfig::make_models() const {
    std::vector<ChannelModel> models;
    if (!channels.empty()) {
        for (size_t i = 0; i < channels.size(); ++i)
            models.emplace_back(channels[i].first, channels[i].second, static_cast<int>(i), delta);
        return models;
    }
    StreamRng rng(generator_seed, 0, 0);
    for (int i = 0; i < generator_count; ++i) {
        const double p01 = rng.uniform(generator_p01_range.first, generator_p01_range.second);
        const double p11 = rng.uniform(generator_p11_range.first, generator_p11_range.second);
        models.emplace_back(p01, p11, i, delta);
    }
    return models;
}

std::vector<ArrivalProcess> ExperimentConfig::make_arrivals() const {
    const int n = user_count();
    const ArrivalKind kind =
        arrival_kind == "bernoulli" ? ArrivalKind::BERNOULLI : ArrivalKind::BATCH_UNIFORM;
    std::vector<ArrivalProcess> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        double lam = 0.0;
        if (lambdas.size() == 1) lam = lambdas[0];
        else if (!lambdas.empty()) lam = lambdas[i];
        out.emplace_back(kind, lam, batch_max);
    }
    return out;
}

std::vector<double> ExperimentConfig::make_weights() const {
    if (!weights.empty()) return weights;
    return std::vector<double>(user_count(), 1.0);
}

PolicyParams ExperimentConfig::make_policy() const {
    PolicyParams p;
    p.kind = policy_kind_from_string(policy);
    p.tau = tau;
    p.M = M;
    p.K = effective_budget();
    p.T = T;
    p.g_exponent = g_exponent;
    return p;
}

nlohmann::json ExperimentConfig::resolved_json() const {
    nlohmann::json j;
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& m : make_models()) ch.push_back({m.p01, m.p11});
    j["channels"] = ch;
    j["N"] = user_count();
    j["M"] = M;
    j["K"] = effective_budget();
    j["g_exponent"] = g_exponent;
    j["tau"] = tau;
    j["delta"] = delta;
    j["weights"] = make_weights();
    j["arrival_kind"] = arrival_kind;
    j["lambda"] = lambdas;
    j["batch_max"] = batch_max;
    j["policy"] = policy;
    j["T"] = T;
    j["horizon"] = horizon;
    j["warmup"] = effective_warmup();
    j["replications"] = replications;
    j["master_seed"] = master_seed;
    j["saturated"] = saturated;
    j["common_random_numbers"] = common_random_numbers;
    j["trace"] = trace;
    if (!sweep_axis.empty()) j["sweep"] = {{"axis", sweep_axis}, {"values", sweep_values}};
    return j;
}

// --- TOML subset ------------------------------------------------------

namespace {

struct TomlCursor {
    const std::string& s;
    size_t i = 0;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }

    void skip_ws() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
};

nlohmann::json parse_toml_value(TomlCursor& c);

nlohmann::json parse_toml_array(TomlCursor& c) {
    nlohmann::json arr = nlohmann::json::array();
    ++c.i; // '['
    while (true) {
        c.skip_ws();
        while (!c.done() && (c.peek() == '\n' || c.peek() == '\r')) {
            ++c.i;
            c.skip_ws();
        }
        if (c.done()) throw std::invalid_argument("toml: unterminated array");
        if (c.peek() == ']') {
            ++c.i;
            return arr;
        }
        arr.push_back(parse_toml_value(c));
        c.skip_ws();
        while (!c.done() && (c.peek() == '\n' || c.peek() == '\r')) {
            ++c.i;
            c.skip_ws();
        }
        if (!c.done() && c.peek() == ',') ++c.i;
    }
}

nlohmann::json parse_toml_value(TomlCursor& c) {
    c.skip_ws();
    if (c.done()) throw std::invalid_argument("toml: missing value");
    const char ch = c.peek();
    if (ch == '[') return parse_toml_array(c);
    if (ch == '"') {
        ++c.i;
        std::string out;
        while (!c.done() && c.peek() != '"') out.push_back(c.s[c.i++]);
        if (c.done()) throw std::invalid_argument("toml: unterminated string");
        ++c.i;
        return out;
    }
    std::string tok;
    while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '\n' &&
           c.peek() != '\r' && c.peek() != '#')
        tok.push_back(c.s[c.i++]);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) throw std::invalid_argument("toml: empty value");
    try {
        if (tok.find_first_of(".eE") != std::string::npos &&
            tok.find_first_not_of("+-0123456789.eE") == std::string::npos)
            return std::stod(tok);
        size_t pos = 0;
        const long long v = std::stoll(tok, &pos);
        if (pos == tok.size()) return v;
        return std::stod(tok);
    } catch (const std::exception&) {
        throw std::invalid_argument("toml: cannot parse value '" + tok + "'");
    }
}

} // namespace

nlohmann::json toml_subset_to_json(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* section = &root;

    // Arrays may span lines, so parse from the raw text with a cursor.
    TomlCursor cur{text, 0};
    auto skip_line = [&]() {
        while (!cur.done() && cur.peek() != '\n') ++cur.i;
        if (!cur.done()) ++cur.i;
    };

    while (!cur.done()) {
        cur.skip_ws();
        if (cur.done()) break;
        const char ch = cur.peek();
        if (ch == '\n' || ch == '\r' || ch == '#') {
            skip_line();
            continue;
        }
        if (ch == '[') {
            ++cur.i;
            std::string name;
            while (!cur.done() && cur.peek() != ']') name.push_back(cur.s[cur.i++]);
            if (cur.done()) throw std::invalid_argument("toml: unterminated section header");
            ++cur.i;
            root[name] = nlohmann::json::object();
            section = &root[name];
            skip_line();
            continue;
        }
        std::string key;
        while (!cur.done() && cur.peek() != '=' && cur.peek() != '\n') key.push_back(cur.s[cur.i++]);
        if (cur.done() || cur.s[cur.i] != '=')
            throw std::invalid_argument("toml: expected 'key = value'");
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        ++cur.i; // '='
        (*section)[key] = parse_toml_value(cur);
        skip_line();
    }
    return root;
}

} // namespace gesched
