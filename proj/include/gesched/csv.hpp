#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace gesched {

/// Line-oriented CSV writer. Every file starts with comment lines embedding
/// the resolved config and master seed so results are replayable.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const nlohmann::json& resolved_config,
              std::uint64_t seed) {
        out_.open(path);
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
        out_ << "# config: " << resolved_config.dump() << "\n";
        out_ << "# seed: " << seed << "\n";
        out_.precision(12);
    }

    void header(const std::string& columns) { out_ << columns << "\n"; }

    template <typename... Ts> void row(const Ts&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, out_ << fields), ...);
        out_ << "\n";
    }

    void raw(const std::string& line) { out_ << line << "\n"; }

private:
    std::ofstream out_;
};

} // namespace gesched
