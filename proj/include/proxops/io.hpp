// CSV and JSONL writers with stable column orders and full-precision output,
// shared by the CLI subcommands.
#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxops/errors.hpp"

namespace proxops {

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path), n_cols_(columns.size()) {
        if (!out_) throw ConfigError("CsvWriter: cannot open " + path);
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        out_ << std::setprecision(17);
    }

    void row(const std::vector<double>& values) {
        if (values.size() != n_cols_) throw InvalidArgument("CsvWriter: column count mismatch");
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << values[i] << (i + 1 < values.size() ? "," : "\n");
    }

private:
    std::ofstream out_;
    std::size_t n_cols_;
};

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path, bool append = false)
        : out_(path, append ? std::ios::app : std::ios::out) {
        if (!out_) throw ConfigError("JsonlWriter: cannot open " + path);
    }

    void record(const nlohmann::json& j) { out_ << j.dump() << "\n"; }
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("read_jsonl: cannot open " + path);
    std::vector<nlohmann::json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(nlohmann::json::parse(line));
    }
    return records;
}

}  // namespace proxops
