#pragma once

#include "mtp/io.hpp"

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mtp {

inline constexpr const char* kToolkit = "mtp";
inline constexpr const char* kVersion = "1.0.0";

const std::vector<std::string>& command_names();

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string csv() const;
};

// Shortest decimal that reads back to the same double.
std::string num(double x);
std::string num(long long x);

struct RunOutput {
    Json results = Json::object();
    std::vector<std::string> warnings;
    std::map<std::string, Table> tables;       // written as tables/<name>.csv
    std::map<std::string, std::string> files;  // extra artifacts, relative to the output directory
};

Json load_config(const std::string& path);

// "a.b.c=value": value is parsed as JSON, falling back to a plain string.
void apply_override(Json& cfg, const std::string& assignment);

// Parses and re-serialises the config with defaults filled in and grids
// expanded. Throws ArgumentError on schema violations. Idempotent.
Json canonical_config(const std::string& command, const Json& cfg);

// Runs a canonical config. Throws ArgumentError or NumericError.
RunOutput execute(const Json& canonical);

struct RunRequest {
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    int threads = 1;
};

// Full command: 0 on success, 2 on validation errors (no artifacts written),
// 3 on numerical failure (report written with status "failed").
int run(const RunRequest& req, std::ostream& diag);

}  // namespace mtp
