#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "hemogen/errors.hpp"
#include "hemogen/serialization.hpp"

namespace hemogen {

/// Batch generation settings: a synthesis config plus paths and batch shape.
/// Loaded from a JSON file; command-line flags are applied on top.
struct RunConfig {
    std::filesystem::path db;
    std::filesystem::path out_dir = "out";
    int count = 1;
    int parallelism = 1;
    bool seed_given = false;
    SynthesisConfig synthesis;
};

/// HEMOGEN_THREADS, when set to a positive integer, else 1.
inline int default_parallelism() {
    if (const char* env = std::getenv("HEMOGEN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0 && v < 1 << 16) return static_cast<int>(v);
    }
    return 1;
}

inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
    try {
        if (j.contains("db")) base.db = j.at("db").get<std::string>();
        if (j.contains("out_dir")) base.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("count")) base.count = j.at("count").get<int>();
        if (j.contains("parallelism")) base.parallelism = j.at("parallelism").get<int>();
        if (j.contains("synthesis")) {
            base.synthesis = synthesis_from_json(j.at("synthesis"), base.synthesis);
            if (j.at("synthesis").contains("seed")) base.seed_given = true;
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad run config: ") + e.what());
    }
    return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j, std::move(base));
}

inline json run_config_to_json(const RunConfig& r) {
    return {{"db", r.db.string()},
            {"out_dir", r.out_dir.string()},
            {"count", r.count},
            {"parallelism", r.parallelism},
            {"synthesis", synthesis_to_json(r.synthesis)}};
}

}  // namespace hemogen
