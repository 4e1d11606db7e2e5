#pragma once

// Run configuration. The config file is flat JSON whose keys are the CLI flag
// names without the leading dashes.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pad/pipeline.hpp"

namespace pad {

struct RunConfig {
    PipelineConfig pipeline;
    RegionProviderSpec provider;
    std::optional<std::filesystem::path> heatmaps_dir;
    int jobs = 1;
    std::uint64_t seed = 0;

    void validate() const {
        pipeline.validate();
        if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
        if (!(provider.timeout_s > 0.0)) throw InvalidArgument("timeout-s must be > 0");
    }
};

inline std::vector<int> parse_qualities(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InvalidArgument("empty entry in quality list '" + text + "'");
        const auto token = item.substr(b, e - b + 1);
        std::size_t used = 0;
        int q = 0;
        try {
            q = std::stoi(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) throw InvalidArgument("bad quality '" + token + "'");
        out.push_back(q);
    }
    if (out.empty()) throw InvalidArgument("quality list is empty");
    return out;
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{"r-mi",   "p",           "t-m",      "delta",     "window",
                                               "bins",   "flat-floor",  "qualities", "smooth-side", "provider",
                                               "timeout-s", "heatmaps-dir", "jobs",  "seed"};
    return keys;
}

/// Overlays the keys present in `j` onto `cfg`; unknown keys are rejected.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    const auto& known = config_keys();
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw InvalidArgument("unknown config key '" + key + "'");
        }
    }
    try {
        auto& pc = cfg.pipeline;
        if (j.contains("r-mi")) pc.fusion.r_mi = j.at("r-mi").get<double>();
        if (j.contains("p")) pc.fusion.p = j.at("p").get<double>();
        if (j.contains("t-m")) pc.t_m = j.at("t-m").get<double>();
        if (j.contains("delta")) pc.fusion.delta = j.at("delta").get<int>();
        if (j.contains("window")) pc.mi.window = j.at("window").get<int>();
        if (j.contains("bins")) pc.mi.bins = j.at("bins").get<int>();
        if (j.contains("flat-floor")) pc.mi.flat_entropy_floor = j.at("flat-floor").get<double>();
        if (j.contains("qualities")) {
            const auto& q = j.at("qualities");
            pc.cd.sweep = q.is_string() ? parse_qualities(q.get<std::string>()) : q.get<std::vector<int>>();
        }
        if (j.contains("smooth-side")) pc.cd.smooth_side = j.at("smooth-side").get<int>();
        if (j.contains("timeout-s")) cfg.provider.timeout_s = j.at("timeout-s").get<double>();
        if (j.contains("provider")) {
            cfg.provider = RegionProviderSpec::parse(j.at("provider").get<std::string>(), cfg.provider.timeout_s);
        }
        if (j.contains("heatmaps-dir")) {
            const auto& h = j.at("heatmaps-dir");
            if (h.is_null()) cfg.heatmaps_dir.reset();
            else cfg.heatmaps_dir = h.get<std::string>();
        }
        if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad config value: ") + e.what());
    }
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    apply_json(base, j);
    return base;
}

/// Effective configuration, echoed into every report.
inline nlohmann::json to_json(const RunConfig& cfg) {
    const auto& pc = cfg.pipeline;
    return {{"r-mi", pc.fusion.r_mi},
            {"p", pc.fusion.p},
            {"t-m", pc.t_m},
            {"delta", pc.fusion.delta},
            {"window", pc.mi.window},
            {"bins", pc.mi.bins},
            {"flat-floor", pc.mi.flat_entropy_floor},
            {"qualities", pc.cd.sweep},
            {"smooth-side", pc.cd.smooth_side},
            {"provider", cfg.provider.to_string()},
            {"timeout-s", cfg.provider.timeout_s},
            {"heatmaps-dir", cfg.heatmaps_dir ? nlohmann::json(cfg.heatmaps_dir->string()) : nlohmann::json(nullptr)},
            {"jobs", cfg.jobs},
            {"seed", cfg.seed}};
}

/// Explicit path wins, then $PAD_CONFIG, then none.
inline std::optional<std::filesystem::path> resolve_config_path(const std::string& explicit_path) {
    if (!explicit_path.empty()) return std::filesystem::path(explicit_path);
    if (const char* env = std::getenv("PAD_CONFIG"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

}  // namespace pad
