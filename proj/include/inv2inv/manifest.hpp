#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "inv2inv/config.hpp"

namespace inv2inv {

inline constexpr const char* kToolVersion = "0.1.0";

// Flat key=value record of one run: tool version, config hash, the full
// resolved configuration, input digests, output file list and wall-clock
// timings. Everything except the timing.* keys is reproducible, so a replay
// must match a previous manifest on all non-timing keys.
struct RunManifest {
    std::string tool_version = kToolVersion;
    Config config;
    std::vector<std::pair<std::string, std::string>> input_paths;      // name -> path
    std::vector<std::pair<std::string, std::uint64_t>> input_digests;  // name -> fnv1a64
    std::vector<std::string> outputs;
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;

    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
};

}  // namespace inv2inv
