#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace medsurv {

inline constexpr const char *kVersion = "0.1.0";

/// Provenance record written next to every produced artifact: the config
/// snapshot, seed, software version, input-file digests taken at read time,
/// and per-phase timings.
struct RunManifest {
    std::string command;
    std::string version = kVersion;
    std::uint64_t seed = 0;
    std::string config_snapshot; // raw JSON text
    std::vector<std::pair<std::string, std::string>> input_digests;
    std::vector<std::pair<std::string, double>> timings_seconds;

    void add_input(const std::filesystem::path &file);
    void write(const std::filesystem::path &file) const;
};

std::string sha256_file(const std::filesystem::path &file);
std::string sha256_string(const std::string &data);

} // namespace medsurv
