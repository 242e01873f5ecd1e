#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elevnav/env.hpp"
#include "elevnav/trainer.hpp"

namespace elevnav {

struct EvalConfig {
    int n_cases = 1000;
    std::vector<int> crowd_sizes{6, 7, 8};
    int threads = 1;
};

// Everything a run needs. `seed` drives both the worlds and training.
struct RunConfig {
    WorldConfig world;
    TrainConfig train;
    EvalConfig eval;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    // Pushes `seed` into the world and training configs, then validates.
    void finalize();
    void validate() const;
};

// Missing keys keep their defaults; unknown keys and wrong types raise
// ConfigError naming the offending field.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
// Canonical form: sorted keys, every field present.
std::string run_config_json(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
// Hex digest of the canonical form, ignoring output_dir and eval.threads.
std::string config_hash(const RunConfig& cfg);

}  // namespace elevnav
