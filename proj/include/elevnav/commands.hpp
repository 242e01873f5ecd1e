#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "elevnav/config.hpp"
#include "elevnav/evalharness.hpp"
#include "elevnav/navformer.hpp"
#include "elevnav/policy.hpp"

namespace elevnav {

inline constexpr const char* kFinalWeights = "weights.navf";
inline constexpr const char* kImitationWeights = "weights_il.navf";
inline constexpr const char* kTrainLog = "train_log.jsonl";

// "orca", "rl-beep" or "rl-nobeep". Learned methods need `net`.
std::unique_ptr<Policy> make_policy(const std::string& method, const ValueNet* net, double gamma);
bool method_needs_weights(const std::string& method);
std::vector<std::string> parse_method_list(const std::string& csv);

// Replaces `path` in one step so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

struct TrainSummary {
    std::filesystem::path weights;
    std::filesystem::path imitation_weights;
    std::filesystem::path log;
    int demos_attempted = 0;
    double final_il_loss = 0.0;
    int episodes = 0;
};

// Demonstrations, imitation fit, then reinforcement learning. Writes the
// imitation checkpoint, periodic checkpoints, the final weights and the
// training log into cfg.output_dir.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& progress);

struct EvalRequest {
    std::vector<std::string> methods{"orca"};
    std::optional<std::filesystem::path> weights;
    // "random" uses cfg.eval crowd sizes and n_cases; "door-blocked",
    // "empty" and "side" run n_cases fixed scenarios.
    std::string suite = "random";
};

std::vector<ReportEntry> cmd_eval(const RunConfig& cfg, const EvalRequest& req, std::ostream& progress);

struct RolloutRequest {
    std::string method = "orca";
    std::optional<std::filesystem::path> weights;
    // Empty: random crowd from case seeds. Otherwise a JSON scenario file
    // ({"humans": [[x, y], ...]}) or a built-in "empty", "door-blocked:K", "side:K".
    std::string scenario;
    std::size_t first_case = 0;
    int count = 1;
    bool render = false;
};

struct RolloutResult {
    std::filesystem::path trace;
    std::optional<std::filesystem::path> svg;
    Outcome outcome = Outcome::Running;
    int steps = 0;
    int beeps = 0;
};

std::vector<RolloutResult> cmd_rollout(const RunConfig& cfg, const RolloutRequest& req, std::ostream& progress);

// Writes demos.jsonl (one line per retained episode) into cfg.output_dir.
DemoStats cmd_demo_collect(const RunConfig& cfg, std::ostream& progress);

Scenario parse_scenario(const std::string& json_text);
Scenario builtin_scenario(const WorldConfig& world, const std::string& spec, std::uint64_t seed);

}  // namespace elevnav
