#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elevnav/core.hpp"
#include "elevnav/env.hpp"
#include "elevnav/trainer.hpp"

namespace elevnav {

struct TraceGeometry {
    double cell_width = 0.0;
    double cell_depth = 0.0;
    double door_width = 0.0;
    double robot_radius = 0.0;
    double agent_radius = 0.0;
    double dt = 0.0;
    double time_limit = 0.0;

    static TraceGeometry of(const WorldConfig& w);
    bool operator==(const TraceGeometry&) const = default;
};

struct TraceHeader {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string method;
    TraceGeometry world;
    bool operator==(const TraceHeader&) const = default;
};

struct AgentSnapshot {
    Vec2 pos;
    Vec2 vel;
    bool operator==(const AgentSnapshot&) const = default;
};

// State before the action, then what the action led to.
struct TraceStep {
    int step = 0;
    double t = 0.0;
    AgentSnapshot robot;
    std::vector<AgentSnapshot> humans;
    int action = kStayHeading;
    bool beep = false;
    double reward = 0.0;
    double d_min = 0.0;  // +inf when there are no humans
    bool operator==(const TraceStep&) const = default;
};

struct TraceFooter {
    Outcome outcome = Outcome::Running;
    double ret = 0.0;
    int steps = 0;
    AgentSnapshot robot;  // final state
    std::vector<AgentSnapshot> humans;
    bool operator==(const TraceFooter&) const = default;
};

struct EpisodeTrace {
    TraceHeader header;
    std::vector<TraceStep> steps;
    TraceFooter footer;
    bool operator==(const EpisodeTrace&) const = default;
};

AgentSnapshot robot_snapshot(const WorldState& w);
std::vector<AgentSnapshot> human_snapshots(const WorldState& w);

// Line-delimited JSON: header line, one line per step, footer line.
std::string serialize_trace(const EpisodeTrace& trace);
EpisodeTrace parse_trace(const std::string& text);
void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace);
EpisodeTrace read_trace(const std::filesystem::path& path);

// Training log lines.
std::string epoch_log_line(const EpochLog& e);
std::string episode_log_line(const EpisodeLog& e);

}  // namespace elevnav
