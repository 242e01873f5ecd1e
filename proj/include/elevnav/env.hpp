#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "elevnav/core.hpp"
#include "elevnav/orca.hpp"

namespace elevnav {

// Door-centred world: the door line is y = 0, the elevator interior spans
// x in [-cell_width/2, cell_width/2], y in [0, cell_depth]; the robot
// approaches from y < 0.
struct WorldConfig {
    double cell_width = 8.0;
    double cell_depth = 12.0;
    double door_width = 4.0;
    double agent_radius = 1.0;
    double robot_radius = 1.0;
    double robot_start_dist = 3.0;
    double v_pref = 1.0;
    double human_max_speed = 1.0;
    double dt = 0.25;
    double time_limit = 9.0;
    int n_humans = 6;
    double safety_space = 0.2;
    std::uint64_t seed = 0;

    // Human ORCA settings.
    double neighbor_dist = 15.0;
    double time_horizon = 5.0;
    double time_horizon_obst = 2.0;

    void validate() const;
    int max_steps() const;
    orca::AgentParams human_params() const;
};

struct Human {
    Vec2 pos;
    Vec2 vel;
    Vec2 goal;
    double radius = 1.0;
    bool yielding = false;

    bool operator==(const Human&) const = default;
};

struct WorldState {
    double t = 0.0;
    int steps = 0;
    Vec2 robot_pos;
    Vec2 robot_vel;
    std::vector<Human> humans;
    Outcome outcome = Outcome::Running;
    int beep_count = 0;

    bool done() const { return outcome != Outcome::Running; }
    bool operator==(const WorldState&) const = default;
};

struct StepResult {
    JointState observation;
    double reward = 0.0;
    bool done = false;
    Outcome outcome = Outcome::Running;
    double min_dist = 0.0;  // +inf with an empty crowd
    bool beeped = false;
    double entered_depth = 0.0;
};

class Elevator {
public:
    explicit Elevator(WorldConfig config);

    const WorldConfig& config() const { return config_; }

    // Random crowd by rejection sampling; every human's goal is its start.
    WorldState reset(std::uint64_t seed) const;
    // Scripted crowd at the given centres (radius agent_radius each).
    WorldState reset_with(std::span<const Vec2> human_positions) const;

    JointState observe(const WorldState& state) const;
    StepResult step(WorldState& state, const Action& action) const;

    // Humans blocking the corridor ahead of the robot step aside,
    // perpendicular to `robot_heading`.
    void apply_beep(WorldState& state, const Vec2& robot_heading) const;

    bool entered(const WorldState& state) const;
    double goal_distance(const WorldState& state) const;
    // Smallest surface-to-surface robot/human distance; +inf with no humans.
    double min_human_distance(const WorldState& state) const;

    // Point inside the elevator the robot heads for when it has no other plan.
    Vec2 robot_goal() const;
    Vec2 robot_start() const { return {0.0, -config_.robot_start_dist}; }

    std::span<const orca::LineObstacle> human_walls() const { return human_walls_; }
    std::span<const orca::LineObstacle> robot_walls() const { return robot_walls_; }

    // Corridor half-width for a human of radius r_i.
    double corridor_half_width(double human_radius) const {
        return config_.robot_radius + human_radius + config_.safety_space;
    }

private:
    void clip_robot(Vec2& pos) const;
    void clamp_human(Human& h) const;
    Vec2 clip_goal(const Vec2& goal, double radius) const;

    WorldConfig config_;
    std::vector<orca::LineObstacle> human_walls_;
    std::vector<orca::LineObstacle> robot_walls_;
};

}  // namespace elevnav
