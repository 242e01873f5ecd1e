#pragma once

#include <string>
#include <utility>
#include <vector>

#include "elevnav/core.hpp"
#include "elevnav/env.hpp"
#include "elevnav/navformer.hpp"

namespace elevnav {

struct ActionSpace {
    std::vector<Action> actions;
    double v_pref = 1.0;

    std::size_t size() const { return actions.size(); }
    bool has_beep() const;
};

// Heading index major, beep flag minor: 17 actions, or 34 with beeping.
ActionSpace enumerate_actions(double v_pref, bool beep_enabled);

struct PolicyDecision {
    Action action;
    std::vector<std::pair<Action, double>> q_values;  // empty for exploratory picks
    bool exploratory = false;
};

// One-step lookahead: each candidate is simulated through a copy of the
// world and scored r + step_discount * V(s'). With probability epsilon a
// uniformly random action is returned instead.
PolicyDecision greedy_action(const ValueNet& net, const Elevator& env, const WorldState& world,
                             const ActionSpace& space, double gamma, double epsilon, Rng& rng);

struct OrcaPolicyConfig {
    double stay_fraction = 0.1;  // below this fraction of v_pref the robot stays
    double time_horizon = 5.0;
    double time_horizon_obst = 2.0;
    double neighbor_dist = 15.0;
};

// ORCA velocity toward the goal point, snapped to the nearest discrete
// heading that keeps every ORCA constraint; never beeps.
Action orca_robot_policy(const Elevator& env, const WorldState& world, const OrcaPolicyConfig& cfg = {});

// Raw ORCA velocity before snapping.
Vec2 orca_robot_velocity(const Elevator& env, const WorldState& world, const OrcaPolicyConfig& cfg = {});

// Policy interface used by the evaluation harness. Implementations must be
// safe to call concurrently on distinct worlds.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual Action act(const Elevator& env, const WorldState& world) const = 0;
};

class OrcaPolicy final : public Policy {
public:
    explicit OrcaPolicy(OrcaPolicyConfig cfg = {}) : cfg_(cfg) {}
    std::string name() const override { return "orca"; }
    Action act(const Elevator& env, const WorldState& world) const override;

private:
    OrcaPolicyConfig cfg_;
};

// Greedy (epsilon = 0) lookahead over a learned value network.
class ValuePolicy final : public Policy {
public:
    ValuePolicy(const ValueNet& net, bool beep_enabled, double gamma, std::string name);
    std::string name() const override { return name_; }
    Action act(const Elevator& env, const WorldState& world) const override;
    PolicyDecision decide(const Elevator& env, const WorldState& world) const;

private:
    const ValueNet& net_;
    double gamma_;
    std::string name_;
    bool beep_enabled_;
};

}  // namespace elevnav
