#pragma once

#include <optional>
#include <span>
#include <vector>

#include "elevnav/core.hpp"

namespace elevnav::orca {

struct AgentParams {
    double radius = 1.0;
    double max_speed = 1.0;
    double neighbor_dist = 15.0;
    double time_horizon = 5.0;
    double time_horizon_obst = 2.0;
    double safety_space = 0.2;

    void validate() const;
};

// Feasible side: {u : (u - point) . normal >= 0}.
struct HalfPlane {
    Vec2 point;
    Vec2 normal;

    double violation(const Vec2& u) const { return -dot(u - point, normal); }
    bool contains(const Vec2& u, double tol = 0.0) const { return violation(u) <= tol; }
};

struct LineObstacle {
    Vec2 a;
    Vec2 b;
};

struct AgentView {
    Vec2 pos;
    Vec2 vel;
    double radius = 1.0;
};

// Velocity constraint that self must respect to avoid `other` for
// `time_horizon` seconds, taking `reciprocity` of the required correction.
HalfPlane orca_halfplane(const Vec2& self_pos, const Vec2& self_vel, const Vec2& other_pos,
                         const Vec2& other_vel, double combined_radius, double time_horizon,
                         double dt, double reciprocity);

// Minimal correction u out of the truncated velocity obstacle for the given
// relative configuration (reciprocity 1).
Vec2 vo_escape(const Vec2& rel_pos, const Vec2& rel_vel, double combined_radius,
               double time_horizon, double dt);

// Constraint keeping a disc from crossing a static segment within `time_horizon`.
HalfPlane obstacle_halfplane(const Vec2& pos, double radius, const LineObstacle& obstacle,
                             double time_horizon, double dt);

// Closest velocity to `preferred` within the speed disc satisfying every
// constraint, or nullopt when the constraints have no common point in the disc.
std::optional<Vec2> solve_lp2d(std::span<const HalfPlane> constraints, const Vec2& preferred,
                               double max_speed);

// Fallback for infeasible programs: keeps the first `num_hard` constraints
// and minimizes the largest violation of the rest.
Vec2 solve_least_violation(std::span<const HalfPlane> constraints, std::size_t num_hard,
                           const Vec2& start, double max_speed);

// Full ORCA velocity for agent `agent_index`. Neighbors beyond
// params.neighbor_dist are ignored; constraints are assembled obstacles
// first, then neighbors in index order.
Vec2 compute_velocity(std::size_t agent_index, std::span<const AgentView> agents,
                      std::span<const AgentParams> params, std::span<const LineObstacle> obstacles,
                      const Vec2& preferred, double dt, double reciprocity);

// Constraint list compute_velocity would solve.
std::vector<HalfPlane> assemble_constraints(std::size_t agent_index, std::span<const AgentView> agents,
                                            std::span<const AgentParams> params,
                                            std::span<const LineObstacle> obstacles, double dt,
                                            double reciprocity, std::size_t* num_obstacle_lines = nullptr);

}  // namespace elevnav::orca
