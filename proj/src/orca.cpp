#include "elevnav/orca.hpp"

#include <algorithm>
#include <cmath>

namespace elevnav::orca {

namespace {

constexpr double kEps = 1e-12;

// Line form used by the incremental solver: feasible to the left of `dir`.
struct Line {
    Vec2 point;
    Vec2 dir;
};

Line to_line(const HalfPlane& h) { return {h.point, Vec2{h.normal.y, -h.normal.x}}; }

bool lp1(std::span<const Line> lines, std::size_t line_no, double radius, const Vec2& opt,
         bool direction_opt, Vec2& result) {
    const Line& ln = lines[line_no];
    const double dp = dot(ln.point, ln.dir);
    const double disc = dp * dp + radius * radius - ln.point.norm_sq();
    if (disc < 0.0) return false;  // speed disc misses the line

    const double sq = std::sqrt(disc);
    double t_left = -dp - sq;
    double t_right = -dp + sq;

    for (std::size_t i = 0; i < line_no; ++i) {
        const double denom = det(ln.dir, lines[i].dir);
        const double numer = det(lines[i].dir, ln.point - lines[i].point);
        if (std::abs(denom) <= kEps) {
            if (numer < 0.0) return false;  // parallel and infeasible
            continue;
        }
        const double t = numer / denom;
        if (denom >= 0.0)
            t_right = std::min(t_right, t);
        else
            t_left = std::max(t_left, t);
        if (t_left > t_right) return false;
    }

    if (direction_opt) {
        result = dot(opt, ln.dir) > 0.0 ? ln.point + t_right * ln.dir : ln.point + t_left * ln.dir;
    } else {
        const double t = dot(ln.dir, opt - ln.point);
        if (t < t_left)
            result = ln.point + t_left * ln.dir;
        else if (t > t_right)
            result = ln.point + t_right * ln.dir;
        else
            result = ln.point + t * ln.dir;
    }
    return true;
}

// Returns the index of the first line that could not be satisfied, or
// lines.size() on success.
std::size_t lp2(std::span<const Line> lines, double radius, const Vec2& opt, bool direction_opt,
                Vec2& result) {
    if (direction_opt)
        result = opt * radius;
    else if (opt.norm_sq() > radius * radius)
        result = normalized(opt) * radius;
    else
        result = opt;

    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (det(lines[i].dir, lines[i].point - result) > 0.0) {
            const Vec2 previous = result;
            if (!lp1(lines, i, radius, opt, direction_opt, result)) {
                result = previous;
                return i;
            }
        }
    }
    return lines.size();
}

void lp3(std::span<const Line> lines, std::size_t num_hard, std::size_t begin, double radius,
         Vec2& result) {
    double distance = 0.0;
    for (std::size_t i = begin; i < lines.size(); ++i) {
        if (det(lines[i].dir, lines[i].point - result) <= distance) continue;

        std::vector<Line> proj(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(num_hard));
        for (std::size_t j = num_hard; j < i; ++j) {
            Line line;
            const double d = det(lines[i].dir, lines[j].dir);
            if (std::abs(d) <= kEps) {
                if (dot(lines[i].dir, lines[j].dir) > 0.0) continue;  // same direction
                line.point = 0.5 * (lines[i].point + lines[j].point);
            } else {
                line.point = lines[i].point +
                             (det(lines[j].dir, lines[i].point - lines[j].point) / d) * lines[i].dir;
            }
            line.dir = normalized(lines[j].dir - lines[i].dir);
            proj.push_back(line);
        }

        const Vec2 previous = result;
        const Vec2 opt{-lines[i].dir.y, lines[i].dir.x};
        if (lp2(proj, radius, opt, true, result) < proj.size()) {
            // Numerical corner case; keep the previous point.
            result = previous;
        }
        distance = det(lines[i].dir, lines[i].point - result);
    }
}

Vec2 closest_on_segment(const Vec2& p, const LineObstacle& s) {
    const Vec2 ab = s.b - s.a;
    const double len_sq = ab.norm_sq();
    double t = len_sq > 0.0 ? dot(p - s.a, ab) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + t * ab;
}

}  // namespace

void AgentParams::validate() const {
    if (!(radius > 0.0 && max_speed > 0.0 && neighbor_dist > 0.0 && time_horizon > 0.0 &&
          time_horizon_obst > 0.0 && safety_space >= 0.0))
        throw InvalidArgument("orca agent parameters must be positive");
}

namespace {

struct VoBoundary {
    Vec2 u;    // smallest change of relative velocity reaching the boundary
    Vec2 dir;  // boundary line direction, feasible side on its left
};

VoBoundary vo_boundary(const Vec2& rel_pos, const Vec2& rel_vel, double r, double time_horizon,
                       double dt) {
    const double dist_sq = rel_pos.norm_sq();
    const double r_sq = r * r;

    if (dist_sq > r_sq) {
        const double inv_tau = 1.0 / time_horizon;
        const Vec2 w = rel_vel - inv_tau * rel_pos;
        const double w_len_sq = w.norm_sq();
        const double dot1 = dot(w, rel_pos);

        if (dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq) {
            // Closest boundary point lies on the cut-off circle.
            const double w_len = std::sqrt(w_len_sq);
            const Vec2 unit_w = w / w_len;
            return {(r * inv_tau - w_len) * unit_w, Vec2{unit_w.y, -unit_w.x}};
        }
        // Closest boundary point lies on a leg of the cone.
        const double leg = std::sqrt(dist_sq - r_sq);
        Vec2 dir;
        if (det(rel_pos, w) > 0.0)
            dir = Vec2{rel_pos.x * leg - rel_pos.y * r, rel_pos.x * r + rel_pos.y * leg} / dist_sq;
        else
            dir = -Vec2{rel_pos.x * leg + rel_pos.y * r, -rel_pos.x * r + rel_pos.y * leg} / dist_sq;
        return {dot(rel_vel, dir) * dir - rel_vel, dir};
    }

    // Already overlapping: escape within one time step.
    const double inv_dt = 1.0 / dt;
    Vec2 w = rel_vel - inv_dt * rel_pos;
    double w_len = w.norm();
    if (w_len <= kEps) {
        // Coincident centres and velocities; pick a fixed direction.
        w = rel_pos.norm() > kEps ? -normalized(rel_pos) : Vec2{0.0, -1.0};
        w_len = 0.0;
    } else {
        w = w / w_len;
    }
    return {(r * inv_dt - w_len) * w, Vec2{w.y, -w.x}};
}

}  // namespace

Vec2 vo_escape(const Vec2& rel_pos, const Vec2& rel_vel, double combined_radius,
               double time_horizon, double dt) {
    return vo_boundary(rel_pos, rel_vel, combined_radius, time_horizon, dt).u;
}

HalfPlane orca_halfplane(const Vec2& self_pos, const Vec2& self_vel, const Vec2& other_pos,
                         const Vec2& other_vel, double combined_radius, double time_horizon,
                         double dt, double reciprocity) {
    if (!(combined_radius > 0.0)) throw InvalidArgument("orca_halfplane: radius must be positive");
    if (!(time_horizon > 0.0)) throw InvalidArgument("orca_halfplane: time horizon must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("orca_halfplane: dt must be positive");

    const Vec2 rel_pos = other_pos - self_pos;
    const Vec2 rel_vel = self_vel - other_vel;
    const VoBoundary b = vo_boundary(rel_pos, rel_vel, combined_radius, time_horizon, dt);
    return {self_vel + reciprocity * b.u, left_of(b.dir)};
}

HalfPlane obstacle_halfplane(const Vec2& pos, double radius, const LineObstacle& obstacle,
                             double time_horizon, double dt) {
    const Vec2 c = closest_on_segment(pos, obstacle);
    Vec2 away = pos - c;
    double d = away.norm();
    if (d <= kEps) {
        // Centre on the segment: push along the segment's left normal.
        away = left_of(normalized(obstacle.b - obstacle.a));
        d = 0.0;
    } else {
        away = away / d;
    }
    const double gap = d - radius;
    // Approach speed toward the wall limited so the gap closes no sooner
    // than the horizon; overlapping discs must leave within one step.
    const double bound = gap >= 0.0 ? gap / time_horizon : gap / dt;
    return {-away * bound, away};
}

std::optional<Vec2> solve_lp2d(std::span<const HalfPlane> constraints, const Vec2& preferred,
                               double max_speed) {
    if (!(max_speed > 0.0)) throw InvalidArgument("solve_lp2d: max_speed must be positive");
    std::vector<Line> lines;
    lines.reserve(constraints.size());
    for (const auto& c : constraints) lines.push_back(to_line(c));
    Vec2 result;
    if (lp2(lines, max_speed, preferred, false, result) < lines.size()) return std::nullopt;
    return result;
}

Vec2 solve_least_violation(std::span<const HalfPlane> constraints, std::size_t num_hard,
                           const Vec2& start, double max_speed) {
    std::vector<Line> lines;
    lines.reserve(constraints.size());
    for (const auto& c : constraints) lines.push_back(to_line(c));
    Vec2 result = start;
    if (result.norm() > max_speed) result = normalized(result) * max_speed;
    const std::size_t fail = lp2(lines, max_speed, start, false, result);
    if (fail < lines.size()) lp3(lines, std::min(num_hard, fail), fail, max_speed, result);
    if (result.norm() > max_speed) result = normalized(result) * max_speed;
    return result;
}

std::vector<HalfPlane> assemble_constraints(std::size_t agent_index, std::span<const AgentView> agents,
                                            std::span<const AgentParams> params,
                                            std::span<const LineObstacle> obstacles, double dt,
                                            double reciprocity, std::size_t* num_obstacle_lines) {
    if (agent_index >= agents.size() || params.size() != agents.size())
        throw InvalidArgument("compute_velocity: bad agent index or parameter count");
    const AgentView& self = agents[agent_index];
    const AgentParams& p = params[agent_index];

    std::vector<HalfPlane> out;
    out.reserve(obstacles.size() + agents.size());
    for (const auto& ob : obstacles)
        out.push_back(obstacle_halfplane(self.pos, self.radius, ob, p.time_horizon_obst, dt));
    if (num_obstacle_lines) *num_obstacle_lines = out.size();

    const double range_sq = p.neighbor_dist * p.neighbor_dist;
    for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j == agent_index) continue;
        const AgentView& other = agents[j];
        if ((other.pos - self.pos).norm_sq() > range_sq) continue;
        const double combined = self.radius + other.radius + p.safety_space;
        out.push_back(orca_halfplane(self.pos, self.vel, other.pos, other.vel, combined,
                                     p.time_horizon, dt, reciprocity));
    }
    return out;
}

Vec2 compute_velocity(std::size_t agent_index, std::span<const AgentView> agents,
                      std::span<const AgentParams> params, std::span<const LineObstacle> obstacles,
                      const Vec2& preferred, double dt, double reciprocity) {
    if (!(dt > 0.0)) throw InvalidArgument("compute_velocity: dt must be positive");
    std::size_t num_obst = 0;
    const auto constraints =
        assemble_constraints(agent_index, agents, params, obstacles, dt, reciprocity, &num_obst);
    const double max_speed = params[agent_index].max_speed;
    Vec2 v = solve_least_violation(constraints, num_obst, preferred, max_speed);
    return v;
}

}  // namespace elevnav::orca
