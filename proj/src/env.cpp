#include "elevnav/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace elevnav {

namespace {

constexpr int kPlacementAttempts = 10000;

Vec2 closest_on_segment(const Vec2& p, const orca::LineObstacle& s) {
    const Vec2 ab = s.b - s.a;
    const double len_sq = ab.norm_sq();
    double t = len_sq > 0.0 ? dot(p - s.a, ab) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + t * ab;
}

}  // namespace

void WorldConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("world." + field + ": " + why);
    };
    auto positive = [&](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) fail(name, "must be positive");
    };
    positive(cell_width, "cell_width");
    positive(cell_depth, "cell_depth");
    positive(door_width, "door_width");
    positive(agent_radius, "agent_radius");
    positive(robot_radius, "robot_radius");
    positive(robot_start_dist, "robot_start_dist");
    positive(v_pref, "v_pref");
    positive(human_max_speed, "human_max_speed");
    positive(dt, "dt");
    positive(time_limit, "time_limit");
    positive(neighbor_dist, "neighbor_dist");
    positive(time_horizon, "time_horizon");
    positive(time_horizon_obst, "time_horizon_obst");
    if (!(std::isfinite(safety_space) && safety_space >= 0.0)) fail("safety_space", "must be non-negative");
    if (n_humans < 0) fail("n_humans", "must be non-negative");
    if (door_width < 2.0 * robot_radius) fail("door_width", "narrower than the robot");
    if (door_width > cell_width) fail("door_width", "wider than the elevator");
    if (cell_width < 2.0 * agent_radius || cell_depth < 2.0 * agent_radius)
        fail("cell_width", "elevator cannot hold a single human");
    const double steps = time_limit / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9) fail("dt", "time_limit is not a whole number of steps");
    if (robot_start_dist < robot_radius) fail("robot_start_dist", "robot would start inside the wall");

    // Each human needs a disc of radius r + s/2 that does not overlap the
    // others; beyond the hexagonal packing density placement cannot work.
    const double cell = agent_radius + safety_space / 2.0;
    const double packing = std::numbers::pi / (2.0 * std::sqrt(3.0));
    const double usable = (cell_width + safety_space) * (cell_depth + safety_space);
    if (n_humans * std::numbers::pi * cell * cell > packing * usable)
        fail("n_humans", "too many humans to place in the elevator");
}

int WorldConfig::max_steps() const { return static_cast<int>(std::lround(time_limit / dt)); }

orca::AgentParams WorldConfig::human_params() const {
    orca::AgentParams p;
    p.radius = agent_radius;
    p.max_speed = human_max_speed;
    p.neighbor_dist = neighbor_dist;
    p.time_horizon = time_horizon;
    p.time_horizon_obst = time_horizon_obst;
    p.safety_space = safety_space;
    return p;
}

Elevator::Elevator(WorldConfig config) : config_(config) {
    config_.validate();
    const double hw = config_.cell_width / 2.0;
    const double hd = config_.door_width / 2.0;
    const double depth = config_.cell_depth;

    // Humans stay inside; the door line is closed to them.
    human_walls_ = {
        {{-hw, 0.0}, {hw, 0.0}},
        {{hw, 0.0}, {hw, depth}},
        {{hw, depth}, {-hw, depth}},
        {{-hw, depth}, {-hw, 0.0}},
    };
    robot_walls_ = {
        {{-hw, 0.0}, {-hd, 0.0}},
        {{hd, 0.0}, {hw, 0.0}},
        {{hw, 0.0}, {hw, depth}},
        {{hw, depth}, {-hw, depth}},
        {{-hw, depth}, {-hw, 0.0}},
    };
}

Vec2 Elevator::robot_goal() const { return {0.0, 2.0 * config_.robot_radius}; }

WorldState Elevator::reset(std::uint64_t seed) const {
    Rng rng(seed);
    const double r = config_.agent_radius;
    const double hw = config_.cell_width / 2.0 - r;
    const double min_gap = 2.0 * r + config_.safety_space;

    std::vector<Vec2> placed;
    placed.reserve(static_cast<std::size_t>(config_.n_humans));
    for (int i = 0; i < config_.n_humans; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
            const Vec2 p{rng.uniform(-hw, hw), rng.uniform(r, config_.cell_depth - r)};
            ok = std::all_of(placed.begin(), placed.end(),
                             [&](const Vec2& q) { return (p - q).norm() >= min_gap; });
            if (ok) placed.push_back(p);
        }
        if (!ok)
            throw ConfigError("world.n_humans: could not place human " + std::to_string(i) + " after " +
                              std::to_string(kPlacementAttempts) + " attempts");
    }
    return reset_with(placed);
}

WorldState Elevator::reset_with(std::span<const Vec2> human_positions) const {
    WorldState s;
    s.robot_pos = robot_start();
    s.humans.reserve(human_positions.size());
    for (const auto& p : human_positions) {
        if (!p.finite()) throw InvalidArgument("reset_with: non-finite human position");
        Human h;
        h.pos = p;
        h.goal = p;
        h.radius = config_.agent_radius;
        s.humans.push_back(h);
    }
    return s;
}

bool Elevator::entered(const WorldState& state) const {
    return state.robot_pos.y >= config_.robot_radius;
}

double Elevator::goal_distance(const WorldState& state) const {
    return std::max(0.0, config_.robot_radius - state.robot_pos.y);
}

double Elevator::min_human_distance(const WorldState& state) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : state.humans)
        best = std::min(best, (h.pos - state.robot_pos).norm() - h.radius - config_.robot_radius);
    return best;
}

JointState Elevator::observe(const WorldState& state) const {
    JointState js;
    js.robot.d_goal = goal_distance(state);
    js.robot.vel = state.robot_vel;
    js.robot.v_pref = config_.v_pref;
    js.robot.radius = config_.robot_radius;
    js.humans.reserve(state.humans.size());
    for (const auto& h : state.humans) {
        HumanState hs;
        hs.pos = h.pos;
        hs.vel = h.vel;
        hs.radius = h.radius;
        hs.dist = (state.robot_pos - h.pos).norm();
        hs.radius_sum = h.radius + config_.robot_radius;
        js.humans.push_back(hs);
    }
    return js;
}

Vec2 Elevator::clip_goal(const Vec2& goal, double radius) const {
    const double hw = config_.cell_width / 2.0 - radius;
    return {std::clamp(goal.x, -hw, hw), std::clamp(goal.y, radius, config_.cell_depth - radius)};
}

void Elevator::apply_beep(WorldState& state, const Vec2& robot_heading) const {
    if (!(robot_heading.norm() > 0.0)) throw InvalidArgument("apply_beep: zero heading");
    const Vec2 ahead = normalized(robot_heading);
    const Vec2 left = left_of(ahead);
    for (auto& h : state.humans) {
        const Vec2 rel = h.pos - state.robot_pos;
        const double along = dot(rel, ahead);
        const double lateral = dot(rel, left);
        const double half = corridor_half_width(h.radius);
        if (along < 0.0 || std::abs(lateral) >= half) continue;
        // Exactly on the centreline goes left.
        const double side = lateral >= 0.0 ? 1.0 : -1.0;
        const double shift = (half - std::abs(lateral)) + config_.safety_space;
        h.goal = clip_goal(h.pos + side * shift * left, h.radius);
        h.yielding = true;
    }
    ++state.beep_count;
}

void Elevator::clip_robot(Vec2& pos) const {
    const double r = config_.robot_radius;
    // A couple of passes settle contacts at the door posts and corners.
    for (int pass = 0; pass < 3; ++pass) {
        bool moved = false;
        for (const auto& w : robot_walls_) {
            const Vec2 c = closest_on_segment(pos, w);
            const Vec2 away = pos - c;
            const double d = away.norm();
            if (d >= r) continue;
            const Vec2 n = d > 0.0 ? away / d : left_of(normalized(w.b - w.a));
            pos = c + n * r;
            moved = true;
        }
        if (!moved) break;
    }
}

void Elevator::clamp_human(Human& h) const {
    const double hw = config_.cell_width / 2.0 - h.radius;
    h.pos.x = std::clamp(h.pos.x, -hw, hw);
    h.pos.y = std::clamp(h.pos.y, h.radius, config_.cell_depth - h.radius);
}

StepResult Elevator::step(WorldState& state, const Action& action) const {
    if (state.done()) throw ContractViolation("step: episode already finished");

    const Vec2 robot_cmd = action.velocity(config_.v_pref);
    if (action.beep) {
        const Vec2 heading = action.is_stay() ? robot_goal() - state.robot_pos : robot_cmd;
        apply_beep(state, heading.norm() > 0.0 ? heading : Vec2{0.0, 1.0});
    }

    // Human velocities from one synchronous snapshot. The robot is not a
    // neighbour: humans only move when asked to.
    const std::size_t n = state.humans.size();
    std::vector<orca::AgentView> views(n);
    for (std::size_t i = 0; i < n; ++i)
        views[i] = {state.humans[i].pos, state.humans[i].vel, state.humans[i].radius};
    std::vector<orca::AgentParams> params(n, config_.human_params());
    for (std::size_t i = 0; i < n; ++i) params[i].radius = state.humans[i].radius;

    const double dt = config_.dt;
    std::vector<Vec2> new_vel(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Human& h = state.humans[i];
        const Vec2 to_goal = h.goal - h.pos;
        const double dist = to_goal.norm();
        Vec2 preferred;
        if (dist > 1e-9) preferred = to_goal / dist * std::min(config_.human_max_speed, dist / dt);
        new_vel[i] = orca::compute_velocity(i, views, params, human_walls_, preferred, dt, 0.5);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Human& h = state.humans[i];
        h.vel = new_vel[i];
        h.pos += h.vel * dt;
        clamp_human(h);
    }

    Vec2 robot_pos = state.robot_pos + robot_cmd * dt;
    clip_robot(robot_pos);
    state.robot_pos = robot_pos;
    state.robot_vel = robot_cmd;
    state.t = (state.steps + 1) * dt;
    ++state.steps;

    const double d_min = min_human_distance(state);
    const bool collided = d_min < 0.0;
    const bool inside = entered(state);
    if (collided)
        state.outcome = Outcome::Collision;
    else if (inside)
        state.outcome = Outcome::Success;
    else if (state.steps >= config_.max_steps())
        state.outcome = Outcome::Timeout;

    // The step that exhausts the time budget is scored as past the limit.
    const double t_reward = state.outcome == Outcome::Timeout ? config_.time_limit + dt : state.t;
    const double d_reward = std::isfinite(d_min) ? d_min : std::numeric_limits<double>::max();

    StepResult res;
    res.reward = reward(d_reward, t_reward, config_.time_limit, inside && !collided,
                        robot_cmd.norm(), action.beep);
    res.observation = observe(state);
    res.done = state.done();
    res.outcome = state.outcome;
    res.min_dist = d_min;
    res.beeped = action.beep;
    res.entered_depth = state.robot_pos.y;
    return res;
}

}  // namespace elevnav
