#include "elevnav/policy.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace elevnav {

bool ActionSpace::has_beep() const {
    return std::any_of(actions.begin(), actions.end(), [](const Action& a) { return a.beep; });
}

ActionSpace enumerate_actions(double v_pref, bool beep_enabled) {
    if (!(v_pref > 0.0)) throw InvalidArgument("enumerate_actions: v_pref must be positive");
    ActionSpace space;
    space.v_pref = v_pref;
    for (int k = 0; k <= kStayHeading; ++k) {
        space.actions.push_back({k, false});
        if (beep_enabled) space.actions.push_back({k, true});
    }
    return space;
}

PolicyDecision greedy_action(const ValueNet& net, const Elevator& env, const WorldState& world,
                             const ActionSpace& space, double gamma, double epsilon, Rng& rng) {
    if (world.done()) throw ContractViolation("greedy_action: episode already finished");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("greedy_action: epsilon outside [0,1]");
    if (space.actions.empty()) throw InvalidArgument("greedy_action: empty action space");

    PolicyDecision decision;
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        decision.action = space.actions[static_cast<std::size_t>(rng.below(space.size()))];
        decision.exploratory = true;
        return decision;
    }

    const WorldConfig& cfg = env.config();
    const double discount = step_discount(gamma, cfg.dt, cfg.v_pref);
    const std::size_t n = space.size();

    std::vector<double> rewards(n);
    std::vector<JointState> next(n);
    std::vector<bool> terminal(n);
    std::vector<const JointState*> to_value;
    std::vector<std::size_t> value_index;
    for (std::size_t i = 0; i < n; ++i) {
        WorldState copy = world;
        StepResult r = env.step(copy, space.actions[i]);
        rewards[i] = r.reward;
        terminal[i] = r.done;
        next[i] = std::move(r.observation);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (terminal[i]) continue;
        to_value.push_back(&next[i]);
        value_index.push_back(i);
    }
    const std::vector<double> values = net.values(std::span<const JointState* const>(to_value));

    std::vector<double> scores(rewards);
    for (std::size_t j = 0; j < value_index.size(); ++j) scores[value_index[j]] += discount * values[j];

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (scores[i] > scores[best]) best = i;

    decision.action = space.actions[best];
    decision.q_values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) decision.q_values.emplace_back(space.actions[i], scores[i]);
    return decision;
}

namespace {

struct RobotProgram {
    Vec2 velocity;
    std::vector<orca::HalfPlane> constraints;
};

RobotProgram robot_program(const Elevator& env, const WorldState& world, const OrcaPolicyConfig& cfg) {
    const WorldConfig& wc = env.config();
    std::vector<orca::AgentView> agents;
    agents.reserve(world.humans.size() + 1);
    agents.push_back({world.robot_pos, world.robot_vel, wc.robot_radius});
    for (const auto& h : world.humans) agents.push_back({h.pos, h.vel, h.radius});

    orca::AgentParams p;
    p.radius = wc.robot_radius;
    p.max_speed = wc.v_pref;
    p.neighbor_dist = cfg.neighbor_dist;
    p.time_horizon = cfg.time_horizon;
    p.time_horizon_obst = cfg.time_horizon_obst;
    p.safety_space = wc.safety_space;
    const std::vector<orca::AgentParams> params(agents.size(), p);

    const Vec2 to_goal = env.robot_goal() - world.robot_pos;
    const Vec2 preferred = to_goal.norm() > 1e-9 ? normalized(to_goal) * wc.v_pref : Vec2{};

    // The robot yields fully: humans do not see it.
    RobotProgram prog;
    std::size_t num_obst = 0;
    prog.constraints =
        orca::assemble_constraints(0, agents, params, env.robot_walls(), wc.dt, 1.0, &num_obst);
    prog.velocity = orca::solve_least_violation(prog.constraints, num_obst, preferred, wc.v_pref);
    return prog;
}

}  // namespace

Vec2 orca_robot_velocity(const Elevator& env, const WorldState& world, const OrcaPolicyConfig& cfg) {
    return robot_program(env, world, cfg).velocity;
}

Action orca_robot_policy(const Elevator& env, const WorldState& world, const OrcaPolicyConfig& cfg) {
    if (world.done()) throw ContractViolation("orca_robot_policy: episode already finished");
    const double v_pref = env.config().v_pref;
    const RobotProgram prog = robot_program(env, world, cfg);
    const double speed = prog.velocity.norm();
    if (speed < cfg.stay_fraction * v_pref) return {kStayHeading, false};

    const Vec2 dir = prog.velocity / speed;
    std::array<int, kNumHeadings> order{};
    std::iota(order.begin(), order.end(), 0);
    std::array<double, kNumHeadings> cosine{};
    for (int k = 0; k < kNumHeadings; ++k) cosine[static_cast<std::size_t>(k)] = dot(Action{k, false}.direction(), dir);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return cosine[static_cast<std::size_t>(a)] > cosine[static_cast<std::size_t>(b)];
    });

    // Full-speed snapping can overshoot a slowed ORCA velocity; skip any
    // heading whose step would end in contact with a human.
    const WorldConfig& wc = env.config();
    for (int k : order) {
        if (cosine[static_cast<std::size_t>(k)] <= 0.0) break;
        const Vec2 next = world.robot_pos + Action{k, false}.velocity(v_pref) * wc.dt;
        const bool clear = std::all_of(world.humans.begin(), world.humans.end(), [&](const Human& h) {
            return (next - (h.pos + h.vel * wc.dt)).norm() - h.radius - wc.robot_radius >= wc.safety_space;
        });
        if (clear) return {k, false};
    }
    return {kStayHeading, false};
}

Action OrcaPolicy::act(const Elevator& env, const WorldState& world) const {
    return orca_robot_policy(env, world, cfg_);
}

ValuePolicy::ValuePolicy(const ValueNet& net, bool beep_enabled, double gamma, std::string name)
    : net_(net), gamma_(gamma), name_(std::move(name)), beep_enabled_(beep_enabled) {}

PolicyDecision ValuePolicy::decide(const Elevator& env, const WorldState& world) const {
    const ActionSpace space = enumerate_actions(env.config().v_pref, beep_enabled_);
    Rng unused(0);
    return greedy_action(net_, env, world, space, gamma_, 0.0, unused);
}

Action ValuePolicy::act(const Elevator& env, const WorldState& world) const {
    return decide(env, world).action;
}

}  // namespace elevnav
