#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "elevnav/policy.hpp"

using namespace elevnav;

namespace {

WorldConfig world(int n) {
    WorldConfig c;
    c.n_humans = n;
    return c;
}

const NetDims kSmall{24, 16, 4, 20, 16, 16};

// Recomputes every candidate score from scratch with single-state forwards.
std::vector<double> brute_force_scores(const ValueNet& net, const Elevator& env, const WorldState& w,
                                       const ActionSpace& space, double gamma) {
    const double f = std::pow(gamma, env.config().dt * env.config().v_pref);
    std::vector<double> out;
    for (const auto& a : space.actions) {
        WorldState copy = w;
        const StepResult r = env.step(copy, a);
        out.push_back(r.reward + (r.done ? 0.0 : f * net.forward(r.observation).value));
    }
    return out;
}

}  // namespace

TEST_CASE("action enumeration") {
    const ActionSpace plain = enumerate_actions(1.0, false);
    const ActionSpace beep = enumerate_actions(1.0, true);
    CHECK(plain.size() == 17);
    CHECK(beep.size() == 34);
    CHECK_FALSE(plain.has_beep());
    CHECK(beep.has_beep());
    for (int k = 0; k < 17; ++k) {
        CHECK(plain.actions[k] == Action{k, false});
        CHECK(beep.actions[2 * k] == Action{k, false});
        CHECK(beep.actions[2 * k + 1] == Action{k, true});
    }
    CHECK(plain.actions[0].velocity(1.0) == Vec2{1, 0});
    CHECK(plain.actions[4].velocity(1.0) == Vec2{0, 1});
    CHECK(plain.actions[16].is_stay());
    CHECK_THROWS_AS(enumerate_actions(0.0, true), InvalidArgument);
}

TEST_CASE("epsilon = 1 explores uniformly") {
    const Elevator env(world(3));
    const WorldState w = env.reset(5);
    const ActionSpace space = enumerate_actions(1.0, true);
    const ValueNet net(kSmall);
    Rng rng(99);
    std::map<std::pair<int, bool>, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const PolicyDecision d = greedy_action(net, env, w, space, 0.9, 1.0, rng);
        CHECK(d.exploratory);
        CHECK(d.q_values.empty());
        ++counts[{d.action.heading_index, d.action.beep}];
    }
    CHECK(counts.size() == 34);
    for (const auto& [a, n] : counts) CHECK(std::abs(static_cast<double>(n) / draws - 1.0 / 34) <= 0.02);
}

TEST_CASE("zero value net follows the immediate reward") {
    const Elevator env(world(0));
    const ValueNet zero(kSmall);
    const ActionSpace space = enumerate_actions(1.0, true);
    Rng rng(1);
    WorldState w = env.reset(0);
    // One step short of the threshold only the straight heading enters.
    w.robot_pos = {0, 0.75};
    const PolicyDecision d = greedy_action(zero, env, w, space, 0.9, 0.0, rng);
    CHECK_FALSE(d.exploratory);
    CHECK(d.action == Action{4, false});
    REQUIRE(d.q_values.size() == 34);
    CHECK(d.q_values[9].second == doctest::Approx(d.q_values[8].second - 0.1).epsilon(1e-12));
    // Far from the door a genuine stop (0) beats any move (-0.01).
    const PolicyDecision far = greedy_action(zero, env, env.reset(0), space, 0.9, 0.0, rng);
    CHECK(far.action == Action{kStayHeading, false});
}

TEST_CASE("greedy choice equals a brute-force argmax") {
    const Elevator env(world(6));
    const ActionSpace space = enumerate_actions(1.0, true);
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const ValueNet net = ValueNet::random(kSmall, seed + 100);
        WorldState w = env.reset(seed);
        Rng walk(seed);
        for (int k = 0; k < 6 && !w.done(); ++k) {
            Rng rng(7);
            const PolicyDecision d = greedy_action(net, env, w, space, 0.9, 0.0, rng);
            const std::vector<double> oracle = brute_force_scores(net, env, w, space, 0.9);
            REQUIRE(d.q_values.size() == oracle.size());
            std::size_t best = 0;
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                CHECK(d.q_values[i].first == space.actions[i]);
                CHECK(std::abs(d.q_values[i].second - oracle[i]) <= 1e-12);
                if (oracle[i] > oracle[best]) best = i;
            }
            CHECK(d.action == space.actions[best]);

            // Pure function of its inputs.
            Rng other(12345);
            const PolicyDecision again = greedy_action(net, env, w, space, 0.9, 0.0, other);
            CHECK(again.action == d.action);
            CHECK(again.q_values == d.q_values);

            env.step(w, space.actions[walk.below(space.size())]);
        }
    }
}

TEST_CASE("beep twins differ by exactly the beep price when the next state agrees") {
    const Elevator env(world(6));
    const ActionSpace space = enumerate_actions(1.0, true);
    const ValueNet net = ValueNet::random(kSmall, 4);
    int same = 0, different = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const WorldState w = env.reset(seed);
        Rng rng(0);
        const PolicyDecision d = greedy_action(net, env, w, space, 0.9, 0.0, rng);
        for (std::size_t k = 0; k < 17; ++k) {
            WorldState a = w, b = w;
            const StepResult ra = env.step(a, space.actions[2 * k]);
            const StepResult rb = env.step(b, space.actions[2 * k + 1]);
            a.beep_count = b.beep_count;
            for (std::size_t i = 0; i < a.humans.size(); ++i) {
                a.humans[i].goal = b.humans[i].goal;
                a.humans[i].yielding = b.humans[i].yielding;
            }
            if (a == b && ra.observation.human_rows() == rb.observation.human_rows()) {
                ++same;
                CHECK(d.q_values[2 * k].second - d.q_values[2 * k + 1].second == doctest::Approx(0.1).epsilon(1e-12));
            } else {
                ++different;
            }
        }
    }
    CHECK(same > 0);
    CHECK(different > 0);
}

TEST_CASE("beeping can only win when it changes the crowd's response") {
    const Elevator env(world(6));
    const ActionSpace space = enumerate_actions(1.0, true);
    const std::vector<Vec2> pair{{-1.2, 1.3}, {1.2, 1.3}};
    for (std::uint64_t s = 0; s < 60; ++s) {
        const ValueNet net = ValueNet::random(kSmall, s);
        const WorldState w = s % 2 ? env.reset(s) : env.reset_with(pair);
        Rng rng(s);
        const PolicyDecision d = greedy_action(net, env, w, space, 0.9, 0.0, rng);
        if (!d.action.beep) continue;
        WorldState a = w, b = w;
        env.step(a, Action{d.action.heading_index, false});
        env.step(b, d.action);
        bool moved = false;
        for (std::size_t i = 0; i < a.humans.size(); ++i) moved |= !(a.humans[i].pos == b.humans[i].pos);
        CHECK(moved);
    }
}

TEST_CASE("greedy_action input checks") {
    const Elevator env(world(0));
    const ActionSpace space = enumerate_actions(1.0, false);
    const ValueNet net(kSmall);
    Rng rng(0);
    WorldState w = env.reset(0);
    CHECK_THROWS_AS(greedy_action(net, env, w, space, 0.9, 1.5, rng), InvalidArgument);
    CHECK_THROWS_AS(greedy_action(net, env, w, space, 0.9, -0.1, rng), InvalidArgument);
    w.outcome = Outcome::Timeout;
    CHECK_THROWS_AS(greedy_action(net, env, w, space, 0.9, 0.0, rng), ContractViolation);
}

TEST_CASE("ORCA baseline") {
    SUBCASE("empty elevator: straight up, 16 steps") {
        const Elevator env(world(0));
        WorldState w = env.reset(0);
        int steps = 0;
        while (!w.done()) {
            const Action a = orca_robot_policy(env, w);
            CHECK(a == Action{4, false});
            env.step(w, a);
            ++steps;
        }
        CHECK(steps == 16);
        CHECK(w.outcome == Outcome::Success);
    }
    SUBCASE("blocked door: stays and times out") {
        const Elevator env(world(3));
        const std::vector<Vec2> wall{{-2.2, 1.1}, {0, 1.1}, {2.2, 1.1}};
        WorldState w = env.reset_with(wall);
        int stays = 0, steps = 0;
        while (!w.done()) {
            const Action a = orca_robot_policy(env, w);
            CHECK_FALSE(a.beep);
            stays += a.is_stay();
            env.step(w, a);
            ++steps;
        }
        CHECK(w.outcome == Outcome::Timeout);
        CHECK(stays > steps / 2);
    }
    SUBCASE("offset human: the robot veers to the free side") {
        const Elevator env(world(1));
        for (double x : {-1.2, 1.2}) {
            const std::vector<Vec2> one{{x, 1.5}};
            const WorldState w = env.reset_with(one);
            const Vec2 v = orca_robot_velocity(env, w);
            const Vec2 snapped = orca_robot_policy(env, w).velocity(1.0);
            CHECK(v.x * x < 0.0);
            CHECK(snapped.x * x < 0.0);
        }
    }
}

TEST_CASE("policy wrappers") {
    const Elevator env(world(0));
    const WorldState w = env.reset(0);
    const OrcaPolicy orca;
    CHECK(orca.name() == "orca");
    CHECK(orca.act(env, w) == Action{4, false});

    const ValueNet net(kSmall);
    const ValuePolicy beep(net, true, 0.9, "rl-beep");
    const ValuePolicy quiet(net, false, 0.9, "rl-nobeep");
    CHECK(beep.name() == "rl-beep");
    CHECK(beep.decide(env, w).q_values.size() == 34);
    CHECK(quiet.decide(env, w).q_values.size() == 17);
    CHECK(quiet.act(env, w) == quiet.decide(env, w).action);
}
