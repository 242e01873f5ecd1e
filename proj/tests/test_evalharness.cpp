#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include "elevnav/evalharness.hpp"

using namespace elevnav;

namespace {

WorldConfig world(int n) {
    WorldConfig c;
    c.n_humans = n;
    return c;
}

class StayPolicy final : public Policy {
public:
    std::string name() const override { return "stay"; }
    Action act(const Elevator&, const WorldState&) const override { return Action{kStayHeading, false}; }
};

// Drives at the nearest human.
class RamPolicy final : public Policy {
public:
    std::string name() const override { return "ram"; }
    Action act(const Elevator&, const WorldState& w) const override {
        Vec2 target = w.humans.front().pos;
        for (const auto& h : w.humans)
            if ((h.pos - w.robot_pos).norm() < (target - w.robot_pos).norm()) target = h.pos;
        const Vec2 d = target - w.robot_pos;
        int best = 0;
        for (int k = 1; k < kNumHeadings; ++k)
            if (dot(Action{k, false}.direction(), d) > dot(Action{best, false}.direction(), d)) best = k;
        return Action{best, false};
    }
};

// Bitwise comparison of every reported field.
bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_same(const Metrics& a, const Metrics& b) {
    CHECK(a.n_cases == b.n_cases);
    CHECK(a.successes == b.successes);
    CHECK(a.collisions == b.collisions);
    CHECK(a.timeouts == b.timeouts);
    CHECK(same_bits(a.success_rate, b.success_rate));
    CHECK(same_bits(a.collision_rate, b.collision_rate));
    CHECK(same_bits(a.timeout_rate, b.timeout_rate));
    CHECK(same_bits(a.avg_nav_time_success, b.avg_nav_time_success));
    CHECK(same_bits(a.avg_return, b.avg_return));
    CHECK(same_bits(a.avg_discounted_return, b.avg_discounted_return));
    CHECK(same_bits(a.beep_rate, b.beep_rate));
}

Metrics synthetic(int n, int s, int c, double time, double ret) {
    Metrics m;
    for (int i = 0; i < n; ++i) {
        CaseResult r;
        r.index = static_cast<std::size_t>(i);
        r.outcome = i < s ? Outcome::Success : i < s + c ? Outcome::Collision : Outcome::Timeout;
        r.nav_time = time;
        r.ret = ret;
        m.add(r);
    }
    m.finalize();
    return m;
}

}  // namespace

TEST_CASE("exact sum") {
    ExactSum s;
    for (double x : {1e100, 1.0, -1e100}) s.add(x);
    CHECK(s.value() == 1.0);

    // Multiples of 2^-20 with small numerators: the integer total is the oracle.
    Rng rng(1);
    std::vector<long long> ks(5000);
    for (auto& k : ks) k = static_cast<long long>(rng.below(2000001)) - 1000000;
    const long long total = std::accumulate(ks.begin(), ks.end(), 0LL);
    std::vector<double> xs;
    for (auto k : ks) xs.push_back(std::ldexp(static_cast<double>(k), -20) * 1.1);
    ExactSum forward, backward, halves_a, halves_b;
    for (double x : xs) forward.add(x);
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) backward.add(*it);
    for (std::size_t i = 0; i < xs.size(); ++i) (i % 2 ? halves_a : halves_b).add(xs[i]);
    halves_a.merge(halves_b);
    CHECK(same_bits(forward.value(), backward.value()));
    CHECK(same_bits(forward.value(), halves_a.value()));
    CHECK(forward.value() == doctest::Approx(std::ldexp(static_cast<double>(total), -20) * 1.1).epsilon(1e-12));
    CHECK(ExactSum{}.value() == 0.0);
}

TEST_CASE("rate identity holds exactly") {
    Rng rng(2);
    for (int trial = 0; trial < 5000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3000));
        const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(n) + 1));
        const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - s) + 1));
        Metrics m;
        m.n_cases = n;
        m.successes = s;
        m.collisions = c;
        m.timeouts = n - s - c;
        m.finalize();
        CHECK(m.success_rate + m.collision_rate + m.timeout_rate == 1.0);
        CHECK(m.timeout_rate >= 0.0);
        CHECK(std::abs(m.timeout_rate - static_cast<double>(n - s - c) / n) <= 1e-15);
    }
}

TEST_CASE("metrics from synthetic cases") {
    const Metrics m = synthetic(10, 3, 2, 5.0, 1.5);
    CHECK(m.success_rate == doctest::Approx(0.3));
    CHECK(m.collision_rate == doctest::Approx(0.2));
    CHECK(m.timeout_rate == doctest::Approx(0.5));
    CHECK(m.avg_nav_time_success == 5.0);
    CHECK(m.avg_return == 1.5);
    CHECK(std::isnan(synthetic(4, 0, 2, 5.0, 0).avg_nav_time_success));
}

TEST_CASE("stay-forever policy times out every case with return -2") {
    const StayPolicy stay;
    EvalOptions opts;
    opts.n_cases = 40;
    opts.seed = 3;
    std::vector<CaseResult> cases;
    const Metrics m = evaluate(stay, world(6), opts, &cases);
    CHECK(m.timeout_rate == 1.0);
    CHECK(m.success_rate == 0.0);
    CHECK(m.collision_rate == 0.0);
    CHECK(m.avg_return == -2.0);
    CHECK(std::isnan(m.avg_nav_time_success));
    CHECK(m.beep_rate == 0.0);
    const double f = std::pow(0.9, 0.25);
    CHECK(m.avg_discounted_return == doctest::Approx(-2.0 * std::pow(f, 35)).epsilon(1e-12));
    REQUIRE(cases.size() == 40);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CHECK(cases[i].index == i);
        CHECK(cases[i].seed == case_seed(3, i));
        CHECK(cases[i].steps == 36);
        CHECK(cases[i].ret == -2.0);
    }
}

TEST_CASE("ramming policy collides every time") {
    const RamPolicy ram;
    Rng rng(4);
    std::vector<Scenario> suite;
    for (int i = 0; i < 30; ++i) suite.push_back({{rng.uniform(-1, 1), rng.uniform(1.2, 3)}});
    const Metrics m = evaluate_scenarios(ram, world(1), suite);
    CHECK(m.collision_rate == 1.0);
    CHECK(m.success_rate == 0.0);
    CHECK(m.timeout_rate == 0.0);
    CHECK(m.avg_return < 0.0);
}

TEST_CASE("evaluation is deterministic and independent of threading") {
    const OrcaPolicy orca;
    EvalOptions opts;
    opts.n_cases = 60;
    opts.seed = 11;
    const Metrics a = evaluate(orca, world(6), opts);
    const Metrics b = evaluate(orca, world(6), opts);
    opts.threads = 4;
    const Metrics c = evaluate(orca, world(6), opts);
    check_same(a, b);
    check_same(a, c);
    CHECK(a.success_rate + a.collision_rate + a.timeout_rate == 1.0);
}

TEST_CASE("evaluating a union equals merging the parts") {
    const OrcaPolicy orca;
    EvalOptions all;
    all.n_cases = 50;
    all.seed = 5;
    EvalOptions first = all, second = all;
    first.n_cases = 21;
    second.first_case = 21;
    second.n_cases = 29;
    const Metrics whole = evaluate(orca, world(7), all);
    const Metrics merged = merge(evaluate(orca, world(7), first), evaluate(orca, world(7), second));
    check_same(whole, merged);
    CHECK(merged.success_rate + merged.collision_rate + merged.timeout_rate == 1.0);
}

TEST_CASE("run_episode reports every step to the observer") {
    const OrcaPolicy orca;
    const Elevator env(world(6));
    int calls = 0;
    double ret = 0.0;
    const CaseResult r = run_episode(orca, env, env.reset(9), 0.9,
                                     [&](const WorldState& before, const Action&, const StepResult& res,
                                         const WorldState& after) {
                                         ++calls;
                                         ret += res.reward;
                                         CHECK(after.steps == before.steps + 1);
                                         CHECK(res.done == after.done());
                                     });
    CHECK(calls == r.steps);
    CHECK(r.ret == doctest::Approx(ret).epsilon(1e-14));
    CHECK(r.outcome != Outcome::Running);
    if (r.outcome == Outcome::Success) CHECK(r.nav_time == r.steps * 0.25);
}

TEST_CASE("scenario suites") {
    const WorldConfig w = world(6);
    const auto blocked = door_blocked_suite(w, 40, 1);
    const auto side = side_suite(w, 40, 1);
    CHECK(blocked.size() == 40);
    CHECK(side.size() == 40);
    CHECK(empty_suite(5).size() == 5);
    for (const auto& s : empty_suite(5)) CHECK(s.empty());
    const double corridor = w.robot_radius + w.agent_radius + w.safety_space;
    auto well_placed = [&](const Scenario& s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(std::abs(s[i].x) <= 3.0);
            CHECK(s[i].y >= 1.0);
            CHECK(s[i].y <= 11.0);
            for (std::size_t j = i + 1; j < s.size(); ++j) CHECK((s[i] - s[j]).norm() >= 2.2);
        }
    };
    for (const auto& s : blocked) {
        well_placed(s);
        bool blocks = false;
        for (const auto& p : s) blocks |= std::abs(p.x) < corridor;
        CHECK(blocks);
    }
    for (const auto& s : side) {
        well_placed(s);
        CHECK_FALSE(s.empty());
        for (const auto& p : s) CHECK(std::abs(p.x) >= corridor);
    }
    // ORCA cannot get through a blocked door and has no trouble beside a side crowd.
    const OrcaPolicy orca;
    CHECK(evaluate_scenarios(orca, w, blocked).success_rate == 0.0);
    CHECK(evaluate_scenarios(orca, w, side).success_rate == 1.0);
}

TEST_CASE("comparison report") {
    Metrics orca6;
    orca6.n_cases = 100;
    orca6.successes = 58;
    orca6.timeouts = 42;
    for (int i = 0; i < 58; ++i) orca6.nav_time_sum.add(6.24);
    for (int i = 0; i < 100; ++i) orca6.return_sum.add(0.12345);
    orca6.finalize();
    const Report one = compare_report({{"orca", 6, orca6}});
    CHECK(one.text.find("orca        6     0.58     0.42   6.24") != std::string::npos);
    CHECK(one.text.find("0.1235") != std::string::npos);
    CHECK(one.csv == "method,crowd,n_cases,success,timeout,time,collision,reward\norca,6,100,0.58,0.42,6.24,0.00,0.1235\n");
    // One data row per table.
    auto count_lines = [](const std::string& s, const std::string& needle) {
        std::size_t n = 0;
        for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
        return n;
    };
    CHECK(count_lines(one.text, "orca ") == 2);

    Metrics other = synthetic(100, 90, 5, 4.5, 9.0);
    const Report two = compare_report({{"orca", 6, orca6}, {"rl-beep", 6, other}});
    CHECK(count_lines(two.csv, "\n") == 3);
    CHECK(two.csv.find("rl-beep,6,100,0.90,0.05,4.50,0.05,9.0000") != std::string::npos);

    CHECK_THROWS_AS(compare_report({{"orca", 6, orca6}, {"x", 6, synthetic(10, 1, 1, 1, 1)}}), InvalidArgument);
    CHECK_THROWS_AS(compare_report({}), InvalidArgument);
}

TEST_CASE("metrics csv round trip") {
    const Metrics m = synthetic(7, 3, 1, 4.75, -0.123456789012345);
    const MetricsRecord r = parse_metrics_csv(metrics_csv("rl-beep", 8, m));
    CHECK(r.method == "rl-beep");
    CHECK(r.crowd == 8);
    CHECK(r.n_cases == 7);
    CHECK(r.successes == 3);
    CHECK(r.collisions == 1);
    CHECK(r.timeouts == 3);
    CHECK(same_bits(r.success_rate, m.success_rate));
    CHECK(same_bits(r.timeout_rate, m.timeout_rate));
    CHECK(same_bits(r.avg_return, m.avg_return));
    CHECK(same_bits(r.avg_nav_time_success, m.avg_nav_time_success));

    const MetricsRecord none = parse_metrics_csv(metrics_csv("orca", 6, synthetic(3, 0, 0, 1, 0)));
    CHECK(std::isnan(none.avg_nav_time_success));

    const auto path = std::filesystem::temp_directory_path() / "elevnav_test_metrics.csv";
    write_metrics_csv(path, "orca", 7, m);
    CHECK(read_metrics_csv(path).n_cases == 7);
    std::filesystem::remove(path);

    const std::string good = metrics_csv("orca", 6, m);
    CHECK_THROWS_AS(parse_metrics_csv("nonsense\n"), FormatError);
    CHECK_THROWS_AS(parse_metrics_csv(good.substr(0, good.find('\n') + 1)), FormatError);
    std::string bad = good;
    bad.replace(bad.find(",6,"), 3, ",x,");
    CHECK_THROWS_AS(parse_metrics_csv(bad), FormatError);
    CHECK_THROWS_AS(metrics_csv("a,b", 6, m), InvalidArgument);
}
