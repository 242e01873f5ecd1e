#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "elevnav/core.hpp"
#include "elevnav/env.hpp"
#include "elevnav/policy.hpp"

namespace elevnav {

// Floating-point sum that is exact until read: partial sums are kept
// without rounding, so the result does not depend on the order values
// were added in or on how the work was split.
class ExactSum {
public:
    void add(double x);
    void merge(const ExactSum& other);
    double value() const;

private:
    std::vector<double> partials_;
};

struct CaseResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::Running;
    int steps = 0;
    double nav_time = 0.0;
    double ret = 0.0;             // undiscounted reward sum
    double discounted_ret = 0.0;  // discounted from the first step
    int beeps = 0;
};

struct Metrics {
    int n_cases = 0;
    int successes = 0;
    int collisions = 0;
    int timeouts = 0;

    double success_rate = 0.0;
    double collision_rate = 0.0;
    double timeout_rate = 0.0;     // 1 - (success + collision)
    double avg_nav_time_success = 0.0;  // NaN when no case succeeded
    double avg_return = 0.0;
    double avg_discounted_return = 0.0;
    double beep_rate = 0.0;        // beeps per episode

    ExactSum nav_time_sum;
    ExactSum return_sum;
    ExactSum discounted_sum;
    long long beeps = 0;

    void add(const CaseResult& r);
    // Recomputes every derived field from the counts and sums.
    void finalize();
};

// Case-weighted union of two disjoint evaluations.
Metrics merge(const Metrics& a, const Metrics& b);

using StepObserver = std::function<void(const WorldState& before, const Action& action,
                                        const StepResult& result, const WorldState& after)>;

// Plays `world` to completion. The discount used for discounted_ret
// is step_discount(gamma, dt, v_pref).
CaseResult run_episode(const Policy& policy, const Elevator& env, WorldState world, double gamma = 0.9,
                       const StepObserver& observer = {});

struct EvalOptions {
    int n_cases = 1000;
    std::size_t first_case = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    double gamma = 0.9;
};

// Random cases with seeds case_seed(seed, first_case + i).
Metrics evaluate(const Policy& policy, const WorldConfig& world, const EvalOptions& opts,
                 std::vector<CaseResult>* cases = nullptr);

// Fixed human placements, one episode each.
using Scenario = std::vector<Vec2>;
Metrics evaluate_scenarios(const Policy& policy, const WorldConfig& world, const std::vector<Scenario>& suite,
                           int threads = 1, double gamma = 0.9, std::vector<CaseResult>* cases = nullptr);

// Humans standing across the door with the rest of the elevator empty.
std::vector<Scenario> door_blocked_suite(const WorldConfig& world, int count, std::uint64_t seed);
// No humans at all.
std::vector<Scenario> empty_suite(int count);
// Humans along the side walls, clear of the robot's corridor.
std::vector<Scenario> side_suite(const WorldConfig& world, int count, std::uint64_t seed);

struct ReportEntry {
    std::string method;
    int crowd = 0;
    Metrics metrics;
};

struct Report {
    std::string text;  // aligned tables for reading
    std::string csv;   // same rounded values, comma separated
};

// Two tables: success / timeout / time, then collision / reward. Rates and
// times to 2 decimals, rewards to 4.
Report compare_report(const std::vector<ReportEntry>& entries);

// One header line plus one data line; doubles written round-trip exact.
std::string metrics_csv(const std::string& method, int crowd, const Metrics& m);
void write_metrics_csv(const std::filesystem::path& path, const std::string& method, int crowd, const Metrics& m);

struct MetricsRecord {
    std::string method;
    int crowd = 0;
    int n_cases = 0;
    int successes = 0;
    int collisions = 0;
    int timeouts = 0;
    double success_rate = 0.0;
    double collision_rate = 0.0;
    double timeout_rate = 0.0;
    double avg_nav_time_success = 0.0;
    double avg_return = 0.0;
    double avg_discounted_return = 0.0;
    double beep_rate = 0.0;
};

MetricsRecord parse_metrics_csv(const std::string& text);
MetricsRecord read_metrics_csv(const std::filesystem::path& path);

}  // namespace elevnav
