#include "elevnav/core.hpp"

#include <array>
#include <numbers>

namespace elevnav {

void RobotState::flatten_into(double* out) const {
    out[0] = d_goal;
    out[1] = vel.x;
    out[2] = vel.y;
    out[3] = v_pref;
    out[4] = radius;
}

void HumanState::flatten_into(double* out) const {
    out[0] = pos.x;
    out[1] = pos.y;
    out[2] = vel.x;
    out[3] = vel.y;
    out[4] = radius;
    out[5] = dist;
    out[6] = radius_sum;
}

std::vector<double> JointState::robot_vector() const {
    std::vector<double> v(RobotState::kDim);
    robot.flatten_into(v.data());
    return v;
}

std::vector<double> JointState::human_rows() const {
    std::vector<double> rows(humans.size() * kRowDim);
    for (std::size_t i = 0; i < humans.size(); ++i) {
        double* row = rows.data() + i * kRowDim;
        robot.flatten_into(row);
        humans[i].flatten_into(row + RobotState::kDim);
    }
    return rows;
}

bool JointState::finite() const {
    double buf[kRowDim];
    robot.flatten_into(buf);
    for (std::size_t i = 0; i < RobotState::kDim; ++i)
        if (!std::isfinite(buf[i])) return false;
    for (const auto& h : humans) {
        h.flatten_into(buf);
        for (std::size_t i = 0; i < HumanState::kDim; ++i)
            if (!std::isfinite(buf[i])) return false;
    }
    return true;
}

namespace {

std::array<Vec2, kNumHeadings> make_heading_table() {
    std::array<Vec2, kNumHeadings> table{};
    for (int k = 0; k < kNumHeadings; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / kNumHeadings;
        double c = std::cos(angle);
        double s = std::sin(angle);
        // Axis-aligned headings come out exact.
        if (std::abs(c) < 1e-12) c = 0.0;
        if (std::abs(s) < 1e-12) s = 0.0;
        table[static_cast<std::size_t>(k)] = {c, s};
    }
    return table;
}

const std::array<Vec2, kNumHeadings> kHeadings = make_heading_table();

}  // namespace

Vec2 Action::direction() const {
    if (heading_index < 0 || heading_index > kStayHeading)
        throw InvalidArgument("heading index out of range: " + std::to_string(heading_index));
    if (is_stay()) return {};
    return kHeadings[static_cast<std::size_t>(heading_index)];
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Running: return "running";
        case Outcome::Success: return "success";
        case Outcome::Collision: return "collision";
        case Outcome::Timeout: return "timeout";
    }
    return "running";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "running") return Outcome::Running;
    if (s == "success") return Outcome::Success;
    if (s == "collision") return Outcome::Collision;
    if (s == "timeout") return Outcome::Timeout;
    throw FormatError("unknown outcome '" + s + "'");
}

double reward(double min_human_dist, double t, double time_limit, bool entered,
              double robot_speed, bool beep) {
    if (!std::isfinite(min_human_dist) || !std::isfinite(t) || !std::isfinite(time_limit) ||
        !std::isfinite(robot_speed))
        throw InvalidArgument("reward: non-finite input");
    if (time_limit <= 0.0) throw InvalidArgument("reward: time limit must be positive");
    if (t < 0.0) throw InvalidArgument("reward: negative time");

    double r;
    if (min_human_dist < 0.0)
        r = -0.25;
    else if (t > time_limit)
        r = -2.0;
    else if (entered)
        r = 10.0 + (time_limit - t) * 0.15;
    else if (robot_speed == 0.0)
        r = 0.0;
    else if (min_human_dist < kDiscomfortDist)
        r = -0.1 + min_human_dist / 2.0;
    else
        r = -0.01;
    return beep ? r - kBeepPrice : r;
}

double step_discount(double gamma, double dt, double v_pref) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("step_discount: gamma must lie in (0,1)");
    if (!(dt > 0.0)) throw InvalidArgument("step_discount: dt must be positive");
    if (!(v_pref > 0.0)) throw InvalidArgument("step_discount: v_pref must be positive");
    return std::pow(gamma, dt * v_pref);
}

DiscountedReturn discounted_return(std::span<const double> rewards, double gamma,
                                   double dt, double v_pref, std::size_t from_index) {
    const double factor = step_discount(gamma, dt, v_pref);
    if (from_index > rewards.size())
        throw InvalidArgument("discounted_return: start index past the end");
    if (from_index == rewards.size()) return {0.0, true};
    // Backward accumulation: G_k = r_k + factor * G_{k+1}.
    double g = 0.0;
    for (std::size_t k = rewards.size(); k-- > from_index;) g = rewards[k] + factor * g;
    return {g, false};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("Rng::below: empty range");
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t limit = -n % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        if (static_cast<std::uint64_t>(m) >= limit) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace elevnav
