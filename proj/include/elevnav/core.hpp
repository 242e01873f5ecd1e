#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace elevnav {

// Error types shared across modules.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedVersion : FormatError {
    using FormatError::FormatError;
};
struct TrainingFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    double norm() const { return std::hypot(x, y); }
    constexpr double norm_sq() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3-D cross product.
constexpr double det(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
// Counter-clockwise perpendicular.
constexpr Vec2 left_of(const Vec2& v) { return {-v.y, v.x}; }
inline Vec2 normalized(const Vec2& v) {
    const double n = v.norm();
    return n > 0.0 ? v / n : Vec2{};
}

// Robot observation: [d_g, v_x, v_y, v_pref, r].
struct RobotState {
    static constexpr std::size_t kDim = 5;
    double d_goal = 0.0;
    Vec2 vel;
    double v_pref = 1.0;
    double radius = 1.0;

    void flatten_into(double* out) const;
    bool operator==(const RobotState&) const = default;
};

// Observable state of one human: [p_x, p_y, v_x, v_y, r_i, d_i, r_i + r].
struct HumanState {
    static constexpr std::size_t kDim = 7;
    Vec2 pos;
    Vec2 vel;
    double radius = 1.0;
    double dist = 0.0;
    double radius_sum = 2.0;

    void flatten_into(double* out) const;
    bool operator==(const HumanState&) const = default;
};

struct JointState {
    static constexpr std::size_t kRowDim = RobotState::kDim + HumanState::kDim;
    RobotState robot;
    std::vector<HumanState> humans;

    std::vector<double> robot_vector() const;
    // One row of kRowDim scalars per human, robot state first.
    std::vector<double> human_rows() const;
    bool finite() const;
    bool operator==(const JointState&) const = default;
};

inline constexpr int kStayHeading = 16;
inline constexpr int kNumHeadings = 16;

struct Action {
    int heading_index = kStayHeading;
    bool beep = false;

    bool is_stay() const { return heading_index == kStayHeading; }
    // Unit direction for moving headings, zero for stay.
    Vec2 direction() const;
    Vec2 velocity(double v_pref) const { return direction() * v_pref; }
    bool operator==(const Action&) const = default;
};

enum class Outcome { Running, Success, Collision, Timeout };

std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

// Per-step reward. Branches are tested top to bottom:
// overlap, timeout, entered, stopped, discomfort zone, otherwise.
// A beep costs a flat 0.1 on top of whichever branch fires.
double reward(double min_human_dist, double t, double time_limit, bool entered,
              double robot_speed, bool beep);

inline constexpr double kDiscomfortDist = 0.2;
inline constexpr double kBeepPrice = 0.1;

// gamma^(dt * v_pref)
double step_discount(double gamma, double dt, double v_pref);

struct DiscountedReturn {
    double value = 0.0;
    bool empty = false;  // warning: nothing to sum
};

DiscountedReturn discounted_return(std::span<const double> rewards, double gamma,
                                   double dt, double v_pref, std::size_t from_index);

// Deterministic generator whose output does not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);
// Stable seed for case `index` of a run seeded with `seed`.
std::uint64_t case_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace elevnav
