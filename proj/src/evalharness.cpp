#include "elevnav/evalharness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace elevnav {

void ExactSum::add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
        if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials_[i++] = lo;
        x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
}

void ExactSum::merge(const ExactSum& other) {
    for (double p : other.partials_) add(p);
}

double ExactSum::value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size() - 1;
    double hi = partials_[n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
    }
    // Round half-even correction when the tail sits exactly on a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

void Metrics::add(const CaseResult& r) {
    ++n_cases;
    switch (r.outcome) {
        case Outcome::Success:
            ++successes;
            nav_time_sum.add(r.nav_time);
            break;
        case Outcome::Collision: ++collisions; break;
        case Outcome::Timeout: ++timeouts; break;
        case Outcome::Running: throw ContractViolation("Metrics::add: episode still running");
    }
    return_sum.add(r.ret);
    discounted_sum.add(r.discounted_ret);
    beeps += r.beeps;
}

void Metrics::finalize() {
    if (successes + collisions + timeouts != n_cases) throw ContractViolation("Metrics: outcome counts disagree");
    if (n_cases == 0) {
        success_rate = collision_rate = timeout_rate = 0.0;
        avg_nav_time_success = std::numeric_limits<double>::quiet_NaN();
        avg_return = avg_discounted_return = beep_rate = 0.0;
        return;
    }
    const double n = n_cases;
    success_rate = successes / n;
    collision_rate = collisions / n;
    timeout_rate = timeouts / n;
    // The timeout share absorbs any rounding so the three rates add to 1.
    if (success_rate + collision_rate + timeout_rate != 1.0) timeout_rate = 1.0 - (success_rate + collision_rate);
    avg_nav_time_success =
        successes > 0 ? nav_time_sum.value() / successes : std::numeric_limits<double>::quiet_NaN();
    avg_return = return_sum.value() / n;
    avg_discounted_return = discounted_sum.value() / n;
    beep_rate = static_cast<double>(beeps) / n;
}

Metrics merge(const Metrics& a, const Metrics& b) {
    Metrics m;
    m.n_cases = a.n_cases + b.n_cases;
    m.successes = a.successes + b.successes;
    m.collisions = a.collisions + b.collisions;
    m.timeouts = a.timeouts + b.timeouts;
    m.nav_time_sum = a.nav_time_sum;
    m.nav_time_sum.merge(b.nav_time_sum);
    m.return_sum = a.return_sum;
    m.return_sum.merge(b.return_sum);
    m.discounted_sum = a.discounted_sum;
    m.discounted_sum.merge(b.discounted_sum);
    m.beeps = a.beeps + b.beeps;
    m.finalize();
    return m;
}

CaseResult run_episode(const Policy& policy, const Elevator& env, WorldState world, double gamma,
                       const StepObserver& observer) {
    const WorldConfig& cfg = env.config();
    CaseResult r;
    std::vector<double> rewards;
    while (!world.done()) {
        const Action a = policy.act(env, world);
        if (observer) {
            const WorldState before = world;
            const StepResult res = env.step(world, a);
            rewards.push_back(res.reward);
            observer(before, a, res, world);
        } else {
            rewards.push_back(env.step(world, a).reward);
        }
        r.beeps += a.beep ? 1 : 0;
    }
    r.outcome = world.outcome;
    r.steps = world.steps;
    r.nav_time = world.steps * cfg.dt;
    ExactSum total;
    for (double x : rewards) total.add(x);
    r.ret = total.value();
    r.discounted_ret = discounted_return(rewards, gamma, cfg.dt, cfg.v_pref, 0).value;
    return r;
}

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers; rethrows the
// first failure by index.
template <typename Job>
void parallel_for(std::size_t n, int threads, Job job) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Metrics reduce(const std::vector<CaseResult>& results) {
    Metrics m;
    for (const auto& r : results) m.add(r);
    m.finalize();
    return m;
}

}  // namespace

Metrics evaluate(const Policy& policy, const WorldConfig& world, const EvalOptions& opts,
                 std::vector<CaseResult>* cases) {
    if (opts.n_cases < 1) throw InvalidArgument("evaluate: n_cases must be at least 1");
    world.validate();
    const Elevator env(world);
    std::vector<CaseResult> results(static_cast<std::size_t>(opts.n_cases));
    parallel_for(results.size(), opts.threads, [&](std::size_t i) {
        const std::size_t index = opts.first_case + i;
        const std::uint64_t seed = case_seed(opts.seed, index);
        CaseResult r = run_episode(policy, env, env.reset(seed), opts.gamma);
        r.index = index;
        r.seed = seed;
        results[i] = r;
    });
    Metrics m = reduce(results);
    if (cases) *cases = std::move(results);
    return m;
}

Metrics evaluate_scenarios(const Policy& policy, const WorldConfig& world, const std::vector<Scenario>& suite,
                           int threads, double gamma, std::vector<CaseResult>* cases) {
    if (suite.empty()) throw InvalidArgument("evaluate_scenarios: empty suite");
    world.validate();
    const Elevator env(world);
    std::vector<CaseResult> results(suite.size());
    parallel_for(results.size(), threads, [&](std::size_t i) {
        CaseResult r = run_episode(policy, env, env.reset_with(suite[i]), gamma);
        r.index = i;
        results[i] = r;
    });
    Metrics m = reduce(results);
    if (cases) *cases = std::move(results);
    return m;
}

std::vector<Scenario> door_blocked_suite(const WorldConfig& world, int count, std::uint64_t seed) {
    if (count < 0) throw InvalidArgument("door_blocked_suite: negative count");
    const double r = world.agent_radius;
    std::vector<Scenario> suite;
    for (int i = 0; i < count; ++i) {
        Rng rng(case_seed(seed, static_cast<std::uint64_t>(i)));
        const double y = rng.uniform(r + 0.1, r + 0.8);
        if (i % 2 == 0) {
            suite.push_back({{rng.uniform(-0.3, 0.3), y}});
        } else {
            // A pair standing shoulder to shoulder across the opening.
            const double x = r + 0.1 + rng.uniform(0.0, 0.3);
            suite.push_back({{-x, y}, {x, y + rng.uniform(-0.1, 0.1)}});
        }
    }
    return suite;
}

std::vector<Scenario> empty_suite(int count) {
    if (count < 0) throw InvalidArgument("empty_suite: negative count");
    return std::vector<Scenario>(static_cast<std::size_t>(count));
}

std::vector<Scenario> side_suite(const WorldConfig& world, int count, std::uint64_t seed) {
    if (count < 0) throw InvalidArgument("side_suite: negative count");
    const double r = world.agent_radius;
    const double x_max = world.cell_width / 2.0 - r;
    const double x_min = world.robot_radius + r + world.safety_space + 0.2;
    if (x_min > x_max) throw ConfigError("world.cell_width: too narrow for side-standing humans");
    const double min_gap = 2.0 * r + world.safety_space;
    std::vector<Scenario> suite;
    for (int i = 0; i < count; ++i) {
        Rng rng(case_seed(seed, static_cast<std::uint64_t>(i)));
        const int n = 1 + i % 4;
        Scenario s;
        for (int k = 0; k < n; ++k) {
            const double side = k % 2 == 0 ? 1.0 : -1.0;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const Vec2 p{side * rng.uniform(x_min, x_max), rng.uniform(r + 0.2, world.cell_depth - r)};
                const bool ok = std::all_of(s.begin(), s.end(), [&](const Vec2& q) { return (p - q).norm() >= min_gap; });
                if (ok) {
                    s.push_back(p);
                    break;
                }
            }
        }
        suite.push_back(std::move(s));
    }
    return suite;
}

namespace {

std::string fixed(double x, int digits) {
    if (!std::isfinite(x)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    // Avoid printing "-0.00".
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

std::string exact(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}
std::string pad_right(const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

Report compare_report(const std::vector<ReportEntry>& entries) {
    if (entries.empty()) throw InvalidArgument("compare_report: no entries");
    for (const auto& e : entries)
        if (e.metrics.n_cases != entries.front().metrics.n_cases)
            throw InvalidArgument("compare_report: entries evaluated on different numbers of cases (" +
                                  std::to_string(entries.front().metrics.n_cases) + " vs " +
                                  std::to_string(e.metrics.n_cases) + ")");

    std::size_t name_w = 6;
    for (const auto& e : entries) name_w = std::max(name_w, e.method.size());

    std::ostringstream text;
    text << "Efficiency (" << entries.front().metrics.n_cases << " cases)\n";
    text << pad_right("method", name_w) << "  crowd  success  timeout   time\n";
    for (const auto& e : entries) {
        const Metrics& m = e.metrics;
        text << pad_right(e.method, name_w) << "  " << pad_left(std::to_string(e.crowd), 5) << "  "
             << pad_left(fixed(m.success_rate, 2), 7) << "  " << pad_left(fixed(m.timeout_rate, 2), 7) << "  "
             << pad_left(fixed(m.avg_nav_time_success, 2), 5) << "\n";
    }
    text << "\nSafety and reward\n";
    text << pad_right("method", name_w) << "  crowd  collision   reward\n";
    for (const auto& e : entries) {
        const Metrics& m = e.metrics;
        text << pad_right(e.method, name_w) << "  " << pad_left(std::to_string(e.crowd), 5) << "  "
             << pad_left(fixed(m.collision_rate, 2), 9) << "  " << pad_left(fixed(m.avg_return, 4), 7) << "\n";
    }

    std::ostringstream csv;
    csv << "method,crowd,n_cases,success,timeout,time,collision,reward\n";
    for (const auto& e : entries) {
        const Metrics& m = e.metrics;
        csv << e.method << ',' << e.crowd << ',' << m.n_cases << ',' << fixed(m.success_rate, 2) << ','
            << fixed(m.timeout_rate, 2) << ',' << fixed(m.avg_nav_time_success, 2) << ','
            << fixed(m.collision_rate, 2) << ',' << fixed(m.avg_return, 4) << "\n";
    }
    return {text.str(), csv.str()};
}

namespace {
constexpr const char* kMetricsHeader =
    "method,crowd,n_cases,successes,collisions,timeouts,success_rate,collision_rate,timeout_rate,"
    "avg_nav_time_success,avg_return,avg_discounted_return,beep_rate";
}

std::string metrics_csv(const std::string& method, int crowd, const Metrics& m) {
    if (method.find_first_of(",\n\r") != std::string::npos)
        throw InvalidArgument("metrics_csv: method name contains a delimiter");
    std::ostringstream out;
    out << kMetricsHeader << "\n";
    out << method << ',' << crowd << ',' << m.n_cases << ',' << m.successes << ',' << m.collisions << ','
        << m.timeouts << ',' << exact(m.success_rate) << ',' << exact(m.collision_rate) << ','
        << exact(m.timeout_rate) << ',' << exact(m.avg_nav_time_success) << ',' << exact(m.avg_return) << ','
        << exact(m.avg_discounted_return) << ',' << exact(m.beep_rate) << "\n";
    return out.str();
}

void write_metrics_csv(const std::filesystem::path& path, const std::string& method, int crowd, const Metrics& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << metrics_csv(method, crowd, m);
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

MetricsRecord parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header, line;
    if (!std::getline(in, header) || header != kMetricsHeader) throw FormatError("metrics csv: unexpected header");
    if (!std::getline(in, line)) throw FormatError("metrics csv: missing data line");
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 13) throw FormatError("metrics csv: expected 13 fields, got " + std::to_string(fields.size()));

    auto integer = [](const std::string& s) {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw FormatError("metrics csv: bad integer '" + s + "'");
        return v;
    };
    auto real = [](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) throw FormatError("metrics csv: bad number '" + s + "'");
        return v;
    };
    MetricsRecord r;
    try {
        r.method = fields[0];
        r.crowd = integer(fields[1]);
        r.n_cases = integer(fields[2]);
        r.successes = integer(fields[3]);
        r.collisions = integer(fields[4]);
        r.timeouts = integer(fields[5]);
        r.success_rate = real(fields[6]);
        r.collision_rate = real(fields[7]);
        r.timeout_rate = real(fields[8]);
        r.avg_nav_time_success = real(fields[9]);
        r.avg_return = real(fields[10]);
        r.avg_discounted_return = real(fields[11]);
        r.beep_rate = real(fields[12]);
    } catch (const std::logic_error&) {
        throw FormatError("metrics csv: malformed data line");
    }
    return r;
}

MetricsRecord read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_metrics_csv(ss.str());
}

}  // namespace elevnav
