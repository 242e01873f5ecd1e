#include "elevnav/trace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace elevnav {

using nlohmann::json;

TraceGeometry TraceGeometry::of(const WorldConfig& w) {
    return {w.cell_width, w.cell_depth, w.door_width, w.robot_radius, w.agent_radius, w.dt, w.time_limit};
}

AgentSnapshot robot_snapshot(const WorldState& w) { return {w.robot_pos, w.robot_vel}; }

std::vector<AgentSnapshot> human_snapshots(const WorldState& w) {
    std::vector<AgentSnapshot> out;
    out.reserve(w.humans.size());
    for (const auto& h : w.humans) out.push_back({h.pos, h.vel});
    return out;
}

namespace {

json vec(const Vec2& v) { return json::array({v.x, v.y}); }

json agent(const AgentSnapshot& a) { return {{"pos", vec(a.pos)}, {"vel", vec(a.vel)}}; }

json agents(const std::vector<AgentSnapshot>& xs) {
    json arr = json::array();
    for (const auto& a : xs) arr.push_back(agent(a));
    return arr;
}

// Non-finite values have no JSON spelling; +inf is written as null.
json number_or_null(double x) {
    if (std::isinf(x) && x > 0) return nullptr;
    if (!std::isfinite(x)) throw InvalidArgument("trace: cannot serialise a NaN or -inf value");
    return x;
}

[[noreturn]] void bad(int line, const std::string& why) {
    throw FormatError("trace line " + std::to_string(line) + ": " + why);
}

const json& field(const json& obj, const char* key, int line) {
    if (!obj.is_object()) bad(line, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) bad(line, std::string("missing '") + key + "'");
    return *it;
}

double num(const json& obj, const char* key, int line) {
    const json& v = field(obj, key, line);
    if (!v.is_number()) bad(line, std::string("'") + key + "' is not a number");
    return v.get<double>();
}

int integer(const json& obj, const char* key, int line) {
    const json& v = field(obj, key, line);
    if (!v.is_number_integer()) bad(line, std::string("'") + key + "' is not an integer");
    return v.get<int>();
}

std::string str(const json& obj, const char* key, int line) {
    const json& v = field(obj, key, line);
    if (!v.is_string()) bad(line, std::string("'") + key + "' is not a string");
    return v.get<std::string>();
}

Vec2 read_vec(const json& v, int line) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) bad(line, "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

AgentSnapshot read_agent(const json& v, int line) {
    return {read_vec(field(v, "pos", line), line), read_vec(field(v, "vel", line), line)};
}

std::vector<AgentSnapshot> read_agents(const json& v, int line) {
    if (!v.is_array()) bad(line, "expected a list of agents");
    std::vector<AgentSnapshot> out;
    for (const auto& a : v) out.push_back(read_agent(a, line));
    return out;
}

}  // namespace

std::string serialize_trace(const EpisodeTrace& trace) {
    std::string out;
    const TraceHeader& h = trace.header;
    const json header = {
        {"type", "header"},
        {"config_hash", h.config_hash},
        {"seed", h.seed},
        {"method", h.method},
        {"world",
         {{"cell_width", h.world.cell_width},
          {"cell_depth", h.world.cell_depth},
          {"door_width", h.world.door_width},
          {"robot_radius", h.world.robot_radius},
          {"agent_radius", h.world.agent_radius},
          {"dt", h.world.dt},
          {"time_limit", h.world.time_limit}}},
    };
    out += header.dump() + "\n";
    for (const auto& s : trace.steps) {
        const json line = {
            {"type", "step"},       {"step", s.step},     {"t", s.t},
            {"robot", agent(s.robot)}, {"humans", agents(s.humans)}, {"action", s.action},
            {"beep", s.beep},       {"reward", s.reward}, {"d_min", number_or_null(s.d_min)},
        };
        out += line.dump() + "\n";
    }
    const TraceFooter& f = trace.footer;
    const json footer = {
        {"type", "footer"},        {"outcome", to_string(f.outcome)}, {"return", f.ret},
        {"steps", f.steps},        {"robot", agent(f.robot)},          {"humans", agents(f.humans)},
    };
    out += footer.dump() + "\n";
    return out;
}

EpisodeTrace parse_trace(const std::string& text) {
    std::vector<json> lines;
    std::istringstream in(text);
    int n = 0;
    for (std::string line; std::getline(in, line);) {
        ++n;
        if (line.empty()) bad(n, "empty line");
        try {
            lines.push_back(json::parse(line));
        } catch (const json::parse_error&) {
            bad(n, "not valid JSON");
        }
    }
    if (lines.size() < 2) throw FormatError("trace: needs at least a header and a footer");

    EpisodeTrace trace;
    const json& h = lines.front();
    if (str(h, "type", 1) != "header") bad(1, "first line is not a header");
    trace.header.config_hash = str(h, "config_hash", 1);
    const json& seed = field(h, "seed", 1);
    if (!seed.is_number_unsigned()) bad(1, "'seed' is not a non-negative integer");
    trace.header.seed = seed.get<std::uint64_t>();
    trace.header.method = str(h, "method", 1);
    const json& w = field(h, "world", 1);
    trace.header.world = {num(w, "cell_width", 1),   num(w, "cell_depth", 1), num(w, "door_width", 1),
                          num(w, "robot_radius", 1), num(w, "agent_radius", 1), num(w, "dt", 1),
                          num(w, "time_limit", 1)};

    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
        const int ln = static_cast<int>(i) + 1;
        const json& s = lines[i];
        if (str(s, "type", ln) != "step") bad(ln, "expected a step record");
        TraceStep step;
        step.step = integer(s, "step", ln);
        step.t = num(s, "t", ln);
        step.robot = read_agent(field(s, "robot", ln), ln);
        step.humans = read_agents(field(s, "humans", ln), ln);
        step.action = integer(s, "action", ln);
        if (step.action < 0 || step.action > kStayHeading) bad(ln, "action index out of range");
        const json& beep = field(s, "beep", ln);
        if (!beep.is_boolean()) bad(ln, "'beep' is not a boolean");
        step.beep = beep.get<bool>();
        step.reward = num(s, "reward", ln);
        const json& d = field(s, "d_min", ln);
        if (d.is_null())
            step.d_min = std::numeric_limits<double>::infinity();
        else if (d.is_number())
            step.d_min = d.get<double>();
        else
            bad(ln, "'d_min' is neither a number nor null");
        trace.steps.push_back(std::move(step));
    }

    const int ln = static_cast<int>(lines.size());
    const json& f = lines.back();
    if (str(f, "type", ln) != "footer") bad(ln, "last line is not a footer");
    try {
        trace.footer.outcome = outcome_from_string(str(f, "outcome", ln));
    } catch (const FormatError& e) {
        bad(ln, e.what());
    }
    trace.footer.ret = num(f, "return", ln);
    trace.footer.steps = integer(f, "steps", ln);
    trace.footer.robot = read_agent(field(f, "robot", ln), ln);
    trace.footer.humans = read_agents(field(f, "humans", ln), ln);
    if (trace.footer.steps != static_cast<int>(trace.steps.size()))
        throw FormatError("trace: footer reports " + std::to_string(trace.footer.steps) + " steps but " +
                          std::to_string(trace.steps.size()) + " are recorded");
    return trace;
}

void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << serialize_trace(trace);
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

EpisodeTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

std::string epoch_log_line(const EpochLog& e) {
    return json{{"phase", "imitation"}, {"epoch", e.epoch}, {"loss", e.loss}}.dump();
}

std::string episode_log_line(const EpisodeLog& e) {
    return json{{"phase", "reinforcement"}, {"episode", e.episode}, {"outcome", to_string(e.outcome)},
                {"return", e.ret},          {"steps", e.steps},     {"epsilon", e.epsilon},
                {"loss", e.loss},           {"beeps", e.beeps}}
        .dump();
}

}  // namespace elevnav
