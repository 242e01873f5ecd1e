#include "elevnav/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace elevnav {

using nlohmann::json;

namespace {

class Reader {
public:
    Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) throw ConfigError(where("") + "expected an object");
    }

    void number(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(where(key) + "expected a number");
            out = v->get<double>();
        }
    }
    void integer(const char* key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key) + "expected an integer");
            const auto x = v->get<long long>();
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
                throw ConfigError(where(key) + "out of range");
            out = static_cast<int>(x);
        }
    }
    void size(const char* key, std::size_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(where(key) + "expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }
    void seed(const char* key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(where(key) + "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key) + "expected true or false");
            out = v->get<bool>();
        }
    }
    void string(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(where(key) + "expected a string");
            out = v->get<std::string>();
        }
    }
    void int_list(const char* key, std::vector<int>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(where(key) + "expected a list of integers");
            std::vector<int> items;
            for (const auto& item : *v) {
                if (!item.is_number_integer()) throw ConfigError(where(key) + "expected a list of integers");
                items.push_back(item.get<int>());
            }
            out = std::move(items);
        }
    }
    void object(const char* key, const std::function<void(Reader&)>& body) {
        if (const json* v = find(key)) {
            Reader sub(*v, prefix_ + key + ".");
            body(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items())
            if (!seen_.count(key)) throw ConfigError(where(key) + "unknown key");
    }

private:
    const json* find(const char* key) {
        seen_[key] = true;
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }
    std::string where(const std::string& key) const {
        std::string path = prefix_ + key;
        if (!path.empty() && path.back() == '.') path.pop_back();
        return (path.empty() ? std::string("config") : path) + ": ";
    }

    const json& obj_;
    std::string prefix_;
    std::map<std::string, bool> seen_;
};

void read_world(Reader& r, WorldConfig& w) {
    r.number("cell_width", w.cell_width);
    r.number("cell_depth", w.cell_depth);
    r.number("door_width", w.door_width);
    r.number("agent_radius", w.agent_radius);
    r.number("robot_radius", w.robot_radius);
    r.number("robot_start_dist", w.robot_start_dist);
    r.number("v_pref", w.v_pref);
    r.number("human_max_speed", w.human_max_speed);
    r.number("dt", w.dt);
    r.number("time_limit", w.time_limit);
    r.integer("n_humans", w.n_humans);
    r.number("safety_space", w.safety_space);
    r.number("neighbor_dist", w.neighbor_dist);
    r.number("time_horizon", w.time_horizon);
    r.number("time_horizon_obst", w.time_horizon_obst);
}

void read_train(Reader& r, TrainConfig& t) {
    r.number("il_lr", t.il_lr);
    r.integer("il_epochs", t.il_epochs);
    r.integer("il_demos", t.il_demos);
    r.number("rl_lr", t.rl_lr);
    r.number("gamma", t.gamma);
    r.integer("batch", t.batch);
    r.integer("episodes", t.episodes);
    r.number("eps_start", t.eps_start);
    r.number("eps_end", t.eps_end);
    r.integer("eps_decay_episodes", t.eps_decay_episodes);
    r.integer("target_sync_interval", t.target_sync_interval);
    r.number("momentum", t.momentum);
    r.number("grad_clip", t.grad_clip);
    r.size("replay_capacity", t.replay_capacity);
    r.boolean("use_replay", t.use_replay);
    r.boolean("use_target_net", t.use_target_net);
    r.integer("max_batches_per_episode", t.max_batches_per_episode);
    r.boolean("demos_success_only", t.demos_success_only);
    r.integer("min_humans", t.min_humans);
    r.boolean("beep_enabled", t.beep_enabled);
    r.integer("checkpoint_interval", t.checkpoint_interval);
}

}  // namespace

void RunConfig::finalize() {
    world.seed = seed;
    train.seed = seed;
    validate();
}

void RunConfig::validate() const {
    world.validate();
    train.validate();
    if (train.min_humans > world.n_humans) throw ConfigError("train.min_humans: exceeds world.n_humans");
    if (eval.n_cases < 1) throw ConfigError("eval.n_cases: must be at least 1");
    if (eval.crowd_sizes.empty()) throw ConfigError("eval.crowd_sizes: must not be empty");
    for (int n : eval.crowd_sizes) {
        if (n < 0) throw ConfigError("eval.crowd_sizes: negative crowd size");
        WorldConfig w = world;
        w.n_humans = n;
        try {
            w.validate();
        } catch (const ConfigError&) {
            throw ConfigError("eval.crowd_sizes: " + std::to_string(n) + " humans cannot be placed in the elevator");
        }
    }
    if (eval.threads < 1) throw ConfigError("eval.threads: must be at least 1");
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
    }
    RunConfig cfg;
    Reader root(doc, "");
    root.seed("seed", cfg.seed);
    root.string("output_dir", cfg.output_dir);
    root.object("world", [&](Reader& r) { read_world(r, cfg.world); });
    root.object("train", [&](Reader& r) { read_train(r, cfg.train); });
    root.object("eval", [&](Reader& r) {
        r.integer("n_cases", cfg.eval.n_cases);
        r.int_list("crowd_sizes", cfg.eval.crowd_sizes);
        r.integer("threads", cfg.eval.threads);
    });
    root.finish();
    cfg.finalize();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg) {
    const WorldConfig& w = cfg.world;
    const TrainConfig& t = cfg.train;
    json doc = {
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"world",
         {{"cell_width", w.cell_width},
          {"cell_depth", w.cell_depth},
          {"door_width", w.door_width},
          {"agent_radius", w.agent_radius},
          {"robot_radius", w.robot_radius},
          {"robot_start_dist", w.robot_start_dist},
          {"v_pref", w.v_pref},
          {"human_max_speed", w.human_max_speed},
          {"dt", w.dt},
          {"time_limit", w.time_limit},
          {"n_humans", w.n_humans},
          {"safety_space", w.safety_space},
          {"neighbor_dist", w.neighbor_dist},
          {"time_horizon", w.time_horizon},
          {"time_horizon_obst", w.time_horizon_obst}}},
        {"train",
         {{"il_lr", t.il_lr},
          {"il_epochs", t.il_epochs},
          {"il_demos", t.il_demos},
          {"rl_lr", t.rl_lr},
          {"gamma", t.gamma},
          {"batch", t.batch},
          {"episodes", t.episodes},
          {"eps_start", t.eps_start},
          {"eps_end", t.eps_end},
          {"eps_decay_episodes", t.eps_decay_episodes},
          {"target_sync_interval", t.target_sync_interval},
          {"momentum", t.momentum},
          {"grad_clip", t.grad_clip},
          {"replay_capacity", t.replay_capacity},
          {"use_replay", t.use_replay},
          {"use_target_net", t.use_target_net},
          {"max_batches_per_episode", t.max_batches_per_episode},
          {"demos_success_only", t.demos_success_only},
          {"min_humans", t.min_humans},
          {"beep_enabled", t.beep_enabled},
          {"checkpoint_interval", t.checkpoint_interval}}},
        {"eval", {{"n_cases", cfg.eval.n_cases}, {"crowd_sizes", cfg.eval.crowd_sizes}, {"threads", cfg.eval.threads}}},
    };
    return doc.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& cfg) {
    // Where results go and how many workers compute them do not change them.
    RunConfig c = cfg;
    c.output_dir.clear();
    c.eval.threads = 1;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(run_config_json(c))));
    return buf;
}

}  // namespace elevnav
