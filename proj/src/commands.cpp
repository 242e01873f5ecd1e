#include "elevnav/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elevnav/render.hpp"
#include "elevnav/trace.hpp"
#include "elevnav/trainer.hpp"

namespace elevnav {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed stream for the initial network weights.
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string to_text(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("output_dir: cannot create " + dir.string() + " (" + ec.message() + ")");
}

ValueNet load_net(const std::optional<fs::path>& weights) {
    if (!weights) throw ConfigError("weights: learned methods need --weights");
    if (!fs::exists(*weights)) throw ConfigError("weights: file not found: " + weights->string());
    return load_weights(*weights, NetDims{});
}

std::string pct(double x) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

}  // namespace

bool method_needs_weights(const std::string& method) { return method == "rl-beep" || method == "rl-nobeep"; }

std::unique_ptr<Policy> make_policy(const std::string& method, const ValueNet* net, double gamma) {
    if (method == "orca") return std::make_unique<OrcaPolicy>();
    if (method_needs_weights(method)) {
        if (!net) throw ConfigError("weights: method '" + method + "' needs trained weights");
        return std::make_unique<ValuePolicy>(*net, method == "rl-beep", gamma, method);
    }
    throw ConfigError("methods: unknown method '" + method + "' (expected orca, rl-beep or rl-nobeep)");
}

std::vector<std::string> parse_method_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    for (std::string m; std::getline(ss, m, ',');) {
        if (m.empty()) throw ConfigError("methods: empty method name");
        if (m != "orca" && !method_needs_weights(m))
            throw ConfigError("methods: unknown method '" + m + "' (expected orca, rl-beep or rl-nobeep)");
        out.push_back(m);
    }
    if (out.empty()) throw ConfigError("methods: no methods given");
    return out;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << bytes;
        if (!out) throw ConfigError("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& progress) {
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    ensure_dir(dir);
    write_file_atomic(dir / "config.json", run_config_json(cfg));

    TrainSummary summary;
    summary.log = dir / kTrainLog;
    std::ofstream log(summary.log, std::ios::binary | std::ios::trunc);
    if (!log) throw ConfigError("cannot write " + summary.log.string());

    DemoStats stats;
    const auto demos = collect_demonstrations(cfg.train, cfg.world, cfg.train.il_demos, &stats);
    summary.demos_attempted = stats.attempted;
    progress << "demonstrations: " << stats.retained << " kept of " << stats.attempted << " episodes\n";

    ValueNet net = ValueNet::random(NetDims{}, case_seed(cfg.seed, kInitStream));
    const auto epochs = imitation_fit(net, demos, cfg.train);
    for (const auto& e : epochs) log << epoch_log_line(e) << "\n";
    log.flush();
    if (!epochs.empty()) {
        summary.final_il_loss = epochs.back().loss;
        progress << "imitation: " << epochs.size() << " epochs, final loss " << epochs.back().loss << "\n";
    }
    summary.imitation_weights = dir / kImitationWeights;
    write_file_atomic(summary.imitation_weights, to_text(serialize_weights(net)));

    int window_success = 0, window_collision = 0, window_beeps = 0;
    RlHooks hooks;
    hooks.on_episode = [&](const EpisodeLog& e) {
        log << episode_log_line(e) << "\n";
        log.flush();
        window_success += e.outcome == Outcome::Success;
        window_collision += e.outcome == Outcome::Collision;
        window_beeps += e.beeps;
        if ((e.episode + 1) % 100 == 0) {
            progress << "episode " << e.episode + 1 << ": epsilon " << pct(e.epsilon) << ", success "
                     << pct(window_success / 100.0) << ", collision " << pct(window_collision / 100.0)
                     << ", beeps/episode " << pct(window_beeps / 100.0) << "\n";
            progress.flush();
            window_success = window_collision = window_beeps = 0;
        }
    };
    hooks.on_checkpoint = [&](int episode, const ValueNet& current) {
        write_file_atomic(dir / ("checkpoint_" + std::to_string(episode) + ".navf"),
                          to_text(serialize_weights(current)));
    };
    const auto episodes = rl_train(net, cfg.train, cfg.world, hooks);
    summary.episodes = static_cast<int>(episodes.size());

    summary.weights = dir / kFinalWeights;
    write_file_atomic(summary.weights, to_text(serialize_weights(net)));
    progress << "weights written to " << summary.weights.string() << "\n";
    return summary;
}

std::vector<ReportEntry> cmd_eval(const RunConfig& cfg, const EvalRequest& req, std::ostream& progress) {
    cfg.validate();
    if (req.methods.empty()) throw ConfigError("methods: no methods given");
    std::optional<ValueNet> net;
    for (const auto& m : req.methods)
        if (method_needs_weights(m) && !net) net = load_net(req.weights);

    const fs::path dir = cfg.output_dir;
    ensure_dir(dir);
    std::vector<ReportEntry> entries;
    const double gamma = cfg.train.gamma;

    auto record = [&](const std::string& method, int crowd, const std::string& tag, const Metrics& m) {
        write_file_atomic(dir / ("metrics_" + method + "_" + tag + ".csv"), metrics_csv(method, crowd, m));
        progress << method << " [" << tag << "]: success " << pct(m.success_rate) << ", collision "
                 << pct(m.collision_rate) << ", timeout " << pct(m.timeout_rate) << ", beeps/episode "
                 << pct(m.beep_rate) << "\n";
        entries.push_back({method, crowd, m});
    };

    if (req.suite == "random") {
        for (int crowd : cfg.eval.crowd_sizes) {
            WorldConfig world = cfg.world;
            world.n_humans = crowd;
            for (const auto& method : req.methods) {
                const auto policy = make_policy(method, net ? &*net : nullptr, gamma);
                EvalOptions opts;
                opts.n_cases = cfg.eval.n_cases;
                opts.seed = cfg.seed;
                opts.threads = cfg.eval.threads;
                opts.gamma = gamma;
                record(method, crowd, std::to_string(crowd), evaluate(*policy, world, opts));
            }
        }
    } else {
        std::vector<Scenario> suite;
        if (req.suite == "door-blocked")
            suite = door_blocked_suite(cfg.world, cfg.eval.n_cases, cfg.seed);
        else if (req.suite == "empty")
            suite = empty_suite(cfg.eval.n_cases);
        else if (req.suite == "side")
            suite = side_suite(cfg.world, cfg.eval.n_cases, cfg.seed);
        else
            throw ConfigError("suite: unknown suite '" + req.suite + "' (expected random, door-blocked, empty or side)");
        for (const auto& method : req.methods) {
            const auto policy = make_policy(method, net ? &*net : nullptr, gamma);
            record(method, 0, req.suite,
                   evaluate_scenarios(*policy, cfg.world, suite, cfg.eval.threads, gamma));
        }
    }

    const Report report = compare_report(entries);
    const std::string stem = req.suite == "random" ? "report" : "report_" + req.suite;
    write_file_atomic(dir / (stem + ".txt"), report.text);
    write_file_atomic(dir / (stem + ".csv"), report.csv);
    progress << "\n" << report.text;
    return entries;
}

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error&) {
        throw ConfigError("scenario: not valid JSON");
    }
    if (!doc.is_object()) throw ConfigError("scenario: expected an object");
    for (const auto& [key, value] : doc.items())
        if (key != "humans") throw ConfigError("scenario." + key + ": unknown key");
    auto it = doc.find("humans");
    if (it == doc.end() || !it->is_array()) throw ConfigError("scenario.humans: expected a list of [x, y] pairs");
    Scenario s;
    for (const auto& p : *it) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw ConfigError("scenario.humans: expected a list of [x, y] pairs");
        s.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return s;
}

Scenario builtin_scenario(const WorldConfig& world, const std::string& spec, std::uint64_t seed) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    int index = 0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            index = std::stoi(spec.substr(colon + 1), &used);
            if (used != spec.size() - colon - 1 || index < 0) throw std::invalid_argument("index");
        } catch (const std::logic_error&) {
            throw ConfigError("scenario: bad index in '" + spec + "'");
        }
    }
    if (name == "empty") return {};
    if (name == "door-blocked") return door_blocked_suite(world, index + 1, seed).back();
    if (name == "side") return side_suite(world, index + 1, seed).back();
    throw ConfigError("scenario: '" + spec + "' is neither a file nor a built-in scenario");
}

std::vector<RolloutResult> cmd_rollout(const RunConfig& cfg, const RolloutRequest& req, std::ostream& progress) {
    cfg.validate();
    if (req.count < 1) throw ConfigError("cases: must be at least 1");
    std::optional<ValueNet> net;
    if (method_needs_weights(req.method)) net = load_net(req.weights);
    const auto policy = make_policy(req.method, net ? &*net : nullptr, cfg.train.gamma);

    std::optional<Scenario> scenario;
    if (!req.scenario.empty()) {
        if (fs::exists(req.scenario))
            scenario = parse_scenario(read_file(req.scenario));
        else
            scenario = builtin_scenario(cfg.world, req.scenario, cfg.seed);
    }

    const fs::path dir = cfg.output_dir;
    ensure_dir(dir);
    const Elevator env(cfg.world);
    const std::string hash = config_hash(cfg);
    std::vector<RolloutResult> results;
    for (int k = 0; k < req.count; ++k) {
        const std::size_t index = req.first_case + static_cast<std::size_t>(k);
        const std::uint64_t seed = scenario ? cfg.seed : case_seed(cfg.seed, index);
        const WorldState start = scenario ? env.reset_with(*scenario) : env.reset(seed);

        EpisodeTrace trace;
        trace.header = {hash, seed, req.method, TraceGeometry::of(cfg.world)};
        const CaseResult r = run_episode(
            *policy, env, start, cfg.train.gamma,
            [&](const WorldState& before, const Action& a, const StepResult& res, const WorldState& after) {
                TraceStep s;
                s.step = before.steps;
                s.t = before.t;
                s.robot = robot_snapshot(before);
                s.humans = human_snapshots(before);
                s.action = a.heading_index;
                s.beep = a.beep;
                s.reward = res.reward;
                s.d_min = res.min_dist;
                trace.steps.push_back(std::move(s));
                trace.footer.robot = robot_snapshot(after);
                trace.footer.humans = human_snapshots(after);
            });
        trace.footer.outcome = r.outcome;
        trace.footer.ret = r.ret;
        trace.footer.steps = r.steps;


        const std::string stem = "trace_" + req.method + "_" + (scenario ? std::string("scenario") : std::to_string(index));
        RolloutResult out;
        out.trace = dir / (stem + ".jsonl");
        write_file_atomic(out.trace, serialize_trace(trace));
        if (req.render) {
            out.svg = dir / (stem + ".svg");
            write_file_atomic(*out.svg, render_svg(trace));
        }
        out.outcome = r.outcome;
        out.steps = r.steps;
        out.beeps = r.beeps;
        progress << stem << ": " << to_string(r.outcome) << " after " << r.steps << " steps, " << r.beeps
                 << " beeps\n";
        results.push_back(out);
        if (scenario) break;
    }
    return results;
}

DemoStats cmd_demo_collect(const RunConfig& cfg, std::ostream& progress) {
    cfg.validate();
    const fs::path dir = cfg.output_dir;
    ensure_dir(dir);
    DemoStats stats;
    const auto demos = collect_demonstrations(cfg.train, cfg.world, cfg.train.il_demos, &stats);
    std::string out;
    for (const auto& d : demos) {
        json line = {{"world_seed", d.world_seed},
                     {"outcome", to_string(d.outcome)},
                     {"steps", d.states.size()},
                     {"rewards", d.rewards},
                     {"targets", d.targets}};
        out += line.dump() + "\n";
    }
    write_file_atomic(dir / "demos.jsonl", out);
    progress << "demonstrations: " << stats.retained << " kept of " << stats.attempted << " episodes\n";
    return stats;
}

}  // namespace elevnav
