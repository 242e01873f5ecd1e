#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "elevnav/commands.hpp"
#include "elevnav/config.hpp"
#include "elevnav/render.hpp"
#include "elevnav/trace.hpp"

using namespace elevnav;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("elevnav_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ELEVNAV_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

RunConfig quick_config(const fs::path& out) {
    RunConfig cfg;
    cfg.output_dir = out.string();
    cfg.eval.n_cases = 12;
    cfg.eval.crowd_sizes = {4, 6};
    cfg.finalize();
    return cfg;
}

}  // namespace

TEST_CASE("run config parsing") {
    const RunConfig defaults = parse_run_config("{}");
    CHECK(defaults.world.cell_width == 8.0);
    CHECK(defaults.train.episodes == 10000);
    CHECK(defaults.eval.n_cases == 1000);
    CHECK(defaults.eval.crowd_sizes == std::vector<int>{6, 7, 8});

    RunConfig c = parse_run_config(R"({"seed": 7, "world": {"n_humans": 4}, "train": {"episodes": 12}})");
    CHECK(c.seed == 7);
    CHECK(c.world.n_humans == 4);
    CHECK(c.train.episodes == 12);
    c.finalize();
    CHECK(c.world.seed == 7);
    CHECK(c.train.seed == 7);

    auto message = [](const std::string& text) {
        try {
            parse_run_config(text).finalize();
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"world": {"door_widht": 4}})").find("world.door_widht") != std::string::npos);
    CHECK(message(R"({"world": {"door_width": "wide"}})").find("world.door_width") != std::string::npos);
    CHECK(message(R"({"world": {"door_width": 1.5}})").find("world.door_width") != std::string::npos);
    CHECK(message(R"({"train": {"batch": 2.5}})").find("train.batch") != std::string::npos);
    CHECK(message(R"({"eval": {"crowd_sizes": [6, 40]}})").find("eval.crowd_sizes") != std::string::npos);
    CHECK(message(R"({"colour": 1})").find("colour") != std::string::npos);
    CHECK(message("{not json").find("JSON") != std::string::npos);
    CHECK(message(R"({"world": {"n_humans": 3}, "train": {"min_humans": 4}})").find("train.min_humans") !=
          std::string::npos);
    CHECK(parse_run_config(R"({"train": {"min_humans": 2}})").train.min_humans == 2);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("canonical json and hashing") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);

    RunConfig a;
    a.seed = 3;
    a.world.n_humans = 5;
    a.finalize();
    const RunConfig back = parse_run_config(run_config_json(a));
    CHECK(run_config_json(back) == run_config_json(a));

    const std::string h = config_hash(a);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    RunConfig b = a;
    b.output_dir = "elsewhere";
    b.eval.threads = 8;
    CHECK(config_hash(b) == h);
    b.seed = 4;
    CHECK(config_hash(b) != h);
    RunConfig c = a;
    c.world.door_width = 3.5;
    CHECK(config_hash(c) != h);
}

TEST_CASE("method names and scenarios") {
    CHECK(parse_method_list("orca,rl-beep") == std::vector<std::string>{"orca", "rl-beep"});
    CHECK_THROWS_AS(parse_method_list("orca,sarl"), ConfigError);
    CHECK_THROWS_AS(parse_method_list(""), ConfigError);
    CHECK(method_needs_weights("rl-nobeep"));
    CHECK_FALSE(method_needs_weights("orca"));
    CHECK_THROWS_AS(make_policy("rl-beep", nullptr, 0.9), ConfigError);
    CHECK(make_policy("orca", nullptr, 0.9)->name() == "orca");

    const Scenario s = parse_scenario(R"({"humans": [[0, 1.5], [2.5, 4]]})");
    REQUIRE(s.size() == 2);
    CHECK(s[1] == Vec2{2.5, 4});
    CHECK_THROWS_AS(parse_scenario(R"({"humans": [[0]]})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"people": []})"), ConfigError);

    const WorldConfig w;
    CHECK(builtin_scenario(w, "empty", 0).empty());
    CHECK_FALSE(builtin_scenario(w, "door-blocked:3", 0).empty());
    CHECK(builtin_scenario(w, "door-blocked:3", 0) == builtin_scenario(w, "door-blocked:3", 0));
    CHECK_THROWS_AS(builtin_scenario(w, "door-blocked:x", 0), ConfigError);
    CHECK_THROWS_AS(builtin_scenario(w, "crowded", 0), ConfigError);
}

TEST_CASE("empty-elevator rollout, trace round trip and rendering") {
    const fs::path dir = scratch_dir("rollout");
    const RunConfig cfg = quick_config(dir);
    RolloutRequest req;
    req.scenario = "empty";
    req.render = true;
    std::ostringstream log;
    const auto results = cmd_rollout(cfg, req, log);
    REQUIRE(results.size() == 1);
    CHECK(results[0].outcome == Outcome::Success);
    CHECK(results[0].steps == 16);
    CHECK(results[0].beeps == 0);
    REQUIRE(results[0].svg);

    const EpisodeTrace t = read_trace(results[0].trace);
    CHECK(t.header.method == "orca");
    CHECK(t.header.config_hash == config_hash(cfg));
    CHECK(t.steps.size() == 16);
    CHECK(t.footer.steps == 16);
    CHECK(t.footer.outcome == Outcome::Success);
    CHECK(t.footer.robot.pos.y == doctest::Approx(1.0));
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
        CHECK(t.steps[k].step == static_cast<int>(k));
        CHECK(t.steps[k].action == 4);
        CHECK(t.steps[k].robot.pos.x == 0.0);
        CHECK(std::isinf(t.steps[k].d_min));
    }
    CHECK(t.footer.ret == doctest::Approx(10.6).epsilon(1e-12));

    const std::string text = serialize_trace(t);
    CHECK(parse_trace(text) == t);
    CHECK(serialize_trace(parse_trace(text)) == text);
    CHECK(slurp(results[0].trace) == text);

    const std::string svg = slurp(*results[0].svg);
    CHECK(svg == render_svg(t));
    CHECK(render_svg(t) == render_svg(parse_trace(text)));
    CHECK(count(svg, "<polyline") == 1);
    CHECK(count(svg, "stroke=\"red\"") == 0);
    CHECK(svg.rfind("</svg>") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("beep markers and crowd traces") {
    EpisodeTrace t;
    t.header = {"0123456789abcdef", 5, "rl-beep", TraceGeometry::of(WorldConfig{})};
    for (int k = 0; k < 3; ++k) {
        TraceStep s;
        s.step = k;
        s.t = 0.25 * k;
        s.robot = {{0, -3 + 0.25 * k}, {0, 1}};
        s.humans = {{{0.1, 1.5}, {0, 0}}, {{-2, 3}, {0.5, -0.25}}};
        s.action = 4;
        s.beep = k != 1;
        s.reward = k == 0 ? -0.11 : -0.01;
        s.d_min = 1.0 / 3.0;
        t.steps.push_back(s);
    }
    t.footer = {Outcome::Timeout, -2.13, 3, {{0, -2.25}, {0, 1}}, {{{0.1, 1.5}, {0, 0}}, {{-2, 3}, {0, 0}}}};
    const std::string text = serialize_trace(t);
    CHECK(parse_trace(text) == t);
    CHECK(count(render_svg(t), "stroke=\"red\"") == 2);

    // Corruption is reported, not absorbed.
    std::string short_text = text;
    const auto cut = short_text.find('\n', short_text.find('\n') + 1);
    short_text.erase(short_text.find('\n') + 1, cut - short_text.find('\n'));
    CHECK_THROWS_AS(parse_trace(short_text), FormatError);
    CHECK_THROWS_AS(parse_trace(text.substr(0, text.size() / 2)), FormatError);
    CHECK_THROWS_AS(parse_trace(""), FormatError);
    std::string bad_outcome = text;
    bad_outcome.replace(bad_outcome.find("\"timeout\""), 9, "\"gave_up\"");
    CHECK_THROWS_AS(parse_trace(bad_outcome), FormatError);
}

TEST_CASE("evaluation command writes metrics and reports") {
    const fs::path dir = scratch_dir("eval");
    const RunConfig cfg = quick_config(dir);
    std::ostringstream log;
    EvalRequest req;
    const auto entries = cmd_eval(cfg, req, log);
    REQUIRE(entries.size() == 2);
    for (int crowd : {4, 6}) {
        const fs::path p = dir / ("metrics_orca_" + std::to_string(crowd) + ".csv");
        REQUIRE(fs::exists(p));
        const MetricsRecord r = read_metrics_csv(p);
        CHECK(r.n_cases == 12);
        CHECK(r.crowd == crowd);
        CHECK(r.success_rate + r.collision_rate + r.timeout_rate == 1.0);
    }
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(fs::exists(dir / "report.csv"));
    const std::string first = slurp(dir / "metrics_orca_6.csv");
    cmd_eval(cfg, req, log);
    CHECK(slurp(dir / "metrics_orca_6.csv") == first);

    req.suite = "door-blocked";
    cmd_eval(cfg, req, log);
    CHECK(fs::exists(dir / "metrics_orca_door-blocked.csv"));
    CHECK(fs::exists(dir / "report_door-blocked.txt"));

    req.methods = {"rl-beep"};
    CHECK_THROWS_AS(cmd_eval(cfg, req, log), ConfigError);
    req.weights = dir / "missing.navf";
    CHECK_THROWS_AS(cmd_eval(cfg, req, log), ConfigError);
    req.suite = "sideways";
    req.methods = {"orca"};
    CHECK_THROWS_AS(cmd_eval(cfg, req, log), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch_dir("exit");
    const std::string out = " --out " + dir.string();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("fly") == 2);

    spit(dir / "typo.json", R"({"world": {"door_widht": 4}})");
    CHECK(run_cli("--config " + (dir / "typo.json").string() + out + " rollout --scenario empty") == 2);
    spit(dir / "narrow.json", R"({"world": {"door_width": 1.0}})");
    CHECK(run_cli("--config " + (dir / "narrow.json").string() + out + " rollout --scenario empty") == 2);
    CHECK(run_cli(out + " eval --methods rl-beep --cases 2 --crowd 4") == 2);
    CHECK(run_cli(out + " eval --methods sarl") == 2);
    CHECK(run_cli(out + " eval --crowd 4,x") == 2);
    spit(dir / "garbage.navf", "not weights");
    CHECK(run_cli(out + " eval --methods rl-beep --cases 2 --crowd 4 --weights " + (dir / "garbage.navf").string()) == 2);

    CHECK(run_cli(out + " --seed 3 rollout --scenario empty --render") == 0);
    std::size_t traces = 0, svgs = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        traces += e.path().extension() == ".jsonl";
        svgs += e.path().extension() == ".svg";
    }
    CHECK(traces == 1);
    CHECK(svgs == 1);

    // A learning rate this large blows up the imitation fit.
    spit(dir / "diverge.json",
         R"({"world": {"n_humans": 0}, "train": {"il_demos": 4, "il_epochs": 20, "il_lr": 1000.0, "episodes": 0}})");
    CHECK(run_cli("--config " + (dir / "diverge.json").string() + out + " train") == 3);
    fs::remove_all(dir);
}

TEST_CASE("training command: no-op reinforcement stage and repeatability") {
    const fs::path a = scratch_dir("train_a");
    const fs::path b = scratch_dir("train_b");
    const std::string config =
        R"({"world": {"n_humans": 2}, "train": {"il_demos": 4, "il_epochs": 2, "batch": 16, "episodes": 0}})";
    spit(a / "run.json", config);
    CHECK(run_cli("--config " + (a / "run.json").string() + " --out " + a.string() + " --seed 7 train") == 0);
    CHECK(slurp(a / kFinalWeights) == slurp(a / kImitationWeights));

    CHECK(run_cli("--config " + (a / "run.json").string() + " --out " + a.string() +
                  " --seed 7 train --episodes 3") == 0);
    CHECK(run_cli("--config " + (a / "run.json").string() + " --out " + b.string() +
                  " --seed 7 train --episodes 3") == 0);
    CHECK(slurp(a / kFinalWeights) == slurp(b / kFinalWeights));
    CHECK(slurp(a / kTrainLog) == slurp(b / kTrainLog));
    CHECK(slurp(a / kFinalWeights) != slurp(a / kImitationWeights));
    CHECK(count(slurp(a / kTrainLog), "\"reinforcement\"") == 3);
    CHECK(count(slurp(a / kTrainLog), "\"imitation\"") == 2);

    // The trained weights drive the learned methods.
    CHECK(run_cli("--out " + a.string() + " eval --methods rl-beep,rl-nobeep --cases 3 --crowd 2 --weights " +
                  (a / kFinalWeights).string()) == 0);
    CHECK(fs::exists(a / "metrics_rl-beep_2.csv"));
    CHECK(fs::exists(a / "metrics_rl-nobeep_2.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}
