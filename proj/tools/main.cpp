#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "elevnav/commands.hpp"
#include "elevnav/config.hpp"

using namespace elevnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTrainingFault = 3;

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;
};

RunConfig build_config(const GlobalFlags& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.output_dir = g.out;
    if (g.threads) cfg.eval.threads = *g.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robot elevator-entry navigation: training, evaluation and rollouts"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "run seed (overrides the config)");
    app.add_option("--out", g.out, "output directory (overrides the config)");
    app.add_option("--threads", g.threads, "evaluation worker threads")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "imitation learning then reinforcement learning");
    std::optional<int> episodes;
    std::optional<int> train_crowd;
    train->add_option("--episodes", episodes, "reinforcement learning episodes")->check(CLI::NonNegativeNumber);
    train->add_option("--crowd", train_crowd, "humans per training episode")->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("eval", "evaluate methods over random cases or a scenario suite");
    std::string methods = "orca";
    std::string eval_crowd;
    std::optional<int> eval_cases;
    std::string eval_weights;
    std::string suite = "random";
    eval->add_option("--methods", methods, "comma-separated subset of orca,rl-beep,rl-nobeep");
    eval->add_option("--crowd", eval_crowd, "comma-separated crowd sizes");
    eval->add_option("--cases", eval_cases, "cases per method and crowd size")->check(CLI::PositiveNumber);
    eval->add_option("--weights", eval_weights, "trained weights for learned methods");
    eval->add_option("--suite", suite, "random, door-blocked, empty or side");

    auto* rollout = app.add_subcommand("rollout", "play episodes and write traces");
    std::string method = "orca";
    std::string rollout_weights;
    std::string scenario;
    std::size_t first_case = 0;
    int count = 1;
    bool render = false;
    std::optional<int> rollout_crowd;
    rollout->add_option("--method", method, "orca, rl-beep or rl-nobeep");
    rollout->add_option("--weights", rollout_weights, "trained weights for learned methods");
    rollout->add_option("--scenario", scenario, "scenario JSON file, or empty, door-blocked:K, side:K");
    rollout->add_option("--case", first_case, "first random case index");
    rollout->add_option("--cases", count, "number of consecutive cases")->check(CLI::PositiveNumber);
    rollout->add_option("--crowd", rollout_crowd, "humans per random case")->check(CLI::NonNegativeNumber);
    rollout->add_flag("--render", render, "also write an SVG per episode");

    auto* demo = app.add_subcommand("demo-collect", "collect ORCA demonstrations");
    std::optional<int> demo_count;
    demo->add_option("--count", demo_count, "demonstrations to keep")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig cfg = build_config(g);
        if (train->parsed()) {
            if (episodes) cfg.train.episodes = *episodes;
            if (train_crowd) cfg.world.n_humans = *train_crowd;
            cfg.finalize();
            cmd_train(cfg, std::cout);
        } else if (eval->parsed()) {
            if (!eval_crowd.empty()) {
                cfg.eval.crowd_sizes.clear();
                std::stringstream ss(eval_crowd);
                for (std::string item; std::getline(ss, item, ',');) {
                    try {
                        std::size_t used = 0;
                        cfg.eval.crowd_sizes.push_back(std::stoi(item, &used));
                        if (used != item.size()) throw std::invalid_argument(item);
                    } catch (const std::logic_error&) {
                        throw ConfigError("crowd: '" + item + "' is not an integer");
                    }
                }
            }
            if (eval_cases) cfg.eval.n_cases = *eval_cases;
            cfg.finalize();
            EvalRequest req;
            req.methods = parse_method_list(methods);
            if (!eval_weights.empty()) req.weights = eval_weights;
            req.suite = suite;
            cmd_eval(cfg, req, std::cout);
        } else if (rollout->parsed()) {
            if (rollout_crowd) cfg.world.n_humans = *rollout_crowd;
            cfg.finalize();
            RolloutRequest req;
            req.method = method;
            parse_method_list(method);
            if (!rollout_weights.empty()) req.weights = rollout_weights;
            req.scenario = scenario;
            req.first_case = first_case;
            req.count = count;
            req.render = render;
            cmd_rollout(cfg, req, std::cout);
        } else if (demo->parsed()) {
            if (demo_count) cfg.train.il_demos = *demo_count;
            cfg.finalize();
            cmd_demo_collect(cfg, std::cout);
        }
    } catch (const TrainingFault& e) {
        std::cerr << "training fault: " << e.what() << "\n";
        return kExitTrainingFault;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}
