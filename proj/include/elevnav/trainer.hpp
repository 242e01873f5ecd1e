#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elevnav/core.hpp"
#include "elevnav/env.hpp"
#include "elevnav/navformer.hpp"
#include "elevnav/policy.hpp"

namespace elevnav {

struct TrainConfig {
    double il_lr = 0.01;
    int il_epochs = 50;
    int il_demos = 3000;
    double rl_lr = 0.001;
    double gamma = 0.9;
    int batch = 100;
    int episodes = 10000;
    double eps_start = 0.5;
    double eps_end = 0.1;
    int eps_decay_episodes = 5000;
    int target_sync_interval = 50;
    double momentum = 0.9;
    // Global gradient-norm clip per minibatch; 0 turns it off.
    double grad_clip = 10.0;
    std::size_t replay_capacity = 100000;
    bool use_replay = true;
    bool use_target_net = true;
    // Upper bound on minibatches per post-episode optimisation pass.
    int max_batches_per_episode = 8;
    bool demos_success_only = true;
    // Per-episode crowd size drawn uniformly from [min_humans, world.n_humans];
    // negative keeps every episode at world.n_humans.
    int min_humans = -1;
    bool beep_enabled = true;
    int checkpoint_interval = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Transition {
    JointState state;
    double target_value = 0.0;
};

// Fixed-capacity FIFO ring.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    void clear();

    // Distinct indices, uniform; min(count, size()) of them.
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;
    const Transition& operator[](std::size_t i) const { return items_[i]; }
    // Oldest first.
    std::vector<const Transition*> ordered() const;

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> items_;
};

struct Demonstration {
    std::vector<JointState> states;  // observation before each action
    std::vector<double> rewards;
    std::vector<double> targets;     // discounted return from each step
    Outcome outcome = Outcome::Running;
    std::uint64_t world_seed = 0;
};

struct DemoStats {
    int attempted = 0;
    int retained = 0;
};

std::vector<Demonstration> collect_demonstrations(const TrainConfig& cfg, const WorldConfig& world,
                                                  int count, DemoStats* stats = nullptr);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
};

// Mean-squared-error regression of the value net onto the demonstration returns.
std::vector<EpochLog> imitation_fit(ValueNet& net, const std::vector<Demonstration>& demos,
                                    const TrainConfig& cfg);
std::vector<EpochLog> imitation_fit(ValueNet& net, const std::vector<Transition>& samples,
                                    const TrainConfig& cfg, int epochs);

double td_target(double reward, const JointState& next_state, bool done, const ValueNet& target_net,
                 double gamma, double dt, double v_pref);

// Linear decay from eps_start to eps_end over eps_decay_episodes, then flat.
double epsilon_at(const TrainConfig& cfg, int episode);

struct EpisodeLog {
    int episode = 0;
    Outcome outcome = Outcome::Running;
    double ret = 0.0;
    int steps = 0;
    double epsilon = 0.0;
    double loss = 0.0;
    int beeps = 0;
};

struct RlHooks {
    std::function<void(const EpisodeLog&)> on_episode;
    std::function<void(int episode, const ValueNet&)> on_checkpoint;
};

std::vector<EpisodeLog> rl_train(ValueNet& net, const TrainConfig& cfg, const WorldConfig& world,
                                 const RlHooks& hooks = {});

}  // namespace elevnav
