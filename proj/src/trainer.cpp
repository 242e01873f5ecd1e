#include "elevnav/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace elevnav {

namespace {

// Independent seed streams derived from the run seed.
constexpr std::uint64_t kDemoStream = 0x64656d6fULL;
constexpr std::uint64_t kFitStream = 0x66697474ULL;
constexpr std::uint64_t kRlWorldStream = 0x726c7764ULL;
constexpr std::uint64_t kRlActStream = 0x726c6163ULL;
constexpr std::uint64_t kCrowdStream = 0x63726f77ULL;

constexpr int kDemoProbe = 10000;
constexpr double kMinDemoYield = 0.05;
constexpr double kDivergenceLoss = 1e6;
constexpr int kMaxConsecutiveFaults = 3;

// One environment per crowd size a run can draw.
class CrowdEnvs {
public:
    CrowdEnvs(const TrainConfig& cfg, const WorldConfig& world) : max_(world.n_humans) {
        if (cfg.min_humans > world.n_humans)
            throw ConfigError("train.min_humans: exceeds world.n_humans (" + std::to_string(world.n_humans) + ")");
        min_ = cfg.min_humans < 0 ? world.n_humans : cfg.min_humans;
        for (int n = min_; n <= max_; ++n) {
            WorldConfig w = world;
            w.n_humans = n;
            envs_.emplace_back(w);
        }
    }

    const Elevator& for_episode(std::uint64_t world_seed) const {
        if (min_ == max_) return envs_.front();
        Rng rng(world_seed ^ kCrowdStream);
        return envs_[rng.below(envs_.size())];
    }

private:
    int min_ = 0;
    int max_ = 0;
    std::vector<Elevator> envs_;
};

}  // namespace

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("train." + field + ": " + why);
    };
    if (!(il_lr > 0.0)) fail("il_lr", "must be positive");
    if (il_epochs < 0) fail("il_epochs", "must be non-negative");
    if (il_demos <= 0) fail("il_demos", "must be positive");
    if (!(rl_lr > 0.0)) fail("rl_lr", "must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma", "must lie in (0,1)");
    if (batch <= 0) fail("batch", "must be positive");
    if (episodes < 0) fail("episodes", "must be non-negative");
    if (!(eps_start >= 0.0 && eps_start <= 1.0)) fail("eps_start", "must lie in [0,1]");
    if (!(eps_end >= 0.0 && eps_end <= 1.0)) fail("eps_end", "must lie in [0,1]");
    if (eps_start < eps_end) fail("eps_start", "must not be below eps_end");
    if (eps_decay_episodes <= 0) fail("eps_decay_episodes", "must be positive");
    if (target_sync_interval <= 0) fail("target_sync_interval", "must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must lie in [0,1)");
    if (!(grad_clip >= 0.0)) fail("grad_clip", "must be non-negative");
    if (replay_capacity == 0) fail("replay_capacity", "must be positive");
    if (max_batches_per_episode <= 0) fail("max_batches_per_episode", "must be positive");
    if (min_humans < -1) fail("min_humans", "must be -1 (fixed crowd) or a crowd size");
    if (checkpoint_interval < 0) fail("checkpoint_interval", "must be non-negative");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidArgument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (!std::isfinite(t.target_value)) throw InvalidArgument("replay: non-finite target");
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
    items_.clear();
    cursor_ = 0;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
    const std::size_t n = items_.size();
    count = std::min(count, n);
    // Floyd's algorithm: distinct indices without materialising a permutation.
    std::vector<std::size_t> out;
    out.reserve(count);
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = n - count; j < n; ++j) {
        const auto t = static_cast<std::size_t>(rng.below(j + 1));
        if (seen.insert(t).second)
            out.push_back(t);
        else {
            seen.insert(j);
            out.push_back(j);
        }
    }
    return out;
}

std::vector<const Transition*> ReplayBuffer::ordered() const {
    std::vector<const Transition*> out;
    out.reserve(items_.size());
    const std::size_t start = items_.size() < capacity_ ? 0 : cursor_;
    for (std::size_t k = 0; k < items_.size(); ++k) out.push_back(&items_[(start + k) % items_.size()]);
    return out;
}

std::vector<Demonstration> collect_demonstrations(const TrainConfig& cfg, const WorldConfig& world,
                                                  int count, DemoStats* stats) {
    if (count <= 0) throw InvalidArgument("collect_demonstrations: count must be positive");
    const CrowdEnvs crowds(cfg, world);
    std::vector<Demonstration> demos;
    demos.reserve(static_cast<std::size_t>(count));
    int attempted = 0;
    while (static_cast<int>(demos.size()) < count) {
        if (attempted == kDemoProbe &&
            static_cast<double>(demos.size()) < kMinDemoYield * static_cast<double>(attempted))
            throw ConfigError("world.n_humans: ORCA demonstrations succeed in fewer than 5% of episodes");

        Demonstration d;
        d.world_seed = case_seed(cfg.seed ^ kDemoStream, static_cast<std::uint64_t>(attempted));
        ++attempted;
        const Elevator& env = crowds.for_episode(d.world_seed);
        WorldState w = env.reset(d.world_seed);
        while (!w.done()) {
            d.states.push_back(env.observe(w));
            const StepResult r = env.step(w, orca_robot_policy(env, w));
            d.rewards.push_back(r.reward);
        }
        d.outcome = w.outcome;
        if (cfg.demos_success_only && d.outcome != Outcome::Success) continue;
        d.targets.resize(d.rewards.size());
        for (std::size_t k = 0; k < d.rewards.size(); ++k)
            d.targets[k] = discounted_return(d.rewards, cfg.gamma, world.dt, world.v_pref, k).value;
        demos.push_back(std::move(d));
    }
    if (stats) {
        stats->attempted = attempted;
        stats->retained = static_cast<int>(demos.size());
    }
    return demos;
}

std::vector<EpochLog> imitation_fit(ValueNet& net, const std::vector<Transition>& samples,
                                    const TrainConfig& cfg, int epochs) {
    std::vector<EpochLog> log;
    if (epochs <= 0) return log;
    if (samples.empty()) throw InvalidArgument("imitation_fit: no demonstrations");

    Rng rng(case_seed(cfg.seed, kFitStream));
    SgdOptimizer opt(cfg.il_lr, cfg.momentum);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(cfg.batch);

    Gradients grads = net.zero_gradients();
    std::vector<const JointState*> states;
    std::vector<double> targets;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            states.clear();
            targets.clear();
            for (std::size_t i = begin; i < end; ++i) {
                states.push_back(&samples[order[i]].state);
                targets.push_back(samples[order[i]].target_value);
            }
            grads.set_zero();
            const double loss = net.mse_gradients(states, targets, grads);
            if (cfg.grad_clip > 0.0) grads.clip_norm(cfg.grad_clip);
            if (!std::isfinite(loss) || loss > kDivergenceLoss)
                throw TrainingFault("imitation learning diverged (loss " + std::to_string(loss) + ")");
            opt.step(net, grads);
            total += loss * static_cast<double>(end - begin);
        }
        log.push_back({epoch, total / static_cast<double>(order.size())});
    }
    return log;
}

std::vector<EpochLog> imitation_fit(ValueNet& net, const std::vector<Demonstration>& demos,
                                    const TrainConfig& cfg) {
    if (demos.empty()) throw InvalidArgument("imitation_fit: no demonstrations");
    std::vector<Transition> samples;
    for (const auto& d : demos)
        for (std::size_t k = 0; k < d.states.size(); ++k) samples.push_back({d.states[k], d.targets[k]});
    return imitation_fit(net, samples, cfg, cfg.il_epochs);
}

double td_target(double reward, const JointState& next_state, bool done, const ValueNet& target_net,
                 double gamma, double dt, double v_pref) {
    if (done) return reward;
    return reward + step_discount(gamma, dt, v_pref) * target_net.forward(next_state).value;
}

double epsilon_at(const TrainConfig& cfg, int episode) {
    const double frac = std::clamp(static_cast<double>(episode) / cfg.eps_decay_episodes, 0.0, 1.0);
    const double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
    return std::clamp(eps, cfg.eps_end, cfg.eps_start);
}

std::vector<EpisodeLog> rl_train(ValueNet& net, const TrainConfig& cfg, const WorldConfig& world,
                                 const RlHooks& hooks) {
    cfg.validate();
    std::vector<EpisodeLog> log;
    if (cfg.episodes == 0) return log;

    const CrowdEnvs crowds(cfg, world);
    const ActionSpace space = enumerate_actions(world.v_pref, cfg.beep_enabled);
    Rng act_rng(case_seed(cfg.seed, kRlActStream));
    ValueNet target = net;
    ReplayBuffer buffer(cfg.replay_capacity);
    SgdOptimizer opt(cfg.rl_lr, cfg.momentum);
    Gradients grads = net.zero_gradients();
    const auto batch = static_cast<std::size_t>(cfg.batch);
    int consecutive_faults = 0;

    std::vector<const JointState*> states;
    std::vector<double> targets;
    for (int e = 0; e < cfg.episodes; ++e) {
        EpisodeLog entry;
        entry.episode = e;
        entry.epsilon = epsilon_at(cfg, e);

        const std::uint64_t world_seed = case_seed(cfg.seed ^ kRlWorldStream, static_cast<std::uint64_t>(e));
        const Elevator& env = crowds.for_episode(world_seed);
        WorldState w = env.reset(world_seed);
        JointState obs = env.observe(w);
        if (!cfg.use_replay) buffer.clear();
        const ValueNet& bootstrap = cfg.use_target_net ? target : net;
        while (!w.done()) {
            const PolicyDecision dec = greedy_action(net, env, w, space, cfg.gamma, entry.epsilon, act_rng);
            StepResult r = env.step(w, dec.action);
            const double tgt = td_target(r.reward, r.observation, r.done, bootstrap, cfg.gamma, world.dt,
                                         world.v_pref);
            buffer.push({std::move(obs), tgt});
            obs = std::move(r.observation);
            entry.ret += r.reward;
            entry.beeps += dec.action.beep ? 1 : 0;
            ++entry.steps;
        }
        entry.outcome = w.outcome;

        const std::size_t wanted = (buffer.size() + batch - 1) / batch;
        const std::size_t passes = std::min(wanted, static_cast<std::size_t>(cfg.max_batches_per_episode));
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t b = 0; b < passes; ++b) {
            const auto idx = buffer.sample_indices(batch, act_rng);
            states.clear();
            targets.clear();
            for (auto i : idx) {
                states.push_back(&buffer[i].state);
                targets.push_back(buffer[i].target_value);
            }
            grads.set_zero();
            const double loss = net.mse_gradients(states, targets, grads);
            if (cfg.grad_clip > 0.0) grads.clip_norm(cfg.grad_clip);
            try {
                opt.step(net, grads);
                consecutive_faults = 0;
            } catch (const TrainingFault&) {
                if (++consecutive_faults >= kMaxConsecutiveFaults) throw;
                continue;
            }
            loss_sum += loss;
            ++loss_count;
        }
        entry.loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        if (!std::isfinite(entry.loss) || entry.loss > kDivergenceLoss)
            throw TrainingFault("reinforcement learning diverged at episode " + std::to_string(e));

        if (cfg.use_target_net && (e + 1) % cfg.target_sync_interval == 0) target = net;
        log.push_back(entry);
        if (hooks.on_episode) hooks.on_episode(entry);
        if (hooks.on_checkpoint && cfg.checkpoint_interval > 0 && (e + 1) % cfg.checkpoint_interval == 0)
            hooks.on_checkpoint(e + 1, net);
    }
    return log;
}

}  // namespace elevnav
