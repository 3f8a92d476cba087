#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relaysim/env.hpp"
#include "relaysim/mlp.hpp"

namespace relaysim {

using Observation = std::array<double, 4>;

struct Transition {
    Observation state{};
    int action = 0;
    double reward = 0.0;
    Observation next_state{}; // zeros when terminal
    bool terminal = false;
};

// Fixed-capacity ring with oldest-first eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Transition& t);
    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t insertions() const { return insertions_; }
    const Transition& at(std::size_t i) const { return ring_[i]; }

    // Uniform sampling with replacement.
    void sample(std::size_t batch, Rng& rng, std::vector<Transition>& out) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::uint64_t insertions_ = 0;
    std::vector<Transition> ring_;
};

struct Hyperparams {
    long long episodes = 20000;          // desk-scale default; full scale 100000
    long long target_sync_period = 2000; // copy main -> target every E' episodes
    double discount = 0.95;
    double learning_rate = 1e-3; // full-scale runs use 1e-5; shorter runs need
                                 // a proportionally larger rate
    double epsilon0 = 1.0;
    double epsilon_decay = 0.999;
    double epsilon_floor = 0.0;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 64;
    AdamConfig adam{};
    std::vector<int> hidden_dims{64, 256, 128};
};

// Index of the maximum, ties broken by the lowest index.
int argmax_lowest(std::span<const double> values);

// With probability epsilon a uniform action, otherwise the greedy argmax.
int epsilon_greedy(const Mlp& net, std::span<const double> obs, double epsilon,
                   Rng& rng);

// y = r for terminal transitions, otherwise r + discount * max_a Q_target(s').
std::vector<double> td_targets(const std::vector<Transition>& batch,
                               const Mlp& target_net, double discount);

// Mean squared error over the batch and its parameter gradient. The gradient
// flows only through each transition's taken action.
double loss_and_grad(const Mlp& net, const std::vector<Transition>& batch,
                     std::span<const double> targets, Gradients& grad,
                     Mlp::Workspace& ws);

// Mutable learning state of one agent.
struct AgentRuntime {
    Mlp net;
    Mlp target;
    AdamState adam;
    ReplayBuffer buffer;

    AgentRuntime(std::vector<int> dims, std::size_t buffer_capacity, Rng& init_rng);
};

struct HopTrainResult {
    double t_rem_ms = 0.0;
    TerminalStatus status = TerminalStatus::kOngoing;
    double reward_sum = 0.0;
    int attempts = 0;
    int gradient_steps = 0;
};

// One hop episode of acting, storing transitions and per-step gradient
// updates. Gradient steps are skipped until the buffer holds one full batch.
HopTrainResult train_hop(Environment& env, int agent, double budget_ms,
                         AgentRuntime& rt, const Hyperparams& hp, double epsilon,
                         Rng& rng);

struct EpisodeLog {
    double reward_sum = 0.0;
    int attempts = 0;
    bool acted = false;
};

struct TrainResult {
    Mlp net1, net2;
    std::vector<EpisodeLog> log1, log2; // one entry per episode per agent
    long long target_syncs = 0;
    long long gradient_steps = 0;
    double final_epsilon = 0.0;
};

// Dual-agent training loop: hop-1 episode, hop-2 episode iff hop 1 succeeded
// with budget left, epsilon decay per episode, periodic target sync.
// Deterministic for a fixed master seed.
TrainResult train_dual(const EnvConfig& cfg, const Hyperparams& hp,
                       std::uint64_t master_seed,
                       const std::function<void(long long, double)>& progress = {});

// Greedy evaluation policy (epsilon = 0) over the environment's action space.
Policy greedy_policy(const Mlp& net, const EnvConfig& cfg);

struct Checkpoint {
    Mlp net;
    Mlp target;
    AdamState adam;
    std::uint64_t episode = 0;
    double epsilon = 0.0;
};

// Versioned binary format: magic/version header, layer shapes, episode
// counter, epsilon, Adam step count, then raw little-endian doubles for main
// weights, target weights and both Adam moments.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace relaysim
