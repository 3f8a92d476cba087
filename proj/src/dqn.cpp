#include "relaysim/dqn.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace relaysim {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
    ring_.reserve(capacity);
}

void ReplayBuffer::push(const Transition& t) {
    if (ring_.size() < capacity_) {
        ring_.push_back(t);
    } else {
        ring_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
    ++insertions_;
}

void ReplayBuffer::sample(std::size_t batch, Rng& rng,
                          std::vector<Transition>& out) const {
    if (ring_.empty()) throw std::logic_error("sampling from an empty buffer");
    out.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out[i] = ring_[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(ring_.size())))];
    }
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax of empty range");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

int epsilon_greedy(const Mlp& net, std::span<const double> obs, double epsilon,
                   Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("epsilon must lie in [0,1]");
    }
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        return rng.uniform_int(net.output_dim());
    }
    const std::vector<double> q = net.forward(obs);
    return argmax_lowest(q);
}

std::vector<double> td_targets(const std::vector<Transition>& batch,
                               const Mlp& target_net, double discount) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    std::vector<double> y(batch.size());
    Mlp::Workspace ws;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        if (t.terminal) {
            y[i] = t.reward;
        } else {
            const std::vector<double>& q = target_net.forward_cached(t.next_state, ws);
            y[i] = t.reward + discount * q[static_cast<std::size_t>(argmax_lowest(q))];
        }
    }
    return y;
}

double loss_and_grad(const Mlp& net, const std::vector<Transition>& batch,
                     std::span<const double> targets, Gradients& grad,
                     Mlp::Workspace& ws) {
    if (batch.size() != targets.size()) {
        throw std::invalid_argument("targets misaligned with batch");
    }
    grad.fill(0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> dout(static_cast<std::size_t>(net.output_dim()), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        const std::vector<double>& q = net.forward_cached(t.state, ws);
        const double residual = q[static_cast<std::size_t>(t.action)] - targets[i];
        loss += residual * residual * inv_n;
        dout[static_cast<std::size_t>(t.action)] = 2.0 * residual * inv_n;
        net.backward(ws, dout, grad);
        dout[static_cast<std::size_t>(t.action)] = 0.0;
    }
    return loss;
}

AgentRuntime::AgentRuntime(std::vector<int> dims, std::size_t buffer_capacity,
                           Rng& init_rng)
    : net(Mlp::glorot_uniform(std::move(dims), init_rng)),
      target(net),
      adam(net),
      buffer(buffer_capacity) {}

HopTrainResult train_hop(Environment& env, int agent, double budget_ms,
                         AgentRuntime& rt, const Hyperparams& hp, double epsilon,
                         Rng& rng) {
    HopTrainResult out;
    HopState s = env.reset_hop(agent, env.config().payload_bits, budget_ms);

    std::vector<Transition> batch;
    std::vector<double> targets;
    Gradients grad = ParamTensors::zeros_like(rt.net);
    Mlp::Workspace ws;

    while (s.status == TerminalStatus::kOngoing) {
        const Observation obs = normalize_observation(s, env.config());
        const int action = epsilon_greedy(rt.net, obs, epsilon, rng);
        const StepResult r = env.step(s, action);

        Transition t;
        t.state = obs;
        t.action = action;
        t.reward = r.reward;
        t.terminal = r.next_state.status != TerminalStatus::kOngoing;
        if (!t.terminal) {
            t.next_state = normalize_observation(r.next_state, env.config());
        }
        rt.buffer.push(t);

        if (rt.buffer.size() >= hp.batch_size) {
            rt.buffer.sample(hp.batch_size, rng, batch);
            targets = td_targets(batch, rt.target, hp.discount);
            loss_and_grad(rt.net, batch, targets, grad, ws);
            rt.adam.step(rt.net, grad, hp.learning_rate, hp.adam);
            ++out.gradient_steps;
        }

        out.reward_sum += r.reward;
        ++out.attempts;
        s = r.next_state;
    }
    out.t_rem_ms = s.remaining_latency_ms;
    out.status = s.status;
    return out;
}

TrainResult train_dual(const EnvConfig& cfg, const Hyperparams& hp,
                       std::uint64_t master_seed,
                       const std::function<void(long long, double)>& progress) {
    Environment env(cfg, derive_stream_seed(master_seed, 0));
    Rng agent_rng(derive_stream_seed(master_seed, 1));
    Rng init_rng(derive_stream_seed(master_seed, 2));

    const int n_actions = static_cast<int>(env.action_space().size());
    std::vector<int> dims;
    dims.push_back(4);
    dims.insert(dims.end(), hp.hidden_dims.begin(), hp.hidden_dims.end());
    dims.push_back(n_actions);

    AgentRuntime rt1(dims, hp.buffer_capacity, init_rng);
    AgentRuntime rt2(dims, hp.buffer_capacity, init_rng);

    TrainResult result;
    result.log1.resize(static_cast<std::size_t>(hp.episodes));
    result.log2.resize(static_cast<std::size_t>(hp.episodes));

    double epsilon = hp.epsilon0;
    for (long long e = 0; e < hp.episodes; ++e) {
        const HopTrainResult hop1 =
            train_hop(env, 1, cfg.latency_budget_ms, rt1, hp, epsilon, agent_rng);
        result.log1[static_cast<std::size_t>(e)] =
            EpisodeLog{hop1.reward_sum, hop1.attempts, true};
        result.gradient_steps += hop1.gradient_steps;

        if (hop1.status == TerminalStatus::kSuccess && hop1.t_rem_ms >= -kLatencyTolMs) {
            const HopTrainResult hop2 =
                train_hop(env, 2, hop1.t_rem_ms, rt2, hp, epsilon, agent_rng);
            result.log2[static_cast<std::size_t>(e)] =
                EpisodeLog{hop2.reward_sum, hop2.attempts, true};
            result.gradient_steps += hop2.gradient_steps;
        }

        epsilon = std::max(hp.epsilon_floor, epsilon * hp.epsilon_decay);
        if ((e + 1) % hp.target_sync_period == 0) {
            rt1.target = rt1.net;
            rt2.target = rt2.net;
            ++result.target_syncs;
        }
        if (progress) progress(e + 1, epsilon);
    }

    result.net1 = std::move(rt1.net);
    result.net2 = std::move(rt2.net);
    result.final_epsilon = epsilon;
    return result;
}

Policy greedy_policy(const Mlp& net, const EnvConfig& cfg) {
    return [&net, cfg](const HopState& s) {
        const Observation obs = normalize_observation(s, cfg);
        return argmax_lowest(net.forward(obs));
    };
}

namespace {

constexpr char kCheckpointMagic[8] = {'R', 'S', 'Q', 'N', 'C', 'K', 'V', '1'};

void write_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_doubles(std::ofstream& f, const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint64_t read_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void read_doubles(std::ifstream& f, std::vector<double>& v) {
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void write_tensors(std::ofstream& f, const ParamTensors& p) {
    for (const auto& v : p.w) write_doubles(f, v);
    for (const auto& v : p.b) write_doubles(f, v);
}

void read_tensors(std::ifstream& f, ParamTensors& p) {
    for (auto& v : p.w) read_doubles(f, v);
    for (auto& v : p.b) read_doubles(f, v);
}

void write_net(std::ofstream& f, const Mlp& net) {
    for (const auto& v : net.weights()) write_doubles(f, v);
    for (const auto& v : net.biases()) write_doubles(f, v);
}

void read_net(std::ifstream& f, Mlp& net) {
    for (auto& v : net.weights()) read_doubles(f, v);
    for (auto& v : net.biases()) read_doubles(f, v);
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u64(f, ckpt.net.dims().size());
    for (int d : ckpt.net.dims()) write_u64(f, static_cast<std::uint64_t>(d));
    write_u64(f, ckpt.episode);
    double eps = ckpt.epsilon;
    f.write(reinterpret_cast<const char*>(&eps), sizeof(eps));
    write_u64(f, ckpt.adam.step_count());
    write_net(f, ckpt.net);
    write_net(f, ckpt.target);
    write_tensors(f, ckpt.adam.first_moment());
    write_tensors(f, ckpt.adam.second_moment());
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    }
    const std::uint64_t n_dims = read_u64(f);
    if (n_dims < 2 || n_dims > 64) {
        throw std::runtime_error("corrupt checkpoint header: " + path);
    }
    std::vector<int> dims(n_dims);
    for (auto& d : dims) d = static_cast<int>(read_u64(f));

    Checkpoint ckpt;
    ckpt.episode = read_u64(f);
    f.read(reinterpret_cast<char*>(&ckpt.epsilon), sizeof(double));
    const std::uint64_t adam_t = read_u64(f);

    ckpt.net = Mlp(dims);
    ckpt.target = Mlp(dims);
    ckpt.adam = AdamState(ckpt.net);
    ckpt.adam.set_step_count(adam_t);
    read_net(f, ckpt.net);
    read_net(f, ckpt.target);
    read_tensors(f, ckpt.adam.first_moment());
    read_tensors(f, ckpt.adam.second_moment());
    if (!f) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

} // namespace relaysim
