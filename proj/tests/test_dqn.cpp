#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "relaysim/dqn.hpp"
#include "relaysim/harness.hpp"

using namespace relaysim;

namespace {

// Budget that admits exactly one action: (mu=4, n_sym=2, MCS 15) at
// 31/224 ms per attempt; the runner-up configuration needs 33/224 ms.
constexpr double kSingleActionBudgetMs = 0.142;

EnvConfig stub_config() {
    EnvConfig cfg;
    cfg.latency_budget_ms = kSingleActionBudgetMs;
    cfg.decode_error_override = 0.0;
    return cfg;
}

} // namespace

TEST_CASE("replay buffer evicts oldest first") {
    ReplayBuffer buf(5);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
    }
    CHECK(buf.size() == 5);
    CHECK(buf.insertions() == 8);
    // rewards 0,1,2 are gone; 3..7 remain
    std::vector<int> seen;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        seen.push_back(static_cast<int>(buf.at(i).reward));
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{3, 4, 5, 6, 7});
}

TEST_CASE("replay buffer samples uniformly with replacement") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 3; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
    }
    Rng rng(1);
    std::vector<Transition> batch;
    buf.sample(9, rng, batch); // more than the buffer holds: replacement
    CHECK(batch.size() == 9);
    int counts[3] = {0, 0, 0};
    for (int k = 0; k < 3000; ++k) {
        buf.sample(1, rng, batch);
        counts[static_cast<int>(batch[0].reward)]++;
    }
    for (int c : counts) CHECK(std::abs(c - 1000) < 5 * 26); // 5 sigma
}

TEST_CASE("TD targets") {
    Mlp target({4, 3}); // zero net
    target.biases()[0] = {1.0, 3.0, 2.0};

    std::vector<Transition> batch(3);
    batch[0].reward = -1.0;
    batch[0].terminal = true; // no bootstrap at terminals
    batch[1].reward = 0.5;
    batch[1].terminal = false;
    batch[2].reward = 0.25;
    batch[2].terminal = false;

    const auto y95 = td_targets(batch, target, 0.95);
    CHECK(y95[0] == -1.0);
    CHECK(y95[1] == doctest::Approx(0.5 + 0.95 * 3.0).epsilon(1e-12));
    CHECK(y95[2] == doctest::Approx(0.25 + 0.95 * 3.0).epsilon(1e-12));

    const auto y0 = td_targets(batch, target, 0.0); // myopic limit
    CHECK(y0[1] == 0.5);
    CHECK(y0[2] == 0.25);
}

TEST_CASE("epsilon-greedy selection") {
    Mlp net({4, 10});
    net.biases()[0][3] = 1.0;
    net.biases()[0][7] = 1.0; // tie with index 3
    const Observation obs{0.1, 0.2, 0.3, 0.4};

    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        CHECK(epsilon_greedy(net, obs, 0.0, rng) == 3); // tie -> lowest index
    }
    CHECK_THROWS_AS(epsilon_greedy(net, obs, 1.5, rng), std::invalid_argument);

    // greedy choice is invariant under a constant shift of all outputs
    Mlp shifted = net;
    for (double& b : shifted.biases()[0]) b += 17.5;
    CHECK(epsilon_greedy(shifted, obs, 0.0, rng) == 3);
}

TEST_CASE("epsilon=1 explores uniformly") {
    Mlp net({4, 300});
    const Observation obs{0.0, 0.0, 0.0, 0.0};
    Rng rng(3);
    const int n = 100000;
    std::vector<int> counts(300, 0);
    for (int i = 0; i < n; ++i) {
        counts[static_cast<std::size_t>(epsilon_greedy(net, obs, 1.0, rng))]++;
    }
    const double p = 1.0 / 300.0;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    for (int c : counts) {
        CHECK(std::abs(c - n * p) <= 5.0 * sigma);
    }
}

TEST_CASE("train_hop skips gradient steps until one full batch is stored") {
    Environment env(stub_config(), 21);
    Hyperparams hp;
    hp.batch_size = 1000; // never reached in one episode
    hp.hidden_dims = {8, 8};
    Rng init(4), rng(5);
    AgentRuntime rt({4, 8, 8, static_cast<int>(env.action_space().size())},
                    hp.buffer_capacity, init);
    const Mlp before = rt.net;
    const HopTrainResult res =
        train_hop(env, 2, kSingleActionBudgetMs, rt, hp, 1.0, rng);
    CHECK(res.gradient_steps == 0);
    CHECK(rt.net.equal_parameters(before)); // no update happened
    CHECK(rt.buffer.size() == static_cast<std::size_t>(res.attempts));
    CHECK(rt.buffer.size() >= 1);
}

TEST_CASE("train_hop on a forced-success channel terminates in one attempt") {
    EnvConfig cfg;
    cfg.decode_error_override = 0.0;
    Environment env(cfg, 22);
    Hyperparams hp;
    hp.hidden_dims = {8, 8};
    Rng init(6), rng(7);
    AgentRuntime rt({4, 8, 8, static_cast<int>(env.action_space().size())},
                    hp.buffer_capacity, init);
    const HopTrainResult res =
        train_hop(env, 2, cfg.latency_budget_ms, rt, hp, 0.0, rng);
    CHECK(res.status == TerminalStatus::kSuccess);
    CHECK(res.attempts == 1);
    CHECK(res.reward_sum == 1.0);
    // T_rem is the budget minus the chosen action's TTI and ARQ
    const ResourceAction a =
        env.action_space()[static_cast<std::size_t>(rt.buffer.at(0).action)];
    const double spent =
        tti_ms(a, cfg.payload_bits, cfg.bandwidth_hz) + arq_duration_ms(a.mu);
    CHECK(res.t_rem_ms ==
          doctest::Approx(cfg.latency_budget_ms - spent).epsilon(1e-12));
}

TEST_CASE("target network changes only at sync and then matches exactly") {
    Environment env(stub_config(), 23);
    Hyperparams hp;
    hp.batch_size = 4;
    hp.hidden_dims = {8, 8};
    hp.learning_rate = 1e-2;
    Rng init(8), rng(9);
    AgentRuntime rt({4, 8, 8, static_cast<int>(env.action_space().size())},
                    hp.buffer_capacity, init);
    const Mlp target_before = rt.target;
    for (int e = 0; e < 5; ++e) {
        train_hop(env, 2, kSingleActionBudgetMs, rt, hp, 0.5, rng);
    }
    CHECK(rt.target.equal_parameters(target_before)); // untouched by training
    CHECK_FALSE(rt.net.equal_parameters(target_before));
    rt.target = rt.net; // the sync step of the episode loop
    CHECK(rt.target.equal_parameters(rt.net));
}

TEST_CASE("epsilon schedule: decay, floor, and sync counting") {
    EnvConfig cfg = stub_config();
    Hyperparams hp;
    hp.episodes = 10;
    hp.target_sync_period = 2;
    hp.epsilon0 = 1.0;
    hp.epsilon_decay = 0.5;
    hp.epsilon_floor = 0.1;
    hp.batch_size = 4;
    hp.hidden_dims = {8, 8};
    std::vector<double> eps_seen;
    const TrainResult tr = train_dual(
        cfg, hp, 77, [&](long long, double eps) { eps_seen.push_back(eps); });
    REQUIRE(eps_seen.size() == 10);
    for (std::size_t e = 0; e < eps_seen.size(); ++e) {
        const double expected = std::max(0.1, std::pow(0.5, e + 1.0));
        CHECK(eps_seen[e] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(tr.final_epsilon == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(tr.target_syncs == 5);
}

TEST_CASE("training is bit-reproducible for a fixed master seed") {
    EnvConfig cfg; // the real channel, exercising both hops
    Hyperparams hp;
    hp.episodes = 40;
    hp.batch_size = 8;
    hp.buffer_capacity = 200;
    hp.hidden_dims = {8, 8};
    const TrainResult a = train_dual(cfg, hp, 123);
    const TrainResult b = train_dual(cfg, hp, 123);
    CHECK(a.net1.equal_parameters(b.net1));
    CHECK(a.net2.equal_parameters(b.net2));
    CHECK(a.gradient_steps == b.gradient_steps);
    REQUIRE(a.log1.size() == b.log1.size());
    for (std::size_t i = 0; i < a.log1.size(); ++i) {
        CHECK(a.log1[i].reward_sum == b.log1[i].reward_sum);
        CHECK(a.log2[i].reward_sum == b.log2[i].reward_sum);
    }
    const TrainResult c = train_dual(cfg, hp, 124);
    CHECK_FALSE(a.net1.equal_parameters(c.net1));
}

TEST_CASE("the trainer finds the single feasible action of a stub channel") {
    EnvConfig cfg = stub_config();
    Environment probe(cfg, 31);
    const int optimal = probe.action_index(ResourceAction{4, 2, 15});

    Hyperparams hp;
    hp.learning_rate = 1e-2;
    hp.batch_size = 32;
    hp.buffer_capacity = 2000;
    hp.epsilon_decay = 0.99;
    hp.hidden_dims = {32, 32};

    Environment env(cfg, 32);
    Rng init(33), rng(34);
    AgentRuntime rt({4, 32, 32, static_cast<int>(env.action_space().size())},
                    hp.buffer_capacity, init);
    double epsilon = 1.0;
    for (int e = 0; e < 1000; ++e) {
        train_hop(env, 2, cfg.latency_budget_ms, rt, hp, epsilon, rng);
        epsilon *= hp.epsilon_decay;
        if ((e + 1) % 50 == 0) rt.target = rt.net;
    }

    int hits = 0;
    const int n_states = 100;
    for (int i = 0; i < n_states; ++i) {
        const HopState s = env.reset_hop(2, cfg.payload_bits, cfg.latency_budget_ms);
        const Observation obs = normalize_observation(s, cfg);
        if (epsilon_greedy(rt.net, obs, 0.0, rng) == optimal) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("checkpoint round-trip restores training state exactly") {
    Rng init(41);
    Mlp net = Mlp::glorot_uniform({4, 8, 8, 20}, init);
    Mlp target = Mlp::glorot_uniform({4, 8, 8, 20}, init);
    AdamState adam(net);
    Gradients grad = ParamTensors::zeros_like(net);
    grad.fill(0.5);
    adam.step(net, grad, 1e-3, AdamConfig{});
    adam.step(net, grad, 1e-3, AdamConfig{});

    const auto path =
        (std::filesystem::temp_directory_path() / "relaysim_ckpt_test.bin").string();
    save_checkpoint(path, Checkpoint{net, target, adam, 1234, 0.456});
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.net.equal_parameters(net));
    CHECK(loaded.target.equal_parameters(target));
    CHECK(loaded.episode == 1234);
    CHECK(loaded.epsilon == 0.456);
    CHECK(loaded.adam.step_count() == 2);
    CHECK(loaded.adam.first_moment().w == adam.first_moment().w);
    CHECK(loaded.adam.second_moment().w == adam.second_moment().w);
    CHECK(loaded.adam.first_moment().b == adam.first_moment().b);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), std::runtime_error);
}
