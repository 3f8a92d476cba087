#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "relaysim/phy.hpp"
#include "relaysim/rng.hpp"

namespace relaysim {

enum class TerminalStatus { kOngoing, kSuccess, kFailure };

const char* to_string(TerminalStatus s);

// Agent observation for one (re)transmission attempt. The instantaneous SNR
// is quasi-static: sampled once per hop episode, constant across attempts.
// next_hop_avg_snr is +infinity on the terminal hop (no next hop).
struct HopState {
    double instant_snr = 0.0;
    double next_hop_avg_snr = 0.0;
    int payload_bits = 0;
    double remaining_latency_ms = 0.0;
    int attempt = 1; // 1-based attempt counter within the hop
    TerminalStatus status = TerminalStatus::kOngoing;
};

struct StepResult {
    HopState next_state;
    double reward = 0.0;
    bool decode_error = false;
    double tti_ms = 0.0;
    double arq_ms = 0.0;
    double time_spent_ms = 0.0; // TTI + ARQ
};

struct AttemptRecord {
    int hop = 0;     // 1 or 2
    int attempt = 0; // 1-based within the hop
    ResourceAction action{};
    double instant_snr = 0.0;
    double latency_before_ms = 0.0;
    double tti_ms = 0.0;
    double arq_ms = 0.0;
    bool decode_error = false;
    double reward = 0.0;
};

// Full trace of one packet delivery attempt across both hops.
// hop_status[1] stays kOngoing when the second hop never started.
struct EpisodeRecord {
    std::vector<AttemptRecord> attempts;
    std::array<TerminalStatus, 2> hop_status{TerminalStatus::kOngoing,
                                             TerminalStatus::kOngoing};
    double total_time_ms = 0.0;
    bool delivered = false;

    int attempts_for_hop(int hop) const;
};

// One attempt per line: hop, attempt, mu, n_sym, mcs, tti, arq, decode, reward.
std::string format_episode(const EpisodeRecord& rec);

struct EnvConfig {
    double bandwidth_hz = 480e3;
    double latency_budget_ms = 2.0;
    int payload_bits = 256;
    std::array<double, 2> tx_power_dbm{30.0, 30.0};
    std::array<double, 2> distance_m{500.0, 500.0};
    double path_loss_exp = 2.0;
    double noise_psd_w_per_hz = 1e-14;

    // Observation scaling for the learning agents, not a physical quantity.
    int h_max_bits = 1024;

    // Safety cap against degenerate policies; hitting it counts as Failure.
    int max_attempts_per_hop = 64;

    // Test hook: when set, every decode error is Bernoulli(value) instead of
    // the finite-blocklength probability.
    std::optional<double> decode_error_override;

    double noise_power_w() const { return noise_psd_w_per_hz * bandwidth_hz; }
    LinkBudget link_budget(int agent) const; // agent in {1,2}
};

// Delay outage rate over the remaining latency: the probability that the
// Shannon delivery time of an exponentially faded link with the given average
// SNR exceeds `latency_ms`. Infinite avg_snr returns 0; latency <= 0 returns 1.
double dor(double avg_snr, double latency_ms, int payload_bits, double bandwidth_hz);

// Agent-facing observation: SNRs in dB clipped to [-20, 60] and scaled to
// [-1, 1] (the infinite sentinel maps to the +60 dB clip), payload scaled by
// h_max_bits, latency scaled by the configured budget.
std::array<double, 4> normalize_observation(const HopState& s, const EnvConfig& cfg);

// Deterministic enumeration of the action space (mu outer, mini-slot middle,
// MCS inner), excluding numerologies with zero subcarriers at this bandwidth.
std::vector<ResourceAction> enumerate_actions(double bandwidth_hz);

// Maps a hop state to an index into the environment's action list.
using Policy = std::function<int(const HopState&)>;

class Environment {
public:
    Environment(EnvConfig cfg, std::uint64_t seed);

    const EnvConfig& config() const { return cfg_; }
    const std::vector<ResourceAction>& action_space() const { return actions_; }
    int action_index(const ResourceAction& a) const;
    double avg_snr(int agent) const;

    // Starts a hop episode: samples the instantaneous SNR once and fixes the
    // next-hop average SNR (infinite sentinel for agent 2).
    HopState reset_hop(int agent, int payload_bits, double latency_ms);

    // One (re)transmission attempt. Throws std::logic_error when the state is
    // already terminal. Consumes exactly one RNG draw (the decode outcome).
    StepResult step(const HopState& s, const ResourceAction& a);
    StepResult step(const HopState& s, int action_index);

    // Hop 1 to termination, then hop 2 on the remaining budget iff hop 1
    // succeeded. Delivered iff both hops end in Success.
    EpisodeRecord run_episode(const Policy& hop1, const Policy& hop2);

    Rng& rng() { return rng_; }

private:
    EnvConfig cfg_;
    std::vector<ResourceAction> actions_;
    std::array<LinkBudget, 2> budgets_;
    Rng rng_;
};

} // namespace relaysim
