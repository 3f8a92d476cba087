#include "relaysim/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace relaysim {

const char* to_string(TerminalStatus s) {
    switch (s) {
    case TerminalStatus::kOngoing: return "ongoing";
    case TerminalStatus::kSuccess: return "success";
    case TerminalStatus::kFailure: return "failure";
    }
    return "?";
}

int EpisodeRecord::attempts_for_hop(int hop) const {
    int n = 0;
    for (const auto& a : attempts) {
        if (a.hop == hop) ++n;
    }
    return n;
}

std::string format_episode(const EpisodeRecord& rec) {
    std::string out;
    char line[256];
    for (const auto& a : rec.attempts) {
        std::snprintf(line, sizeof(line), "%d %d %d %d %d %.17g %.17g %d %.17g\n",
                      a.hop, a.attempt, a.action.mu, a.action.n_sym, a.action.mcs,
                      a.tti_ms, a.arq_ms, a.decode_error ? 1 : 0, a.reward);
        out += line;
    }
    return out;
}

LinkBudget EnvConfig::link_budget(int agent) const {
    if (agent != 1 && agent != 2) {
        throw std::invalid_argument("agent must be 1 or 2");
    }
    return LinkBudget{dbm_to_watt(tx_power_dbm[agent - 1]), distance_m[agent - 1],
                      path_loss_exp, noise_power_w()};
}

double dor(double avg_snr, double latency_ms, int payload_bits, double bandwidth_hz) {
    if (std::isinf(avg_snr)) {
        return 0.0; // no next hop: outage never occurs
    }
    if (!(avg_snr > 0.0)) {
        throw std::invalid_argument("average SNR must be positive");
    }
    if (latency_ms <= 0.0) {
        return 1.0;
    }
    const double exponent =
        static_cast<double>(payload_bits) / (bandwidth_hz * latency_ms * 1e-3);
    const double snr_threshold = std::expm1(exponent * M_LN2); // 2^x - 1
    return -std::expm1(-snr_threshold / avg_snr);
}

std::array<double, 4> normalize_observation(const HopState& s, const EnvConfig& cfg) {
    const auto snr_to_unit = [](double snr) {
        if (std::isinf(snr)) return 1.0;
        const double db = 10.0 * std::log10(snr);
        return (std::clamp(db, -20.0, 60.0) - 20.0) / 40.0;
    };
    return {snr_to_unit(s.instant_snr), snr_to_unit(s.next_hop_avg_snr),
            static_cast<double>(s.payload_bits) / cfg.h_max_bits,
            s.remaining_latency_ms / cfg.latency_budget_ms};
}

std::vector<ResourceAction> enumerate_actions(double bandwidth_hz) {
    std::vector<ResourceAction> actions;
    for (int mu = 0; mu < kNumNumerologies; ++mu) {
        if (subcarrier_count(mu, bandwidth_hz) == 0) {
            continue; // numerology infeasible for this bandwidth
        }
        for (int n_sym : kMiniSlotSymbols) {
            for (int mcs = 1; mcs <= kNumMcs; ++mcs) {
                actions.push_back(ResourceAction{mu, n_sym, mcs});
            }
        }
    }
    return actions;
}

Environment::Environment(EnvConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      actions_(enumerate_actions(cfg.bandwidth_hz)),
      budgets_{cfg.link_budget(1), cfg.link_budget(2)},
      rng_(seed) {
    if (actions_.empty()) {
        throw std::invalid_argument("no feasible actions for this bandwidth");
    }
}

int Environment::action_index(const ResourceAction& a) const {
    const auto it = std::find(actions_.begin(), actions_.end(), a);
    if (it == actions_.end()) {
        throw std::invalid_argument("action not in the legal action set");
    }
    return static_cast<int>(it - actions_.begin());
}

double Environment::avg_snr(int agent) const {
    if (agent != 1 && agent != 2) {
        throw std::invalid_argument("agent must be 1 or 2");
    }
    return budgets_[agent - 1].avg_snr();
}

HopState Environment::reset_hop(int agent, int payload_bits, double latency_ms) {
    if (agent != 1 && agent != 2) {
        throw std::invalid_argument("agent must be 1 or 2");
    }
    if (latency_ms < -kLatencyTolMs) {
        throw std::invalid_argument("latency budget must be positive");
    }
    HopState s;
    s.instant_snr = sample_instant_snr(budgets_[agent - 1], rng_);
    s.next_hop_avg_snr = agent == 1 ? budgets_[1].avg_snr()
                                    : std::numeric_limits<double>::infinity();
    s.payload_bits = payload_bits;
    s.remaining_latency_ms = latency_ms;
    s.attempt = 1;
    s.status = TerminalStatus::kOngoing;
    return s;
}

StepResult Environment::step(const HopState& s, const ResourceAction& a) {
    if (s.status != TerminalStatus::kOngoing) {
        throw std::logic_error("stepping a terminal hop state");
    }
    StepResult r;
    r.tti_ms = tti_ms(a, s.payload_bits, cfg_.bandwidth_hz);
    r.arq_ms = arq_duration_ms(a.mu);
    r.time_spent_ms = r.tti_ms + r.arq_ms;

    const double tau_next = s.remaining_latency_ms - r.time_spent_ms;
    const double error_prob =
        cfg_.decode_error_override
            ? *cfg_.decode_error_override
            : fbl_error_prob(s.instant_snr,
                             symbols_needed(s.payload_bits, mcs_entry(a.mcs)),
                             s.payload_bits);
    r.decode_error = rng_.bernoulli(error_prob);

    r.next_state = s;
    r.next_state.remaining_latency_ms = tau_next;
    r.next_state.attempt = s.attempt + 1;

    if (tau_next < -kLatencyTolMs) {
        // Budget exhausted: a delivery completing past the deadline is a loss
        // no matter how the decode went.
        r.next_state.status = TerminalStatus::kFailure;
        r.reward = -1.0;
    } else if (!r.decode_error) {
        r.next_state.status = TerminalStatus::kSuccess;
        r.reward = 1.0 - dor(s.next_hop_avg_snr, tau_next, s.payload_bits,
                             cfg_.bandwidth_hz);
    } else if (s.attempt >= cfg_.max_attempts_per_hop) {
        r.next_state.status = TerminalStatus::kFailure;
        r.reward = -1.0;
    } else {
        r.next_state.status = TerminalStatus::kOngoing;
        r.reward = -0.1;
    }
    return r;
}

StepResult Environment::step(const HopState& s, int action_index) {
    if (action_index < 0 || action_index >= static_cast<int>(actions_.size())) {
        throw std::invalid_argument("action index out of range");
    }
    return step(s, actions_[static_cast<std::size_t>(action_index)]);
}

EpisodeRecord Environment::run_episode(const Policy& hop1, const Policy& hop2) {
    EpisodeRecord rec;

    const auto run_hop = [&](int hop, const Policy& policy, double budget_ms) {
        HopState s = reset_hop(hop, cfg_.payload_bits, budget_ms);
        while (s.status == TerminalStatus::kOngoing) {
            const int ai = policy(s);
            const ResourceAction& a = actions_[static_cast<std::size_t>(ai)];
            const StepResult r = step(s, a);
            rec.attempts.push_back(AttemptRecord{hop, s.attempt, a, s.instant_snr,
                                                 s.remaining_latency_ms, r.tti_ms,
                                                 r.arq_ms, r.decode_error, r.reward});
            rec.total_time_ms += r.time_spent_ms;
            s = r.next_state;
        }
        rec.hop_status[static_cast<std::size_t>(hop - 1)] = s.status;
        return s.remaining_latency_ms;
    };

    const double t_rem = run_hop(1, hop1, cfg_.latency_budget_ms);
    if (rec.hop_status[0] == TerminalStatus::kSuccess && t_rem >= -kLatencyTolMs) {
        run_hop(2, hop2, t_rem);
    }
    rec.delivered = rec.hop_status[0] == TerminalStatus::kSuccess &&
                    rec.hop_status[1] == TerminalStatus::kSuccess;
    return rec;
}

} // namespace relaysim
