#pragma once

#include <cstdint>
#include <vector>

#include "relaysim/env.hpp"

namespace relaysim {

// Single-attempt two-hop allocation under global CSI: no retransmissions, a
// decoding error on either hop loses the packet. Symbols are allocated at
// subframe granularity; the effective rate of hop i is payload/m_i.
struct Allocation {
    bool feasible = false;
    long long m1 = 0; // symbols allocated to hop 1
    long long m2 = 0;
    double e2e_error = 1.0;
    int mu1 = 0, n_sym1 = 0;
    long long n_sf1 = 0;
    int mu2 = 0, n_sym2 = 0;
    long long n_sf2 = 0;
    double airtime_ms = 0.0; // both TTIs plus one inter-hop forwarding symbol
};

// eps1 + (1 - eps1) * eps2 at the given instantaneous SNRs and blocklengths.
double oneshot_e2e_error(double snr1, double snr2, long long m1, long long m2,
                         int payload_bits);

class OneShotOptimizer {
public:
    explicit OneShotOptimizer(const EnvConfig& cfg);

    // Exhaustive search over hop-wise (numerology, mini-slot) pairs and
    // subframe splits within the latency budget. Ties broken by smaller
    // m1+m2, then by enumeration order. Infeasible budgets return
    // feasible=false with e2e_error 1.
    Allocation optimize(double snr1, double snr2) const;

    // Minimum achievable end-to-end error, evaluated on the Pareto frontier
    // of (m1, m2); equals optimize(...).e2e_error.
    double min_e2e_error(double snr1, double snr2) const;

    std::size_t candidate_count() const { return candidates_.size(); }
    std::size_t frontier_size() const { return frontier_.size(); }

    struct Candidate {
        long long m1, m2;
        double airtime_ms;
        int mu1, n_sym1;
        long long n_sf1;
        int mu2, n_sym2;
        long long n_sf2;
    };
    const std::vector<Candidate>& candidates() const { return candidates_; }

    // Frontier candidate with the smallest e2e error (nullptr when empty).
    const Candidate* best_frontier_candidate(double snr1, double snr2) const;

private:
    int payload_bits_;
    std::vector<Candidate> candidates_;
    std::vector<Candidate> frontier_; // Pareto-maximal (m1, m2)
};

struct BaselineEstimate {
    double loss = 1.0;
    double std_err = 0.0; // sample standard error of the analytic mean
    long long draws = 0;
    double mean_airtime_ms = 0.0;
};

// Monte Carlo over channel pairs with analytic per-draw loss accumulation:
// each draw contributes the optimal allocation's e2e error rather than a
// Bernoulli outcome.
BaselineEstimate baseline_loss(const EnvConfig& cfg, long long n_draws,
                               std::uint64_t seed);

} // namespace relaysim
