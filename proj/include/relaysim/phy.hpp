#pragma once

#include <array>
#include <cstdint>

#include "relaysim/rng.hpp"

namespace relaysim {

// 5G NR resource geometry: numerology mu scales the subcarrier spacing by
// 2^mu x 15 kHz, a mini-slot carries 2/4/7/14 OFDM symbols, and a subframe
// of N_sym symbols at numerology mu lasts N_sym / (14 * 2^mu) ms.

inline constexpr int kNumNumerologies = 5; // mu in {0..4}
inline constexpr std::array<int, 4> kMiniSlotSymbols{2, 4, 7, 14};
inline constexpr int kNumMcs = 15;

// Absolute slack for comparisons against the latency budget, absorbs
// accumulated rounding in millisecond sums.
inline constexpr double kLatencyTolMs = 1e-9;

bool valid_numerology(int mu);
bool valid_mini_slot(int n_sym);

struct McsEntry {
    int index;      // table index, 1-based
    int rate_x1024; // code rate numerator over 1024
    int mod_order;  // bits per modulation symbol

    double code_rate() const { return rate_x1024 / 1024.0; }
    double spectral_efficiency() const { return code_rate() * mod_order; }
};

// The 15-entry URLLC MCS table (QPSK 1-8, 16QAM 9-11, 64QAM 12-15).
const std::array<McsEntry, kNumMcs>& mcs_table();
const McsEntry& mcs_entry(int index); // 1..15

// One transceiver configuration: the atomic decision of an agent.
struct ResourceAction {
    int mu;
    int n_sym;
    int mcs;

    bool operator==(const ResourceAction&) const = default;
};

bool valid_action(const ResourceAction& a);

// Subcarriers that fit the bandwidth at numerology mu. A result of 0 means
// the numerology is infeasible for this bandwidth and must be excluded from
// the action set.
int subcarrier_count(int mu, double bandwidth_hz);

double subframe_duration_ms(int mu, int n_sym);

// Symbols needed to carry the payload at the MCS rate, exact in integer
// arithmetic: ceil(H * 1024 / (rate_x1024 * mod_order)).
long long symbols_needed(int payload_bits, const McsEntry& mcs);

long long subframes_needed(long long symbols, int n_sc, int n_sym);

// Airtime of one transmission attempt. Throws std::invalid_argument when the
// numerology is infeasible for the bandwidth.
double tti_ms(const ResourceAction& a, int payload_bits, double bandwidth_hz);

// Feedback cost: one OFDM symbol at the given numerology.
double arq_duration_ms(int mu);

// Finite-blocklength decoding error probability
//   Q(ln2 * sqrt(m/V) * (log2(1+snr) - H/m)),  V = 1 - (1+snr)^-2,
// with Q computed as 0.5*erfc(x/sqrt(2)) in double precision and the result
// clamped to [0,1]. Throws std::invalid_argument for snr <= 0.
double fbl_error_prob(double snr, long long blocklength, int payload_bits);

struct LinkBudget {
    double tx_power_w;
    double distance_m;
    double path_loss_exp;
    double noise_power_w;

    double avg_snr() const;
};

double dbm_to_watt(double dbm);

// One draw of the instantaneous SNR: exponential with mean avg_snr
// (Rayleigh-faded amplitude with unit-mean power).
double sample_instant_snr(const LinkBudget& budget, Rng& rng);

} // namespace relaysim
