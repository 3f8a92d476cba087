#include "relaysim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace relaysim {

bool valid_numerology(int mu) { return mu >= 0 && mu < kNumNumerologies; }

bool valid_mini_slot(int n_sym) {
    return std::find(kMiniSlotSymbols.begin(), kMiniSlotSymbols.end(), n_sym) !=
           kMiniSlotSymbols.end();
}

const std::array<McsEntry, kNumMcs>& mcs_table() {
    static const std::array<McsEntry, kNumMcs> table{{
        {1, 30, 2},
        {2, 50, 2},
        {3, 78, 2},
        {4, 120, 2},
        {5, 193, 2},
        {6, 308, 2},
        {7, 449, 2},
        {8, 602, 2},
        {9, 378, 4},
        {10, 490, 4},
        {11, 616, 4},
        {12, 466, 6},
        {13, 567, 6},
        {14, 666, 6},
        {15, 772, 6},
    }};
    return table;
}

const McsEntry& mcs_entry(int index) {
    if (index < 1 || index > kNumMcs) {
        throw std::out_of_range("MCS index out of range: " + std::to_string(index));
    }
    return mcs_table()[static_cast<std::size_t>(index - 1)];
}

bool valid_action(const ResourceAction& a) {
    return valid_numerology(a.mu) && valid_mini_slot(a.n_sym) && a.mcs >= 1 &&
           a.mcs <= kNumMcs;
}

int subcarrier_count(int mu, double bandwidth_hz) {
    if (!valid_numerology(mu)) {
        throw std::invalid_argument("numerology out of range");
    }
    if (bandwidth_hz <= 0.0) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    const double spacing_hz = (1 << mu) * 15000.0;
    return static_cast<int>(std::floor(bandwidth_hz / spacing_hz));
}

double subframe_duration_ms(int mu, int n_sym) {
    if (!valid_numerology(mu) || !valid_mini_slot(n_sym)) {
        throw std::invalid_argument("invalid numerology or mini-slot size");
    }
    return static_cast<double>(n_sym) / (14.0 * (1 << mu));
}

long long symbols_needed(int payload_bits, const McsEntry& mcs) {
    if (payload_bits < 1) {
        throw std::invalid_argument("payload must be at least one bit");
    }
    const long long num = static_cast<long long>(payload_bits) * 1024;
    const long long den = static_cast<long long>(mcs.rate_x1024) * mcs.mod_order;
    return (num + den - 1) / den;
}

long long subframes_needed(long long symbols, int n_sc, int n_sym) {
    if (symbols < 1 || n_sc < 1) {
        throw std::invalid_argument("symbols and subcarriers must be positive");
    }
    const long long per_subframe = static_cast<long long>(n_sc) * n_sym;
    return (symbols + per_subframe - 1) / per_subframe;
}

double tti_ms(const ResourceAction& a, int payload_bits, double bandwidth_hz) {
    if (!valid_action(a)) {
        throw std::invalid_argument("invalid resource action");
    }
    const int n_sc = subcarrier_count(a.mu, bandwidth_hz);
    if (n_sc == 0) {
        throw std::invalid_argument("numerology infeasible for bandwidth");
    }
    const long long m = symbols_needed(payload_bits, mcs_entry(a.mcs));
    const long long n_sf = subframes_needed(m, n_sc, a.n_sym);
    return static_cast<double>(n_sf) * subframe_duration_ms(a.mu, a.n_sym);
}

double arq_duration_ms(int mu) {
    if (!valid_numerology(mu)) {
        throw std::invalid_argument("numerology out of range");
    }
    return 1.0 / (14.0 * (1 << mu));
}

double fbl_error_prob(double snr, long long blocklength, int payload_bits) {
    if (!(snr > 0.0) || !std::isfinite(snr)) {
        throw std::invalid_argument("SNR must be positive and finite");
    }
    if (blocklength < 1 || payload_bits < 1) {
        throw std::invalid_argument("blocklength and payload must be positive");
    }
    const double m = static_cast<double>(blocklength);
    // V = 1 - (1+g)^-2, written without cancellation for small g.
    const double dispersion = snr * (2.0 + snr) / ((1.0 + snr) * (1.0 + snr));
    const double capacity = std::log1p(snr) / M_LN2;
    const double gap = capacity - static_cast<double>(payload_bits) / m;
    const double arg = M_LN2 * std::sqrt(m / dispersion) * gap;
    const double q = 0.5 * std::erfc(arg / M_SQRT2);
    return std::clamp(q, 0.0, 1.0);
}

double LinkBudget::avg_snr() const {
    return tx_power_w * std::pow(distance_m, -path_loss_exp) / noise_power_w;
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double sample_instant_snr(const LinkBudget& budget, Rng& rng) {
    return rng.exponential(budget.avg_snr());
}

} // namespace relaysim
