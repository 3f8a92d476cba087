#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "relaysim/dqn.hpp"
#include "relaysim/oneshot.hpp"

namespace relaysim {

enum class Mode { kTrain, kEval, kSweepLatency, kSweepDistance, kBaseline };

Mode parse_mode(const std::string& name);
const char* to_string(Mode m);

struct ExperimentSpec {
    Mode mode = Mode::kTrain;
    EnvConfig env{};
    Hyperparams hyper{};
    std::vector<double> latency_grid_ms{1, 2, 3, 4, 5};
    std::vector<double> distance_grid_m{200, 300, 400, 500, 600, 700, 800};
    std::string out_dir = "out";
    std::string checkpoint_dir; // eval input; defaults to out_dir
    std::uint64_t seed = 1;
    long long eval_episodes = 100000;
    long long baseline_draws = 100000;
    std::string baseline_grid = "none"; // none | latency | distance
    int workers = 0;                    // 0 = hardware concurrency
    bool quiet = false;
};

// JSON config ingestion; unknown keys are rejected. Transmit powers enter in
// dBm here and are converted to watts inside the link budget.
ExperimentSpec spec_from_json_text(const std::string& text);
ExperimentSpec load_spec_file(const std::string& path);
std::string spec_to_manifest_json(const ExperimentSpec& spec);

struct MetricRow {
    double sweep_value = 0.0;
    double loss = 0.0;
    double std_err = 0.0;
    long long episodes = 0;
    double mean_attempts_per_hop = 0.0;
    double mean_airtime_ms = 0.0;
};

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

void write_metrics_csv(const std::filesystem::path& path,
                       const std::string& sweep_name,
                       const std::vector<MetricRow>& rows);
void write_reward_trace(const std::filesystem::path& path,
                        const std::vector<EpisodeLog>& log);

// Greedy-policy packet loss over independent channel draws. Episodes are
// split into fixed-size chunks with per-chunk RNG streams, so the result is
// byte-identical for any worker count.
MetricRow estimate_packet_loss(const Mlp& net1, const Mlp& net2,
                               const EnvConfig& cfg, long long episodes,
                               std::uint64_t seed, int workers);

// Orchestrates one experiment; writes metric files, reward traces,
// checkpoints and a manifest under the output directory. Returns a process
// exit status. The RELAYSIM_OUTPUT_DIR environment variable overrides the
// output directory.
int run(const ExperimentSpec& spec);

} // namespace relaysim
