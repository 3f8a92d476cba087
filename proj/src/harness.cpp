#include "relaysim/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace relaysim {

namespace fs = std::filesystem;
using nlohmann::json;

Mode parse_mode(const std::string& name) {
    if (name == "train") return Mode::kTrain;
    if (name == "eval") return Mode::kEval;
    if (name == "sweep-latency") return Mode::kSweepLatency;
    if (name == "sweep-distance") return Mode::kSweepDistance;
    if (name == "baseline") return Mode::kBaseline;
    throw std::invalid_argument("unknown mode: " + name);
}

const char* to_string(Mode m) {
    switch (m) {
    case Mode::kTrain: return "train";
    case Mode::kEval: return "eval";
    case Mode::kSweepLatency: return "sweep-latency";
    case Mode::kSweepDistance: return "sweep-distance";
    case Mode::kBaseline: return "baseline";
    }
    return "?";
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw std::invalid_argument("unknown config key '" + item.key() +
                                        "' in " + where);
        }
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

ExperimentSpec spec_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentSpec spec;
    check_keys(j,
               {"mode", "bandwidth_hz", "latency_budget_ms", "payload_bits",
                "tx_power_dbm", "distance_m", "path_loss_exp", "noise_psd_w_per_hz",
                "h_max_bits", "max_attempts_per_hop", "decode_error_override",
                "hyper", "latency_grid_ms", "distance_grid_m", "out_dir",
                "checkpoint_dir", "seed", "eval_episodes", "baseline_draws",
                "baseline_grid", "workers"},
               "config root");

    if (j.contains("mode")) spec.mode = parse_mode(j.at("mode").get<std::string>());
    maybe(j, "bandwidth_hz", spec.env.bandwidth_hz);
    maybe(j, "latency_budget_ms", spec.env.latency_budget_ms);
    maybe(j, "payload_bits", spec.env.payload_bits);
    maybe(j, "tx_power_dbm", spec.env.tx_power_dbm);
    maybe(j, "distance_m", spec.env.distance_m);
    maybe(j, "path_loss_exp", spec.env.path_loss_exp);
    maybe(j, "noise_psd_w_per_hz", spec.env.noise_psd_w_per_hz);
    maybe(j, "h_max_bits", spec.env.h_max_bits);
    maybe(j, "max_attempts_per_hop", spec.env.max_attempts_per_hop);
    if (j.contains("decode_error_override") && !j.at("decode_error_override").is_null()) {
        spec.env.decode_error_override = j.at("decode_error_override").get<double>();
    }

    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        check_keys(h,
                   {"episodes", "target_sync_period", "discount", "learning_rate",
                    "epsilon0", "epsilon_decay", "epsilon_floor", "buffer_capacity",
                    "batch_size", "hidden_dims"},
                   "hyper");
        maybe(h, "episodes", spec.hyper.episodes);
        maybe(h, "target_sync_period", spec.hyper.target_sync_period);
        maybe(h, "discount", spec.hyper.discount);
        maybe(h, "learning_rate", spec.hyper.learning_rate);
        maybe(h, "epsilon0", spec.hyper.epsilon0);
        maybe(h, "epsilon_decay", spec.hyper.epsilon_decay);
        maybe(h, "epsilon_floor", spec.hyper.epsilon_floor);
        maybe(h, "buffer_capacity", spec.hyper.buffer_capacity);
        maybe(h, "batch_size", spec.hyper.batch_size);
        maybe(h, "hidden_dims", spec.hyper.hidden_dims);
    }

    maybe(j, "latency_grid_ms", spec.latency_grid_ms);
    maybe(j, "distance_grid_m", spec.distance_grid_m);
    maybe(j, "out_dir", spec.out_dir);
    maybe(j, "checkpoint_dir", spec.checkpoint_dir);
    maybe(j, "seed", spec.seed);
    maybe(j, "eval_episodes", spec.eval_episodes);
    maybe(j, "baseline_draws", spec.baseline_draws);
    maybe(j, "baseline_grid", spec.baseline_grid);
    maybe(j, "workers", spec.workers);
    return spec;
}

ExperimentSpec load_spec_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return spec_from_json_text(text);
}

std::string spec_to_manifest_json(const ExperimentSpec& spec) {
    json j;
    j["format_version"] = 1;
    j["mode"] = to_string(spec.mode);
    j["seed"] = spec.seed;
    j["bandwidth_hz"] = spec.env.bandwidth_hz;
    j["latency_budget_ms"] = spec.env.latency_budget_ms;
    j["payload_bits"] = spec.env.payload_bits;
    j["tx_power_dbm"] = spec.env.tx_power_dbm;
    j["distance_m"] = spec.env.distance_m;
    j["path_loss_exp"] = spec.env.path_loss_exp;
    j["noise_psd_w_per_hz"] = spec.env.noise_psd_w_per_hz;
    j["h_max_bits"] = spec.env.h_max_bits;
    j["max_attempts_per_hop"] = spec.env.max_attempts_per_hop;
    if (spec.env.decode_error_override) {
        j["decode_error_override"] = *spec.env.decode_error_override;
    }
    j["hyper"] = {{"episodes", spec.hyper.episodes},
                  {"target_sync_period", spec.hyper.target_sync_period},
                  {"discount", spec.hyper.discount},
                  {"learning_rate", spec.hyper.learning_rate},
                  {"epsilon0", spec.hyper.epsilon0},
                  {"epsilon_decay", spec.hyper.epsilon_decay},
                  {"epsilon_floor", spec.hyper.epsilon_floor},
                  {"buffer_capacity", spec.hyper.buffer_capacity},
                  {"batch_size", spec.hyper.batch_size},
                  {"hidden_dims", spec.hyper.hidden_dims}};
    j["latency_grid_ms"] = spec.latency_grid_ms;
    j["distance_grid_m"] = spec.distance_grid_m;
    j["out_dir"] = spec.out_dir;
    j["checkpoint_dir"] = spec.checkpoint_dir;
    j["eval_episodes"] = spec.eval_episodes;
    j["baseline_draws"] = spec.baseline_draws;
    j["baseline_grid"] = spec.baseline_grid;
    j["workers"] = spec.workers;
    return j.dump(2) + "\n";
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_metrics_csv(const fs::path& path, const std::string& sweep_name,
                       const std::vector<MetricRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write metrics file: " + path.string());
    f << sweep_name
      << ",loss,std_err,episodes,mean_attempts_per_hop,mean_airtime_ms\n";
    for (const MetricRow& r : rows) {
        f << format_double(r.sweep_value) << ',' << format_double(r.loss) << ','
          << format_double(r.std_err) << ',' << r.episodes << ','
          << format_double(r.mean_attempts_per_hop) << ','
          << format_double(r.mean_airtime_ms) << '\n';
    }
    if (!f.flush()) throw std::runtime_error("metrics write failed: " + path.string());
}

void write_reward_trace(const fs::path& path, const std::vector<EpisodeLog>& log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write reward trace: " + path.string());
    f << "episode,reward,attempts,acted\n";
    for (std::size_t e = 0; e < log.size(); ++e) {
        f << (e + 1) << ',' << format_double(log[e].reward_sum) << ','
          << log[e].attempts << ',' << (log[e].acted ? 1 : 0) << '\n';
    }
    if (!f.flush()) throw std::runtime_error("trace write failed: " + path.string());
}

namespace {

struct ChunkStats {
    long long episodes = 0;
    long long lost = 0;
    long long attempts = 0;
    long long hops_started = 0;
    double airtime_ms = 0.0;
};

constexpr long long kChunkEpisodes = 1000;
constexpr std::uint64_t kEvalStreamBase = 1u << 20;

} // namespace

MetricRow estimate_packet_loss(const Mlp& net1, const Mlp& net2,
                               const EnvConfig& cfg, long long episodes,
                               std::uint64_t seed, int workers) {
    if (episodes < 1) throw std::invalid_argument("need at least one episode");
    const long long n_chunks = (episodes + kChunkEpisodes - 1) / kChunkEpisodes;
    std::vector<ChunkStats> chunks(static_cast<std::size_t>(n_chunks));

    int n_workers = workers > 0
                        ? workers
                        : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    n_workers = static_cast<int>(
        std::min<long long>(n_workers, n_chunks));

    std::atomic<long long> next_chunk{0};
    const auto worker = [&]() {
        const Policy p1 = greedy_policy(net1, cfg);
        const Policy p2 = greedy_policy(net2, cfg);
        for (;;) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) break;
            Environment env(cfg, derive_stream_seed(
                                     seed, kEvalStreamBase +
                                               static_cast<std::uint64_t>(c)));
            ChunkStats& st = chunks[static_cast<std::size_t>(c)];
            const long long count =
                std::min(kChunkEpisodes, episodes - c * kChunkEpisodes);
            for (long long i = 0; i < count; ++i) {
                const EpisodeRecord rec = env.run_episode(p1, p2);
                ++st.episodes;
                if (!rec.delivered) ++st.lost;
                st.attempts += rec.attempts.size();
                st.hops_started +=
                    1 + (rec.hop_status[1] != TerminalStatus::kOngoing ? 1 : 0);
                st.airtime_ms += rec.total_time_ms;
            }
        }
    };

    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    long long lost = 0, attempts = 0, hops = 0;
    double airtime = 0.0;
    for (const ChunkStats& st : chunks) { // fixed order: deterministic sums
        lost += st.lost;
        attempts += st.attempts;
        hops += st.hops_started;
        airtime += st.airtime_ms;
    }

    MetricRow row;
    row.episodes = episodes;
    row.loss = static_cast<double>(lost) / static_cast<double>(episodes);
    row.std_err =
        std::sqrt(row.loss * (1.0 - row.loss) / static_cast<double>(episodes));
    row.mean_attempts_per_hop =
        hops > 0 ? static_cast<double>(attempts) / static_cast<double>(hops) : 0.0;
    row.mean_airtime_ms = airtime / static_cast<double>(episodes);
    return row;
}

namespace {

// Stream tags for per-point seeds within a sweep.
constexpr std::uint64_t kTrainStreamBase = 10000;
constexpr std::uint64_t kEvalSeedBase = 20000;
constexpr std::uint64_t kBaselineSeedBase = 30000;

std::string point_label(const std::string& prefix, double value) {
    return prefix + "_" + format_double(value);
}

void report(const ExperimentSpec& spec, const std::string& line) {
    if (!spec.quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

TrainResult train_and_persist(const ExperimentSpec& spec, const EnvConfig& cfg,
                              std::uint64_t master_seed, const fs::path& dir) {
    fs::create_directories(dir);
    const ExperimentSpec& s = spec;
    const auto progress = [&](long long e, double eps) {
        if (!s.quiet && e % 2000 == 0) {
            std::fprintf(stderr, "  episode %lld (epsilon %.4g)\n", e, eps);
        }
    };
    TrainResult tr = train_dual(cfg, spec.hyper, master_seed, progress);

    save_checkpoint((dir / "checkpoint_agent1.bin").string(),
                    Checkpoint{tr.net1, tr.net1, AdamState(tr.net1),
                               static_cast<std::uint64_t>(spec.hyper.episodes),
                               tr.final_epsilon});
    save_checkpoint((dir / "checkpoint_agent2.bin").string(),
                    Checkpoint{tr.net2, tr.net2, AdamState(tr.net2),
                               static_cast<std::uint64_t>(spec.hyper.episodes),
                               tr.final_epsilon});
    write_reward_trace(dir / "rewards_agent1.csv", tr.log1);
    write_reward_trace(dir / "rewards_agent2.csv", tr.log2);
    return tr;
}

MetricRow sweep_point(const ExperimentSpec& spec, const EnvConfig& cfg,
                      double sweep_value, std::uint64_t index, const fs::path& dir) {
    TrainResult tr = train_and_persist(
        spec, cfg, derive_stream_seed(spec.seed, kTrainStreamBase + index), dir);
    MetricRow row = estimate_packet_loss(
        tr.net1, tr.net2, cfg, spec.eval_episodes,
        derive_stream_seed(spec.seed, kEvalSeedBase + index), spec.workers);
    row.sweep_value = sweep_value;
    return row;
}

int run_impl(const ExperimentSpec& spec_in) {
    ExperimentSpec spec = spec_in;
    if (const char* env_dir = std::getenv("RELAYSIM_OUTPUT_DIR")) {
        spec.out_dir = env_dir;
    }
    const fs::path out(spec.out_dir);
    fs::create_directories(out);

    {
        std::ofstream mf(out / "manifest.json", std::ios::trunc);
        if (!mf) {
            std::fprintf(stderr, "error: cannot write to output directory %s\n",
                         spec.out_dir.c_str());
            return 1;
        }
        mf << spec_to_manifest_json(spec);
    }

    switch (spec.mode) {
    case Mode::kTrain: {
        report(spec, "training both agents");
        train_and_persist(spec, spec.env, spec.seed, out);
        report(spec, "checkpoints and reward traces written to " + spec.out_dir);
        return 0;
    }
    case Mode::kEval: {
        const fs::path ckpt_dir(spec.checkpoint_dir.empty() ? spec.out_dir
                                                            : spec.checkpoint_dir);
        const Checkpoint c1 =
            load_checkpoint((ckpt_dir / "checkpoint_agent1.bin").string());
        const Checkpoint c2 =
            load_checkpoint((ckpt_dir / "checkpoint_agent2.bin").string());
        MetricRow row = estimate_packet_loss(
            c1.net, c2.net, spec.env, spec.eval_episodes,
            derive_stream_seed(spec.seed, kEvalSeedBase), spec.workers);
        row.sweep_value = spec.env.latency_budget_ms;
        write_metrics_csv(out / "metrics.csv", "latency_budget_ms", {row});
        report(spec, "loss " + format_double(row.loss) + " (std_err " +
                         format_double(row.std_err) + ")");
        return 0;
    }
    case Mode::kSweepLatency: {
        std::vector<MetricRow> rows;
        for (std::size_t i = 0; i < spec.latency_grid_ms.size(); ++i) {
            EnvConfig cfg = spec.env;
            cfg.latency_budget_ms = spec.latency_grid_ms[i];
            report(spec, "sweep point latency_budget_ms=" +
                             format_double(cfg.latency_budget_ms));
            rows.push_back(sweep_point(
                spec, cfg, cfg.latency_budget_ms, i,
                out / point_label("point_latency", cfg.latency_budget_ms)));
            report(spec, "  loss " + format_double(rows.back().loss));
        }
        write_metrics_csv(out / "metrics.csv", "latency_budget_ms", rows);
        return 0;
    }
    case Mode::kSweepDistance: {
        const double total = spec.env.distance_m[0] + spec.env.distance_m[1];
        std::vector<MetricRow> rows;
        for (std::size_t i = 0; i < spec.distance_grid_m.size(); ++i) {
            const double d1 = spec.distance_grid_m[i];
            if (d1 <= 0.0 || d1 >= total) {
                std::fprintf(stderr, "error: distance %g outside (0, %g)\n", d1,
                             total);
                return 1;
            }
            EnvConfig cfg = spec.env;
            cfg.distance_m = {d1, total - d1};
            report(spec, "sweep point d1=" + format_double(d1));
            rows.push_back(sweep_point(spec, cfg, d1, i,
                                       out / point_label("point_distance", d1)));
            report(spec, "  loss " + format_double(rows.back().loss));
        }
        write_metrics_csv(out / "metrics.csv", "d1_m", rows);
        return 0;
    }
    case Mode::kBaseline: {
        std::vector<MetricRow> rows;
        std::string sweep_name = "latency_budget_ms";
        const auto add_row = [&](const EnvConfig& cfg, double value,
                                 std::uint64_t index) {
            const BaselineEstimate est = baseline_loss(
                cfg, spec.baseline_draws,
                derive_stream_seed(spec.seed, kBaselineSeedBase + index));
            MetricRow row;
            row.sweep_value = value;
            row.loss = est.loss;
            row.std_err = est.std_err;
            row.episodes = est.draws;
            row.mean_attempts_per_hop = 1.0; // one-shot by definition
            row.mean_airtime_ms = est.mean_airtime_ms;
            rows.push_back(row);
        };
        if (spec.baseline_grid == "latency") {
            for (std::size_t i = 0; i < spec.latency_grid_ms.size(); ++i) {
                EnvConfig cfg = spec.env;
                cfg.latency_budget_ms = spec.latency_grid_ms[i];
                add_row(cfg, cfg.latency_budget_ms, i);
            }
        } else if (spec.baseline_grid == "distance") {
            sweep_name = "d1_m";
            const double total = spec.env.distance_m[0] + spec.env.distance_m[1];
            for (std::size_t i = 0; i < spec.distance_grid_m.size(); ++i) {
                EnvConfig cfg = spec.env;
                cfg.distance_m = {spec.distance_grid_m[i],
                                  total - spec.distance_grid_m[i]};
                add_row(cfg, spec.distance_grid_m[i], i);
            }
        } else if (spec.baseline_grid == "none") {
            add_row(spec.env, spec.env.latency_budget_ms, 0);
        } else {
            std::fprintf(stderr, "error: unknown baseline grid '%s'\n",
                         spec.baseline_grid.c_str());
            return 1;
        }
        write_metrics_csv(out / "metrics.csv", sweep_name, rows);
        return 0;
    }
    }
    return 1;
}

} // namespace

int run(const ExperimentSpec& spec) {
    try {
        return run_impl(spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace relaysim
