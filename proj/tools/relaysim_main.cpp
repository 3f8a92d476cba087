#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "relaysim/harness.hpp"

using relaysim::ExperimentSpec;
using relaysim::Mode;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file");
    cmd->add_option("-o,--out", o.out_dir, "output directory");
    cmd->add_option("-s,--seed", o.seed, "master RNG seed")
        ->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("-w,--workers", o.workers,
                    "evaluation worker threads (0 = all cores)");
    cmd->add_flag("-q,--quiet", o.quiet, "suppress progress output");
}

ExperimentSpec make_spec(const CommonOpts& o, Mode mode) {
    ExperimentSpec spec;
    if (!o.config_path.empty()) {
        spec = relaysim::load_spec_file(o.config_path);
    }
    spec.mode = mode;
    if (!o.out_dir.empty()) spec.out_dir = o.out_dir;
    if (o.seed_set) spec.seed = o.seed;
    if (o.workers >= 0) spec.workers = o.workers;
    spec.quiet = o.quiet;
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-hop relay link-adaptation simulator and trainer"};
    app.require_subcommand(1);

    CommonOpts train_o, eval_o, slat_o, sdist_o, base_o;
    long long train_episodes = -1, eval_episodes = -1, baseline_draws = -1;
    double learning_rate = -1.0;
    std::string checkpoint_dir, baseline_grid;

    CLI::App* train = app.add_subcommand("train", "train both agents");
    add_common(train, train_o);
    train->add_option("-e,--episodes", train_episodes, "training episodes");
    train->add_option("--learning-rate", learning_rate, "Adam learning rate");

    CLI::App* eval = app.add_subcommand("eval", "evaluate trained policies");
    add_common(eval, eval_o);
    eval->add_option("-e,--episodes", eval_episodes, "evaluation episodes");
    eval->add_option("--checkpoint-dir", checkpoint_dir,
                     "directory holding checkpoint_agent{1,2}.bin");

    CLI::App* slat = app.add_subcommand(
        "sweep-latency", "train and evaluate across latency budgets");
    add_common(slat, slat_o);
    slat->add_option("--train-episodes", train_episodes, "episodes per point");
    slat->add_option("--eval-episodes", eval_episodes, "episodes per point");
    slat->add_option("--learning-rate", learning_rate, "Adam learning rate");

    CLI::App* sdist = app.add_subcommand(
        "sweep-distance", "train and evaluate across relay placements");
    add_common(sdist, sdist_o);
    sdist->add_option("--train-episodes", train_episodes, "episodes per point");
    sdist->add_option("--eval-episodes", eval_episodes, "episodes per point");
    sdist->add_option("--learning-rate", learning_rate, "Adam learning rate");

    CLI::App* base = app.add_subcommand(
        "baseline", "one-shot global-CSI lower bound");
    add_common(base, base_o);
    base->add_option("-n,--draws", baseline_draws, "channel draws");
    base->add_option("--grid", baseline_grid, "none | latency | distance");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentSpec spec;
        if (train->parsed()) {
            spec = make_spec(train_o, Mode::kTrain);
        } else if (eval->parsed()) {
            spec = make_spec(eval_o, Mode::kEval);
            if (!checkpoint_dir.empty()) spec.checkpoint_dir = checkpoint_dir;
        } else if (slat->parsed()) {
            spec = make_spec(slat_o, Mode::kSweepLatency);
        } else if (sdist->parsed()) {
            spec = make_spec(sdist_o, Mode::kSweepDistance);
        } else {
            spec = make_spec(base_o, Mode::kBaseline);
            if (baseline_draws > 0) spec.baseline_draws = baseline_draws;
            if (!baseline_grid.empty()) spec.baseline_grid = baseline_grid;
        }
        if (train_episodes > 0) spec.hyper.episodes = train_episodes;
        if (eval_episodes > 0) spec.eval_episodes = eval_episodes;
        if (learning_rate > 0.0) spec.hyper.learning_rate = learning_rate;
        return relaysim::run(spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
