// Command-line front end for the swarm learning simulator.
//
//   taser_sim run      [--config FILE] [--seed N] [--out DIR]
//   taser_sim ablate   [--config FILE] --k-ratios 0.05,0.1,... [--out DIR]
//   taser_sim selftest
//
// Without --config both run and ablate start from the built-in standard
// setup (20 nodes, complete graph, synthetic blobs, 20% attackers).

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <exception>
#include <random>
#include <string>
#include <vector>

#include "taser/harness.hpp"
#include "taser/selection.hpp"
#include "taser/spectral.hpp"

namespace {

taser::ExperimentConfig base_config(const std::string& config_path) {
    if (config_path.empty()) {
        return taser::default_config();
    }
    return taser::load_config_file(config_path);
}

void print_summary(const taser::ExperimentConfig& cfg, const taser::ExperimentResult& result) {
    std::printf("nodes            %zu (%zu malicious)\n", cfg.nodes,
                result.malicious_nodes.size());
    std::printf("model dimension  %zu\n", result.flat_dim);
    if (result.k > 0) {
        std::printf("coefficient k    %zu per round\n", result.k);
    }
    std::printf("rounds           %zu\n", result.metrics.size());
    std::printf("final accuracy   %.4f\n", result.final_mta);
    std::printf("final attack     %.4f\n", result.final_asr);
    if (!result.metrics.empty()) {
        std::printf("bytes/node/round %.1f (last round)\n",
                    result.metrics.back().bytes_per_node);
    }
    if (!cfg.out_dir.empty()) {
        std::printf("wrote metrics.csv, heatmap.csv, config.resolved.json to %s\n",
                    cfg.out_dir.c_str());
    }
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::string& out_dir) {
    taser::ExperimentConfig cfg = base_config(config_path);
    if (has_seed) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const taser::ExperimentResult result = taser::run_experiment(cfg);
    print_summary(cfg, result);
    return 0;
}

int cmd_ablate(const std::string& config_path, std::uint64_t seed, bool has_seed,
               const std::vector<double>& k_ratios, const std::string& out_dir) {
    taser::ExperimentConfig cfg = base_config(config_path);
    if (has_seed) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto rows = taser::run_ablation(cfg, k_ratios);
    std::printf("%-10s %-12s %-12s\n", "k_ratio", "final_mta", "final_asr");
    for (const auto& row : rows) {
        std::printf("%-10.4f %-12.4f %-12.4f\n", row.k_ratio, row.final_mta, row.final_asr);
    }
    if (!cfg.out_dir.empty()) {
        std::printf("wrote ablation.csv and per-ratio runs to %s\n", cfg.out_dir.c_str());
    }
    return 0;
}

// Fast deterministic sanity checks of the numeric core. Exits nonzero with a
// message on the first failure; prints one line per group otherwise.
int cmd_selftest() {
    int failures = 0;
    const auto expect = [&failures](bool ok, const char* what) {
        if (!ok) {
            std::fprintf(stderr, "selftest failure: %s\n", what);
            ++failures;
        }
    };

    std::mt19937_64 engine(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t d : {std::size_t{64}, std::size_t{1023}}) {
        taser::GradientVector signal;
        signal.values.resize(d);
        for (double& v : signal.values) v = gauss(engine);
        const taser::Spectrum spec = taser::dct_forward(signal);
        const taser::GradientVector back = taser::dct_inverse(spec);
        double worst = 0.0;
        double energy_in = 0.0;
        double energy_out = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            worst = std::max(worst, std::abs(back.values[i] - signal.values[i]));
            energy_in += signal.values[i] * signal.values[i];
            energy_out += spec.coeffs[i] * spec.coeffs[i];
        }
        expect(worst <= 1e-9, "transform roundtrip drifted");
        expect(std::abs(energy_in - energy_out) <= 1e-9 * std::max(1.0, energy_in),
               "transform does not preserve energy");
    }
    std::printf("transform: ok\n");

    expect(taser::shannon_rate(1e6, 15.0) == 4e6, "channel rate formula");
    expect(taser::k_bandwidth({1e6, 15.0, 0.001, 32}) == 125, "coefficient budget");
    expect(taser::effective_k(125, 500, 10000) == 125, "budget clamping");
    std::printf("channel: ok\n");

    taser::ExperimentConfig cfg = taser::default_config();
    cfg.nodes = 5;
    cfg.rounds = 2;
    cfg.dataset.train_samples = 200;
    cfg.dataset.test_samples = 60;
    cfg.dataset.input_dim = 8;
    cfg.hidden_dim = 6;
    cfg.attack.trigger.feature_indices = {0, 4};
    cfg.attack.trigger.trigger_values = {3.0, 3.0};
    const taser::ExperimentResult a = taser::run_experiment(cfg);
    const taser::ExperimentResult b = taser::run_experiment(cfg);
    expect(a.metrics.size() == 2 && b.metrics.size() == 2, "round count");
    expect(a.final_mta == b.final_mta && a.final_asr == b.final_asr,
           "experiment rerun is not bit-stable");
    std::printf("experiment: ok\n");

    if (failures == 0) std::printf("selftest passed\n");
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized swarm learning simulator with spectral gradient filtering"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::vector<double> k_ratios;

    CLI::App* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("--config", config_path, "Experiment config JSON")
        ->check(CLI::ExistingFile);
    CLI::Option* run_seed = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Directory for metrics.csv and friends");

    CLI::App* ablate = app.add_subcommand("ablate", "Sweep the coefficient budget ratio");
    ablate->add_option("--config", config_path, "Experiment config JSON")
        ->check(CLI::ExistingFile);
    CLI::Option* ablate_seed = ablate->add_option("--seed", seed, "Override the config seed");
    ablate->add_option("--k-ratios", k_ratios, "Budget ratios to sweep")
        ->required()
        ->delimiter(',');
    ablate->add_option("--out", out_dir, "Directory for ablation.csv and per-ratio runs");

    app.add_subcommand("selftest", "Quick deterministic checks of the numeric core");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, seed, run_seed->count() > 0, out_dir);
        }
        if (ablate->parsed()) {
            return cmd_ablate(config_path, seed, ablate_seed->count() > 0, k_ratios, out_dir);
        }
        return cmd_selftest();
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
