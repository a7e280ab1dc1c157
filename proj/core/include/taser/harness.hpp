#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taser/selection.hpp"
#include "taser/swarm.hpp"

namespace taser {

enum class DatasetKind { blobs, csv };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::blobs;
    std::size_t train_samples = 2000;
    std::size_t test_samples = 600;
    std::size_t input_dim = 64;
    std::size_t num_classes = 3;
    double cluster_std = 0.5;
    std::string path;            // csv source file
    double test_fraction = 0.25; // csv split
    double feature_scale = 1.0;  // multiplies csv features at load (labels untouched)
};

// "none" keeps the malicious role labels for the heatmap grouping but every
// node behaves honestly, which makes it the control condition.
enum class ExperimentAttack { none, traditional, mimicry, concealment };

struct ExperimentConfig {
    std::uint64_t seed = 1;
    DatasetConfig dataset;
    std::size_t hidden_dim = 32;
    TopologySpec topology{TopologyKind::erdos_renyi, 4, 1.0};
    std::size_t nodes = 20;
    double malicious_fraction = 0.2;
    ExperimentAttack attack_kind = ExperimentAttack::traditional;
    AttackConfig attack;  // trigger and per-kind knobs; .kind follows attack_kind
    DefenseConfig defense;

    // Per-round coefficient budget for the taser defense. The effective k is
    // the smallest of: an explicit k, round(k_ratio * d), the channel-capacity
    // bound, the security cap k_adv, and d itself. Unset limits default to d.
    bool has_k = false;
    std::size_t k = 0;
    bool has_k_ratio = false;
    double k_ratio = 0.1;
    bool has_channel = false;
    ChannelParams channel;
    bool has_k_adv = false;
    std::size_t k_adv = 0;

    std::size_t rounds = 100;
    std::size_t num_batches = 4;
    std::size_t batch_size = 32;
    double lr = 0.05;
    PartitionScheme partition;
    std::size_t active_per_round = 0;  // 0 = all nodes participate every round
    std::string out_dir;               // empty = keep results in memory only
};

struct RoundMetrics {
    std::uint64_t round = 0;
    double mta_mean = 0.0;
    double mta_min = 0.0;
    double asr_mean = 0.0;
    double asr_max = 0.0;
    double bytes_per_node = 0.0;
};

struct ExperimentResult {
    std::vector<RoundMetrics> metrics;
    // Selection-difference heatmap, rounds x flat_dim; empty when either role
    // group is empty for the whole run.
    std::vector<std::vector<double>> heatmap;
    // Per round: mean over malicious nodes of |own top set ∩ benign consensus
    // top set| / |consensus set|; NaN when no malicious node was active.
    std::vector<double> attacker_overlap;
    std::vector<std::vector<std::uint64_t>> bytes;  // rounds x nodes
    std::vector<std::uint32_t> malicious_nodes;
    std::size_t flat_dim = 0;
    std::size_t k = 0;          // resolved coefficient budget (taser)
    std::size_t heatmap_k = 0;  // top-score set size used for the heatmap
    double final_mta = 0.0;     // mean over the last 10 rounds
    double final_asr = 0.0;
};

// Fraction of triggered test samples, restricted to true label != target, that
// the model classifies as the trigger's target label.
double attack_success_rate(const ModelParams& model, const LabeledDataset& test_data,
                           const TriggerSpec& trigger);

// One heatmap row: per frequency, the share of malicious nodes whose top set
// contains it minus the share of benign nodes. Nodes with an empty set sat out
// the round and are excluded from both shares.
std::vector<double> heatmap_row(const std::vector<std::vector<std::uint32_t>>& top_sets,
                                const std::vector<bool>& malicious, std::size_t d);

// Runs the full experiment; writes metrics.csv, heatmap.csv and
// config.resolved.json into out_dir when one is configured.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct AblationRow {
    double k_ratio = 0.0;
    double final_mta = 0.0;
    double final_asr = 0.0;
};

// One taser run per ratio; rows come back sorted by ratio. With an out_dir,
// each run writes into a ratio-named subdirectory next to an ablation.csv.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      std::vector<double> k_ratios);

// Standard desk-scale setup: 20 nodes, complete graph, blobs, 20% malicious,
// traditional scaled attack, taser defense at a 10% coefficient budget.
ExperimentConfig default_config();

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string resolved_config_json(const ExperimentConfig& config,
                                 const ExperimentResult& result);

}  // namespace taser
