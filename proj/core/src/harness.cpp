#include "taser/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "taser/random.hpp"

namespace taser {

using nlohmann::json;

double attack_success_rate(const ModelParams& model, const LabeledDataset& test_data,
                           const TriggerSpec& trigger) {
    validate(test_data);
    validate(trigger, test_data.input_dim);
    if (trigger.target_label < 0 ||
        static_cast<std::size_t>(trigger.target_label) >= model.dims.num_classes) {
        throw std::invalid_argument("attack_success_rate: target label outside model classes");
    }
    std::vector<double> buffer(test_data.input_dim);
    std::size_t eligible = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_data.size(); ++i) {
        if (test_data.labels[i] == trigger.target_label) {
            continue;
        }
        ++eligible;
        const double* row = test_data.sample(i);
        std::copy(row, row + test_data.input_dim, buffer.begin());
        apply_trigger_inplace(buffer.data(), test_data.input_dim, trigger);
        if (predict(model, buffer.data()) == trigger.target_label) {
            ++hits;
        }
    }
    if (eligible == 0) {
        throw std::invalid_argument("attack_success_rate: no sample with a non-target label");
    }
    return static_cast<double>(hits) / static_cast<double>(eligible);
}

std::vector<double> heatmap_row(const std::vector<std::vector<std::uint32_t>>& top_sets,
                                const std::vector<bool>& malicious, std::size_t d) {
    if (top_sets.size() != malicious.size()) {
        throw std::invalid_argument("heatmap_row: set/role count mismatch");
    }
    std::size_t n_mal = 0;
    std::size_t n_ben = 0;
    for (std::size_t i = 0; i < top_sets.size(); ++i) {
        if (top_sets[i].empty()) {
            continue;
        }
        (malicious[i] ? n_mal : n_ben) += 1;
    }
    if (n_mal == 0 || n_ben == 0) {
        throw std::invalid_argument("heatmap_row: need both a malicious and a benign group");
    }
    std::vector<double> row(d, 0.0);
    for (std::size_t i = 0; i < top_sets.size(); ++i) {
        if (top_sets[i].empty()) {
            continue;
        }
        const double w = malicious[i] ? 1.0 / static_cast<double>(n_mal)
                                      : -1.0 / static_cast<double>(n_ben);
        for (std::uint32_t f : top_sets[i]) {
            if (f >= d) {
                throw std::invalid_argument("heatmap_row: frequency index out of range");
            }
            row[f] += w;
        }
    }
    return row;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.attack.kind = AttackKind::traditional;
    cfg.attack.trigger.feature_indices = {0, 16, 32, 48};
    cfg.attack.trigger.trigger_values = {3.0, 3.0, 3.0, 3.0};
    cfg.attack.trigger.target_label = 0;
    cfg.defense.kind = DefenseKind::taser;
    cfg.defense.alpha = 0.5;
    cfg.has_k_ratio = true;
    cfg.k_ratio = 0.1;
    return cfg;
}

namespace {

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

[[noreturn]] void bad_config(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return it.key() == a; });
        if (!known) {
            bad_config("unknown key '" + it.key() + "' in " + where);
        }
    }
}

// Effective per-round coefficient budget: the tightest of the configured
// limits, each defaulting to the full dimension when unset.
std::size_t resolve_k(const ExperimentConfig& cfg, std::size_t d) {
    std::size_t k_bw = d;
    if (cfg.has_k) {
        if (cfg.k < 1) {
            bad_config("explicit k must be at least 1");
        }
        k_bw = std::min(k_bw, cfg.k);
    }
    if (cfg.has_k_ratio) {
        if (!(cfg.k_ratio > 0.0) || !(cfg.k_ratio <= 1.0)) {
            bad_config("k_ratio must be in (0, 1]");
        }
        const long long rounded = std::llround(cfg.k_ratio * static_cast<double>(d));
        const std::size_t from_ratio = static_cast<std::size_t>(
            std::clamp<long long>(rounded, 1, static_cast<long long>(d)));
        k_bw = std::min(k_bw, from_ratio);
    }
    if (cfg.has_channel) {
        k_bw = std::min(k_bw, k_bandwidth(cfg.channel));
    }
    const std::size_t k_adv = cfg.has_k_adv ? cfg.k_adv : d;
    return effective_k(k_bw, k_adv, d);
}

std::size_t count_from_fraction(double fraction, std::size_t n) {
    return static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(n) + 1e-9));
}

// k largest counts, ties toward the lower frequency index; sorted ascending.
std::vector<std::uint32_t> top_by_count(const std::vector<std::uint32_t>& counts,
                                        std::size_t k) {
    std::vector<std::uint32_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), [&](std::uint32_t a, std::uint32_t b) {
                         if (counts[a] != counts[b]) {
                             return counts[a] > counts[b];
                         }
                         return a < b;
                     });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

std::size_t sorted_intersection_size(const std::vector<std::uint32_t>& a,
                                     const std::vector<std::uint32_t>& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t hits = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++hits;
            ++i;
            ++j;
        }
    }
    return hits;
}

struct BuiltData {
    LabeledDataset train;
    LabeledDataset test;
};

BuiltData build_datasets(const ExperimentConfig& cfg) {
    BuiltData out;
    const std::uint64_t data_seed = mix_seed(cfg.seed, stream::kData);
    if (cfg.dataset.kind == DatasetKind::blobs) {
        if (cfg.dataset.train_samples < 1 || cfg.dataset.test_samples < 1) {
            bad_config("blobs need at least one train and one test sample");
        }
        const LabeledDataset all = make_blobs(
            cfg.dataset.train_samples + cfg.dataset.test_samples, cfg.dataset.input_dim,
            cfg.dataset.num_classes, cfg.dataset.cluster_std, data_seed);
        std::vector<std::size_t> idx(all.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        out.train = subset(all, {idx.begin(),
                                 idx.begin() + static_cast<std::ptrdiff_t>(
                                                   cfg.dataset.train_samples)});
        out.test = subset(all, {idx.begin() + static_cast<std::ptrdiff_t>(
                                                  cfg.dataset.train_samples),
                                idx.end()});
        return out;
    }
    if (cfg.dataset.path.empty()) {
        bad_config("csv dataset needs a path");
    }
    if (!(cfg.dataset.test_fraction > 0.0) || !(cfg.dataset.test_fraction < 1.0)) {
        bad_config("test_fraction must be in (0, 1)");
    }
    if (!std::isfinite(cfg.dataset.feature_scale) || !(cfg.dataset.feature_scale > 0.0)) {
        bad_config("feature_scale must be positive");
    }
    LabeledDataset all = load_dataset_csv(cfg.dataset.path);
    if (cfg.dataset.feature_scale != 1.0) {
        for (double& v : all.features) v *= cfg.dataset.feature_scale;
    }
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto engine = make_engine(data_seed);
    std::shuffle(order.begin(), order.end(), engine);
    std::size_t test_count = count_from_fraction(cfg.dataset.test_fraction, all.size());
    test_count = std::clamp<std::size_t>(test_count, 1, all.size() - 1);
    out.train = subset(all, {order.begin(),
                             order.begin() + static_cast<std::ptrdiff_t>(all.size() -
                                                                         test_count)});
    out.test = subset(all, {order.begin() + static_cast<std::ptrdiff_t>(all.size() -
                                                                        test_count),
                            order.end()});
    return out;
}

void validate_experiment(const ExperimentConfig& cfg) {
    if (cfg.nodes < 2) {
        bad_config("need at least two nodes");
    }
    if (!(cfg.malicious_fraction >= 0.0) || !(cfg.malicious_fraction < 1.0)) {
        bad_config("malicious_fraction must be in [0, 1)");
    }
    if (cfg.num_batches < 1 || cfg.batch_size < 1) {
        bad_config("num_batches and batch_size must be at least 1");
    }
    if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) {
        bad_config("lr must be positive");
    }
    if (cfg.active_per_round > cfg.nodes) {
        bad_config("active_per_round exceeds node count");
    }
    if (cfg.hidden_dim < 1) {
        bad_config("hidden_dim must be at least 1");
    }
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    std::ofstream metrics(fs::path(cfg.out_dir) / "metrics.csv");
    if (!metrics) {
        throw std::runtime_error("run_experiment: cannot write to " + cfg.out_dir);
    }
    metrics << "round,mta_mean,mta_min,asr_mean,asr_max,bytes_per_node\n";
    for (const RoundMetrics& rm : result.metrics) {
        metrics << rm.round << ',' << fmt9(rm.mta_mean) << ',' << fmt9(rm.mta_min) << ','
                << fmt9(rm.asr_mean) << ',' << fmt9(rm.asr_max) << ','
                << fmt9(rm.bytes_per_node) << '\n';
    }

    std::ofstream heatmap(fs::path(cfg.out_dir) / "heatmap.csv");
    for (const auto& row : result.heatmap) {
        for (std::size_t f = 0; f < row.size(); ++f) {
            if (f > 0) {
                heatmap << ',';
            }
            heatmap << fmt9(row[f]);
        }
        heatmap << '\n';
    }

    std::ofstream resolved(fs::path(cfg.out_dir) / "config.resolved.json");
    resolved << resolved_config_json(cfg, result) << '\n';
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    BuiltData data = build_datasets(cfg);
    if (data.train.size() < cfg.nodes) {
        bad_config("fewer training samples than nodes");
    }

    const ModelDims dims{data.train.input_dim, cfg.hidden_dim, data.train.num_classes};
    validate(dims);
    const std::size_t d = dims.flat_dim();

    validate(cfg.attack.trigger, data.train.input_dim);
    if (static_cast<std::size_t>(cfg.attack.trigger.target_label) >= dims.num_classes) {
        bad_config("trigger target label outside the class range");
    }

    // Triggered copies of every non-target test sample, labels untouched.
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        if (data.test.labels[i] != cfg.attack.trigger.target_label) {
            eligible.push_back(i);
        }
    }
    if (eligible.empty()) {
        bad_config("no test sample with a non-target label");
    }
    LabeledDataset triggered = subset(data.test, eligible);
    for (std::size_t i = 0; i < triggered.size(); ++i) {
        apply_trigger_inplace(triggered.sample(i), triggered.input_dim,
                              cfg.attack.trigger);
    }

    const Topology topo = build_topology(cfg.topology, cfg.nodes, cfg.seed);
    std::vector<LabeledDataset> shards = partition_data(
        data.train, cfg.nodes, cfg.partition, mix_seed(cfg.seed, stream::kPartition));

    const std::size_t n_mal = count_from_fraction(cfg.malicious_fraction, cfg.nodes);
    std::vector<std::uint32_t> ids(cfg.nodes);
    std::iota(ids.begin(), ids.end(), 0u);
    {
        auto engine = make_engine(mix_seed(cfg.seed, stream::kRoles));
        std::shuffle(ids.begin(), ids.end(), engine);
    }
    std::vector<std::uint32_t> malicious_nodes(ids.begin(),
                                               ids.begin() + static_cast<std::ptrdiff_t>(n_mal));
    std::sort(malicious_nodes.begin(), malicious_nodes.end());
    std::vector<bool> mal_label(cfg.nodes, false);
    for (std::uint32_t id : malicious_nodes) {
        mal_label[id] = true;
    }

    DefenseConfig defense = cfg.defense;
    std::size_t resolved_k = 0;
    if (defense.kind == DefenseKind::taser) {
        resolved_k = resolve_k(cfg, d);
        defense.k = resolved_k;
    }
    const std::size_t heatmap_k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.10 * static_cast<double>(d))));

    AttackConfig attack = cfg.attack;
    switch (cfg.attack_kind) {
        case ExperimentAttack::traditional:
            attack.kind = AttackKind::traditional;
            break;
        case ExperimentAttack::mimicry:
            attack.kind = AttackKind::mimicry;
            break;
        case ExperimentAttack::concealment:
            attack.kind = AttackKind::concealment;
            break;
        case ExperimentAttack::none:
            break;
    }
    const bool attack_active = cfg.attack_kind != ExperimentAttack::none;

    const ModelParams base_model = init_model(mix_seed(cfg.seed, stream::kInit), dims);
    std::vector<NodeState> states(cfg.nodes);
    for (std::size_t i = 0; i < cfg.nodes; ++i) {
        states[i].id = static_cast<std::uint32_t>(i);
        states[i].seed = mix_seed(cfg.seed, i);
        states[i].model = base_model;
        states[i].data = std::move(shards[i]);
        states[i].malicious = attack_active && mal_label[i];
        states[i].attack = attack;
    }

    ExperimentResult result;
    result.flat_dim = d;
    result.k = resolved_k;
    result.heatmap_k = heatmap_k;
    result.malicious_nodes = malicious_nodes;
    const bool heatmap_possible = n_mal > 0 && n_mal < cfg.nodes;

    for (std::size_t t = 0; t < cfg.rounds; ++t) {
        RoundConfig rc;
        rc.defense = defense;
        rc.batch_size = cfg.batch_size;
        rc.num_batches = cfg.num_batches;
        rc.lr = cfg.lr;
        rc.heatmap_k = heatmap_k;
        rc.round = t;
        if (cfg.active_per_round > 0 && cfg.active_per_round < cfg.nodes) {
            std::vector<std::uint32_t> pool(cfg.nodes);
            std::iota(pool.begin(), pool.end(), 0u);
            auto engine = make_engine(mix_seed(cfg.seed, t, stream::kRoles));
            std::shuffle(pool.begin(), pool.end(), engine);
            rc.active.assign(cfg.nodes, 0);
            for (std::size_t a = 0; a < cfg.active_per_round; ++a) {
                rc.active[pool[a]] = 1;
            }
        }

        const RoundRecord rec = run_round(states, topo, rc);

        RoundMetrics rm;
        rm.round = t;
        rm.mta_min = 1.0;
        std::size_t benign_count = 0;
        for (std::size_t i = 0; i < cfg.nodes; ++i) {
            if (states[i].malicious) {
                continue;
            }
            ++benign_count;
            const double mta = evaluate(states[i].model, data.test);
            std::size_t hits = 0;
            for (std::size_t s = 0; s < triggered.size(); ++s) {
                if (predict(states[i].model, triggered.sample(s)) ==
                    cfg.attack.trigger.target_label) {
                    ++hits;
                }
            }
            const double asr =
                static_cast<double>(hits) / static_cast<double>(triggered.size());
            rm.mta_mean += mta;
            rm.mta_min = std::min(rm.mta_min, mta);
            rm.asr_mean += asr;
            rm.asr_max = std::max(rm.asr_max, asr);
        }
        rm.mta_mean /= static_cast<double>(benign_count);
        rm.asr_mean /= static_cast<double>(benign_count);
        double bytes_total = 0.0;
        for (std::uint64_t b : rec.bytes) {
            bytes_total += static_cast<double>(b);
        }
        rm.bytes_per_node = bytes_total / static_cast<double>(cfg.nodes);
        result.metrics.push_back(rm);
        result.bytes.push_back(rec.bytes);

        if (heatmap_possible) {
            std::size_t active_mal = 0;
            std::size_t active_ben = 0;
            for (std::size_t i = 0; i < cfg.nodes; ++i) {
                if (rec.heatmap_sets[i].empty()) {
                    continue;
                }
                (mal_label[i] ? active_mal : active_ben) += 1;
            }
            if (active_mal > 0 && active_ben > 0) {
                result.heatmap.push_back(heatmap_row(rec.heatmap_sets, mal_label, d));
            } else {
                result.heatmap.emplace_back(d, 0.0);
            }

            if (active_mal > 0 && active_ben > 0) {
                std::vector<std::uint32_t> counts(d, 0);
                for (std::size_t i = 0; i < cfg.nodes; ++i) {
                    if (mal_label[i] || rec.heatmap_sets[i].empty()) {
                        continue;
                    }
                    for (std::uint32_t f : rec.heatmap_sets[i]) {
                        ++counts[f];
                    }
                }
                const std::vector<std::uint32_t> consensus = top_by_count(counts, heatmap_k);
                double overlap_sum = 0.0;
                std::size_t overlap_n = 0;
                for (std::size_t i = 0; i < cfg.nodes; ++i) {
                    if (!mal_label[i] || rec.heatmap_sets[i].empty()) {
                        continue;
                    }
                    overlap_sum +=
                        static_cast<double>(sorted_intersection_size(rec.heatmap_sets[i],
                                                                     consensus)) /
                        static_cast<double>(consensus.size());
                    ++overlap_n;
                }
                result.attacker_overlap.push_back(overlap_sum /
                                                  static_cast<double>(overlap_n));
            } else {
                result.attacker_overlap.push_back(
                    std::numeric_limits<double>::quiet_NaN());
            }
        }
    }

    const std::size_t window = std::min<std::size_t>(10, result.metrics.size());
    if (window > 0) {
        double mta_sum = 0.0;
        double asr_sum = 0.0;
        for (std::size_t i = result.metrics.size() - window; i < result.metrics.size();
             ++i) {
            mta_sum += result.metrics[i].mta_mean;
            asr_sum += result.metrics[i].asr_mean;
        }
        result.final_mta = mta_sum / static_cast<double>(window);
        result.final_asr = asr_sum / static_cast<double>(window);
    }

    if (!cfg.out_dir.empty()) {
        write_outputs(cfg, result);
    }
    return result;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      std::vector<double> k_ratios) {
    if (k_ratios.empty()) {
        bad_config("ablation needs at least one k_ratio");
    }
    std::sort(k_ratios.begin(), k_ratios.end());
    std::vector<AblationRow> rows;
    rows.reserve(k_ratios.size());
    for (double ratio : k_ratios) {
        ExperimentConfig cfg = base;
        cfg.defense.kind = DefenseKind::taser;
        cfg.has_k = false;
        cfg.has_k_ratio = true;
        cfg.k_ratio = ratio;
        if (!base.out_dir.empty()) {
            cfg.out_dir = base.out_dir + "/k_ratio_" + fmt9(ratio);
        }
        const ExperimentResult result = run_experiment(cfg);
        rows.push_back({ratio, result.final_mta, result.final_asr});
    }
    if (!base.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(base.out_dir);
        std::ofstream out(fs::path(base.out_dir) / "ablation.csv");
        out << "k_ratio,final_mta,final_asr\n";
        for (const AblationRow& row : rows) {
            out << fmt9(row.k_ratio) << ',' << fmt9(row.final_mta) << ','
                << fmt9(row.final_asr) << '\n';
        }
    }
    return rows;
}

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad_config(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        bad_config("top level must be an object");
    }
    ExperimentConfig cfg = default_config();
    check_keys(j, "top level",
               {"seed", "dataset", "model", "topology", "nodes", "malicious_fraction",
                "attack", "defense", "rounds", "num_batches", "batch_size", "lr",
                "partition", "active_per_round", "out_dir", "resolved"});

    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("nodes")) cfg.nodes = j.at("nodes").get<std::size_t>();
    if (j.contains("malicious_fraction")) {
        cfg.malicious_fraction = j.at("malicious_fraction").get<double>();
    }
    if (j.contains("rounds")) cfg.rounds = j.at("rounds").get<std::size_t>();
    if (j.contains("num_batches")) cfg.num_batches = j.at("num_batches").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("active_per_round")) {
        cfg.active_per_round = j.at("active_per_round").get<std::size_t>();
    }
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    if (j.contains("dataset")) {
        const json& dj = j.at("dataset");
        check_keys(dj, "dataset",
                   {"kind", "train_samples", "test_samples", "input_dim", "num_classes",
                    "cluster_std", "path", "test_fraction", "feature_scale"});
        const std::string kind = dj.value("kind", std::string("blobs"));
        if (kind == "blobs") {
            cfg.dataset.kind = DatasetKind::blobs;
        } else if (kind == "csv") {
            cfg.dataset.kind = DatasetKind::csv;
        } else {
            bad_config("unknown dataset kind '" + kind + "'");
        }
        cfg.dataset.train_samples = dj.value("train_samples", cfg.dataset.train_samples);
        cfg.dataset.test_samples = dj.value("test_samples", cfg.dataset.test_samples);
        cfg.dataset.input_dim = dj.value("input_dim", cfg.dataset.input_dim);
        cfg.dataset.num_classes = dj.value("num_classes", cfg.dataset.num_classes);
        cfg.dataset.cluster_std = dj.value("cluster_std", cfg.dataset.cluster_std);
        cfg.dataset.path = dj.value("path", cfg.dataset.path);
        cfg.dataset.test_fraction = dj.value("test_fraction", cfg.dataset.test_fraction);
        cfg.dataset.feature_scale = dj.value("feature_scale", cfg.dataset.feature_scale);
    }

    if (j.contains("model")) {
        const json& mj = j.at("model");
        check_keys(mj, "model", {"hidden_dim"});
        cfg.hidden_dim = mj.value("hidden_dim", cfg.hidden_dim);
    }

    if (j.contains("topology")) {
        const json& tj = j.at("topology");
        check_keys(tj, "topology", {"kind", "degree", "p"});
        const std::string kind = tj.value("kind", std::string("complete"));
        if (kind == "ring") {
            cfg.topology.kind = TopologyKind::ring;
        } else if (kind == "k_regular") {
            cfg.topology.kind = TopologyKind::k_regular;
        } else if (kind == "erdos_renyi") {
            cfg.topology.kind = TopologyKind::erdos_renyi;
        } else if (kind == "complete") {
            cfg.topology.kind = TopologyKind::erdos_renyi;
            cfg.topology.p = 1.0;
        } else {
            bad_config("unknown topology kind '" + kind + "'");
        }
        cfg.topology.degree = tj.value("degree", cfg.topology.degree);
        if (kind != "complete") {
            cfg.topology.p = tj.value("p", cfg.topology.p);
        }
    }

    if (j.contains("attack")) {
        const json& aj = j.at("attack");
        check_keys(aj, "attack",
                   {"kind", "poison_fraction", "scale", "align_cos", "mask_ratio",
                    "trigger"});
        const std::string kind = aj.value("kind", std::string("traditional"));
        if (kind == "none") {
            cfg.attack_kind = ExperimentAttack::none;
        } else if (kind == "traditional") {
            cfg.attack_kind = ExperimentAttack::traditional;
        } else if (kind == "mimicry") {
            cfg.attack_kind = ExperimentAttack::mimicry;
        } else if (kind == "concealment") {
            cfg.attack_kind = ExperimentAttack::concealment;
        } else {
            bad_config("unknown attack kind '" + kind + "'");
        }
        cfg.attack.poison_fraction = aj.value("poison_fraction", cfg.attack.poison_fraction);
        cfg.attack.scale = aj.value("scale", cfg.attack.scale);
        cfg.attack.align_cos = aj.value("align_cos", cfg.attack.align_cos);
        cfg.attack.mask_ratio = aj.value("mask_ratio", cfg.attack.mask_ratio);
        if (aj.contains("trigger")) {
            const json& gj = aj.at("trigger");
            check_keys(gj, "attack.trigger",
                       {"feature_indices", "trigger_values", "target_label"});
            if (gj.contains("feature_indices")) {
                cfg.attack.trigger.feature_indices =
                    gj.at("feature_indices").get<std::vector<std::size_t>>();
            }
            if (gj.contains("trigger_values")) {
                cfg.attack.trigger.trigger_values =
                    gj.at("trigger_values").get<std::vector<double>>();
            }
            cfg.attack.trigger.target_label =
                gj.value("target_label", cfg.attack.trigger.target_label);
        }
    }

    if (j.contains("defense")) {
        const json& dj = j.at("defense");
        check_keys(dj, "defense",
                   {"kind", "alpha", "k", "k_ratio", "channel", "k_adv", "clip_c",
                    "sigma", "krum_f"});
        const std::string kind = dj.value("kind", std::string("taser"));
        if (kind == "taser") {
            cfg.defense.kind = DefenseKind::taser;
        } else if (kind == "mean") {
            cfg.defense.kind = DefenseKind::mean;
        } else if (kind == "weak_dp") {
            cfg.defense.kind = DefenseKind::weak_dp;
        } else if (kind == "krum") {
            cfg.defense.kind = DefenseKind::krum;
        } else {
            bad_config("unknown defense kind '" + kind + "'");
        }
        cfg.defense.alpha = dj.value("alpha", cfg.defense.alpha);
        cfg.defense.clip_c = dj.value("clip_c", cfg.defense.clip_c);
        cfg.defense.sigma = dj.value("sigma", cfg.defense.sigma);
        cfg.defense.krum_f = dj.value("krum_f", cfg.defense.krum_f);
        if (dj.contains("k") || dj.contains("k_ratio") || dj.contains("channel") ||
            dj.contains("k_adv")) {
            cfg.has_k = cfg.has_k_ratio = cfg.has_channel = cfg.has_k_adv = false;
        }
        if (dj.contains("k")) {
            cfg.has_k = true;
            cfg.k = dj.at("k").get<std::size_t>();
        }
        if (dj.contains("k_ratio")) {
            cfg.has_k_ratio = true;
            cfg.k_ratio = dj.at("k_ratio").get<double>();
        }
        if (dj.contains("channel")) {
            const json& cj = dj.at("channel");
            check_keys(cj, "defense.channel",
                       {"bandwidth_hz", "snr", "slot_seconds", "bits_per_coeff"});
            cfg.has_channel = true;
            cfg.channel.bandwidth_hz = cj.value("bandwidth_hz", cfg.channel.bandwidth_hz);
            cfg.channel.snr = cj.value("snr", cfg.channel.snr);
            cfg.channel.slot_seconds = cj.value("slot_seconds", cfg.channel.slot_seconds);
            cfg.channel.bits_per_coeff =
                cj.value("bits_per_coeff", cfg.channel.bits_per_coeff);
        }
        if (dj.contains("k_adv")) {
            cfg.has_k_adv = true;
            cfg.k_adv = dj.at("k_adv").get<std::size_t>();
        }
    }

    if (j.contains("partition")) {
        const json& pj = j.at("partition");
        check_keys(pj, "partition", {"kind", "beta"});
        const std::string kind = pj.value("kind", std::string("iid"));
        if (kind == "iid") {
            cfg.partition.kind = PartitionScheme::Kind::iid;
        } else if (kind == "dirichlet") {
            cfg.partition.kind = PartitionScheme::Kind::dirichlet;
        } else {
            bad_config("unknown partition kind '" + kind + "'");
        }
        cfg.partition.beta = pj.value("beta", cfg.partition.beta);
    }

    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_config_json(text);
}

std::string resolved_config_json(const ExperimentConfig& cfg,
                                 const ExperimentResult& result) {
    json j;
    j["seed"] = cfg.seed;
    j["nodes"] = cfg.nodes;
    j["malicious_fraction"] = cfg.malicious_fraction;
    j["rounds"] = cfg.rounds;
    j["num_batches"] = cfg.num_batches;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["active_per_round"] = cfg.active_per_round;
    j["out_dir"] = cfg.out_dir;

    json dataset;
    if (cfg.dataset.kind == DatasetKind::blobs) {
        dataset["kind"] = "blobs";
        dataset["train_samples"] = cfg.dataset.train_samples;
        dataset["test_samples"] = cfg.dataset.test_samples;
        dataset["input_dim"] = cfg.dataset.input_dim;
        dataset["num_classes"] = cfg.dataset.num_classes;
        dataset["cluster_std"] = cfg.dataset.cluster_std;
    } else {
        dataset["kind"] = "csv";
        dataset["path"] = cfg.dataset.path;
        dataset["test_fraction"] = cfg.dataset.test_fraction;
        dataset["feature_scale"] = cfg.dataset.feature_scale;
    }
    j["dataset"] = dataset;
    j["model"] = json{{"hidden_dim", cfg.hidden_dim}};

    json topology;
    switch (cfg.topology.kind) {
        case TopologyKind::ring:
            topology["kind"] = "ring";
            break;
        case TopologyKind::k_regular:
            topology["kind"] = "k_regular";
            topology["degree"] = cfg.topology.degree;
            break;
        case TopologyKind::erdos_renyi:
            topology["kind"] = "erdos_renyi";
            topology["p"] = cfg.topology.p;
            break;
    }
    j["topology"] = topology;

    json attack;
    switch (cfg.attack_kind) {
        case ExperimentAttack::none:
            attack["kind"] = "none";
            break;
        case ExperimentAttack::traditional:
            attack["kind"] = "traditional";
            break;
        case ExperimentAttack::mimicry:
            attack["kind"] = "mimicry";
            break;
        case ExperimentAttack::concealment:
            attack["kind"] = "concealment";
            break;
    }
    attack["poison_fraction"] = cfg.attack.poison_fraction;
    attack["scale"] = cfg.attack.scale;
    attack["align_cos"] = cfg.attack.align_cos;
    attack["mask_ratio"] = cfg.attack.mask_ratio;
    attack["trigger"] = json{{"feature_indices", cfg.attack.trigger.feature_indices},
                             {"trigger_values", cfg.attack.trigger.trigger_values},
                             {"target_label", cfg.attack.trigger.target_label}};
    j["attack"] = attack;

    json defense;
    switch (cfg.defense.kind) {
        case DefenseKind::taser:
            defense["kind"] = "taser";
            break;
        case DefenseKind::mean:
            defense["kind"] = "mean";
            break;
        case DefenseKind::weak_dp:
            defense["kind"] = "weak_dp";
            break;
        case DefenseKind::krum:
            defense["kind"] = "krum";
            break;
    }
    defense["alpha"] = cfg.defense.alpha;
    defense["clip_c"] = cfg.defense.clip_c;
    defense["sigma"] = cfg.defense.sigma;
    defense["krum_f"] = cfg.defense.krum_f;
    if (cfg.has_k) {
        defense["k"] = cfg.k;
    }
    if (cfg.has_k_ratio) {
        defense["k_ratio"] = cfg.k_ratio;
    }
    if (cfg.has_channel) {
        defense["channel"] = json{{"bandwidth_hz", cfg.channel.bandwidth_hz},
                                  {"snr", cfg.channel.snr},
                                  {"slot_seconds", cfg.channel.slot_seconds},
                                  {"bits_per_coeff", cfg.channel.bits_per_coeff}};
    }
    if (cfg.has_k_adv) {
        defense["k_adv"] = cfg.k_adv;
    }
    j["defense"] = defense;

    json partition;
    partition["kind"] =
        cfg.partition.kind == PartitionScheme::Kind::iid ? "iid" : "dirichlet";
    partition["beta"] = cfg.partition.beta;
    j["partition"] = partition;

    j["resolved"] = json{{"flat_dim", result.flat_dim},
                         {"k", result.k},
                         {"heatmap_k", result.heatmap_k},
                         {"malicious_nodes", result.malicious_nodes}};
    return j.dump(2);
}

}  // namespace taser
