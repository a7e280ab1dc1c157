#include "taser/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "taser/random.hpp"

namespace taser {

void validate(const ModelDims& dims) {
    if (dims.input_dim < 1 || dims.hidden_dim < 1 || dims.num_classes < 2) {
        throw std::invalid_argument(
            "ModelDims: need input_dim >= 1, hidden_dim >= 1, num_classes >= 2");
    }
}

void validate(const LabeledDataset& data) {
    if (data.size() == 0) {
        throw std::invalid_argument("LabeledDataset: empty");
    }
    if (data.input_dim < 1 || data.num_classes < 1) {
        throw std::invalid_argument("LabeledDataset: bad dimensions");
    }
    if (data.features.size() != data.size() * data.input_dim) {
        throw std::invalid_argument("LabeledDataset: feature storage size mismatch");
    }
    for (int label : data.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= data.num_classes) {
            throw std::invalid_argument("LabeledDataset: label out of range");
        }
    }
    for (double v : data.features) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("LabeledDataset: non-finite feature");
        }
    }
}

void validate(const TriggerSpec& trigger, std::size_t input_dim) {
    if (trigger.feature_indices.size() != trigger.trigger_values.size()) {
        throw std::invalid_argument("TriggerSpec: index/value length mismatch");
    }
    if (trigger.target_label < 0) {
        throw std::invalid_argument("TriggerSpec: negative target label");
    }
    std::vector<std::size_t> sorted = trigger.feature_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("TriggerSpec: duplicate feature index");
    }
    if (!sorted.empty() && sorted.back() >= input_dim) {
        throw std::invalid_argument("TriggerSpec: feature index out of range");
    }
    for (double v : trigger.trigger_values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("TriggerSpec: non-finite trigger value");
        }
    }
}

ModelParams init_model(std::uint64_t seed, const ModelDims& dims) {
    validate(dims);
    ModelParams model;
    model.dims = dims;
    model.values.assign(dims.flat_dim(), 0.0);

    auto engine = make_engine(seed);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(dims.input_dim));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim));
    std::uniform_real_distribution<double> u1(-bound1, bound1);
    std::uniform_real_distribution<double> u2(-bound2, bound2);

    for (std::size_t idx = 0; idx < dims.hidden_dim * dims.input_dim; ++idx) {
        model.values[dims.w1_offset() + idx] = u1(engine);
    }
    for (std::size_t idx = 0; idx < dims.num_classes * dims.hidden_dim; ++idx) {
        model.values[dims.w2_offset() + idx] = u2(engine);
    }
    return model;
}

namespace {

// Scratch buffers reused across samples within one batch.
struct Workspace {
    std::vector<double> hidden;
    std::vector<double> probs;
    std::vector<double> dz2;

    explicit Workspace(const ModelDims& dims)
        : hidden(dims.hidden_dim), probs(dims.num_classes), dz2(dims.num_classes) {}
};

void forward_pass(const ModelParams& model, const double* x, Workspace& ws) {
    const ModelDims& dims = model.dims;
    const double* w1 = model.values.data() + dims.w1_offset();
    const double* b1 = model.values.data() + dims.b1_offset();
    const double* w2 = model.values.data() + dims.w2_offset();
    const double* b2 = model.values.data() + dims.b2_offset();

    for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
        const double* row = w1 + j * dims.input_dim;
        double z = b1[j];
        for (std::size_t i = 0; i < dims.input_dim; ++i) {
            z += row[i] * x[i];
        }
        ws.hidden[j] = std::tanh(z);
    }

    double z_max = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < dims.num_classes; ++c) {
        const double* row = w2 + c * dims.hidden_dim;
        double z = b2[c];
        for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
            z += row[j] * ws.hidden[j];
        }
        ws.probs[c] = z;
        z_max = std::max(z_max, z);
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < dims.num_classes; ++c) {
        ws.probs[c] = std::exp(ws.probs[c] - z_max);
        denom += ws.probs[c];
    }
    for (std::size_t c = 0; c < dims.num_classes; ++c) {
        ws.probs[c] /= denom;
    }
}

void check_compatible(const ModelParams& model, const LabeledDataset& data) {
    if (model.dims.input_dim != data.input_dim) {
        throw std::invalid_argument("model/data input dimension mismatch");
    }
    if (model.values.size() != model.dims.flat_dim()) {
        throw std::invalid_argument("model storage does not match its dims");
    }
}

}  // namespace

GradientVector batch_gradient(const ModelParams& model, const LabeledDataset& data,
                              const std::vector<std::size_t>& indices) {
    check_compatible(model, data);
    if (indices.empty()) {
        throw std::invalid_argument("batch_gradient: empty batch");
    }

    const ModelDims& dims = model.dims;
    GradientVector grad;
    grad.values.assign(dims.flat_dim(), 0.0);
    double* gw1 = grad.values.data() + dims.w1_offset();
    double* gb1 = grad.values.data() + dims.b1_offset();
    double* gw2 = grad.values.data() + dims.w2_offset();
    double* gb2 = grad.values.data() + dims.b2_offset();
    const double* w2 = model.values.data() + dims.w2_offset();

    Workspace ws(dims);
    for (std::size_t idx : indices) {
        if (idx >= data.size()) {
            throw std::invalid_argument("batch_gradient: sample index out of range");
        }
        const int label = data.labels[idx];
        if (label < 0 || static_cast<std::size_t>(label) >= dims.num_classes) {
            throw std::invalid_argument("batch_gradient: label outside model classes");
        }
        const double* x = data.sample(idx);
        forward_pass(model, x, ws);

        // Cross-entropy with softmax: dL/dz2 = probs - onehot(label).
        for (std::size_t c = 0; c < dims.num_classes; ++c) {
            ws.dz2[c] = ws.probs[c];
        }
        ws.dz2[static_cast<std::size_t>(label)] -= 1.0;

        for (std::size_t c = 0; c < dims.num_classes; ++c) {
            const double dz = ws.dz2[c];
            double* row = gw2 + c * dims.hidden_dim;
            for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
                row[j] += dz * ws.hidden[j];
            }
            gb2[c] += dz;
        }
        for (std::size_t j = 0; j < dims.hidden_dim; ++j) {
            double dh = 0.0;
            for (std::size_t c = 0; c < dims.num_classes; ++c) {
                dh += w2[c * dims.hidden_dim + j] * ws.dz2[c];
            }
            const double dz1 = dh * (1.0 - ws.hidden[j] * ws.hidden[j]);
            double* row = gw1 + j * dims.input_dim;
            for (std::size_t i = 0; i < dims.input_dim; ++i) {
                row[i] += dz1 * x[i];
            }
            gb1[j] += dz1;
        }
    }

    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& g : grad.values) {
        g *= inv;
        if (!std::isfinite(g)) {
            throw std::runtime_error("batch_gradient: non-finite gradient");
        }
    }
    return grad;
}

GradientVector batch_gradient(const ModelParams& model, const LabeledDataset& batch) {
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return batch_gradient(model, batch, all);
}

std::vector<std::vector<std::size_t>> draw_batches(std::size_t n, std::size_t batch_size,
                                                   std::size_t num_batches,
                                                   std::uint64_t seed) {
    if (num_batches < 1) {
        throw std::invalid_argument("draw_batches: need at least one batch");
    }
    if (batch_size < 1 || batch_size > n) {
        throw std::invalid_argument("draw_batches: batch_size out of range");
    }
    auto engine = make_engine(seed);
    std::vector<std::size_t> deck(n);
    std::iota(deck.begin(), deck.end(), std::size_t{0});
    std::shuffle(deck.begin(), deck.end(), engine);

    std::vector<std::vector<std::size_t>> batches;
    batches.reserve(num_batches);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
        if (pos + batch_size > n) {
            std::shuffle(deck.begin(), deck.end(), engine);
            pos = 0;
        }
        batches.emplace_back(deck.begin() + static_cast<std::ptrdiff_t>(pos),
                             deck.begin() + static_cast<std::ptrdiff_t>(pos + batch_size));
        pos += batch_size;
    }
    return batches;
}

LocalRound local_round(const ModelParams& model, const LabeledDataset& data,
                       std::size_t batch_size, std::size_t num_batches,
                       std::uint64_t seed) {
    const auto batches = draw_batches(data.size(), batch_size, num_batches, seed);
    LocalRound out;
    out.batch_gradients.reserve(num_batches);
    out.mean.values.assign(model.dims.flat_dim(), 0.0);
    for (const auto& idx : batches) {
        out.batch_gradients.push_back(batch_gradient(model, data, idx));
        const auto& g = out.batch_gradients.back().values;
        for (std::size_t i = 0; i < g.size(); ++i) {
            out.mean.values[i] += g[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(num_batches);
    for (double& v : out.mean.values) {
        v *= inv;
    }
    return out;
}

ModelParams apply_update(const ModelParams& model, const GradientVector& update,
                         double lr) {
    if (update.values.size() != model.values.size()) {
        throw std::invalid_argument("apply_update: length mismatch");
    }
    if (!std::isfinite(lr)) {
        throw std::invalid_argument("apply_update: non-finite learning rate");
    }
    ModelParams out = model;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] -= lr * update.values[i];
    }
    return out;
}

int predict(const ModelParams& model, const double* features) {
    Workspace ws(model.dims);
    forward_pass(model, features, ws);
    std::size_t best = 0;
    for (std::size_t c = 1; c < model.dims.num_classes; ++c) {
        if (ws.probs[c] > ws.probs[best]) {
            best = c;
        }
    }
    return static_cast<int>(best);
}

double evaluate(const ModelParams& model, const LabeledDataset& data) {
    check_compatible(model, data);
    if (data.size() == 0) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    Workspace ws(model.dims);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        forward_pass(model, data.sample(i), ws);
        std::size_t best = 0;
        for (std::size_t c = 1; c < model.dims.num_classes; ++c) {
            if (ws.probs[c] > ws.probs[best]) {
                best = c;
            }
        }
        if (static_cast<int>(best) == data.labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

std::vector<LabeledDataset> gather_partition(
    const LabeledDataset& data, const std::vector<std::vector<std::size_t>>& assignment) {
    std::vector<LabeledDataset> parts;
    parts.reserve(assignment.size());
    for (const auto& idx : assignment) {
        parts.push_back(subset(data, idx));
    }
    return parts;
}

// Moves single samples from the largest shards until none is empty. Keeps the
// partition property intact and is fully deterministic.
void repair_empty_shards(std::vector<std::vector<std::size_t>>& assignment) {
    for (std::size_t node = 0; node < assignment.size(); ++node) {
        while (assignment[node].empty()) {
            std::size_t donor = 0;
            for (std::size_t j = 1; j < assignment.size(); ++j) {
                if (assignment[j].size() > assignment[donor].size()) {
                    donor = j;
                }
            }
            if (assignment[donor].size() <= 1) {
                throw std::invalid_argument("partition_data: not enough samples");
            }
            assignment[node].push_back(assignment[donor].back());
            assignment[donor].pop_back();
        }
    }
}

}  // namespace

std::vector<LabeledDataset> partition_data(const LabeledDataset& data, std::size_t n_nodes,
                                           const PartitionScheme& scheme,
                                           std::uint64_t seed) {
    validate(data);
    if (n_nodes < 1) {
        throw std::invalid_argument("partition_data: need at least one node");
    }
    if (n_nodes > data.size()) {
        throw std::invalid_argument("partition_data: more nodes than samples");
    }

    auto engine = make_engine(seed);
    std::vector<std::vector<std::size_t>> assignment(n_nodes);

    if (scheme.kind == PartitionScheme::Kind::iid) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), engine);
        const std::size_t base = data.size() / n_nodes;
        const std::size_t extra = data.size() % n_nodes;
        std::size_t pos = 0;
        for (std::size_t node = 0; node < n_nodes; ++node) {
            const std::size_t count = base + (node < extra ? 1 : 0);
            assignment[node].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                    order.begin() + static_cast<std::ptrdiff_t>(pos + count));
            pos += count;
        }
        return gather_partition(data, assignment);
    }

    if (!(scheme.beta > 0.0) || !std::isfinite(scheme.beta)) {
        throw std::invalid_argument("partition_data: dirichlet beta must be positive");
    }
    // Per class, split that class's samples across nodes with Dirichlet(beta)
    // proportions; small beta concentrates each class on few nodes.
    std::vector<std::vector<std::size_t>> by_class(data.num_classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }
    std::gamma_distribution<double> gamma(scheme.beta, 1.0);
    for (auto& members : by_class) {
        if (members.empty()) {
            continue;
        }
        std::shuffle(members.begin(), members.end(), engine);
        std::vector<double> weights(n_nodes);
        double total = 0.0;
        for (double& w : weights) {
            w = gamma(engine);
            total += w;
        }
        if (total <= 0.0) {
            std::fill(weights.begin(), weights.end(), 1.0);
            total = static_cast<double>(n_nodes);
        }
        const std::size_t m = members.size();
        double cumulative = 0.0;
        std::size_t start = 0;
        for (std::size_t node = 0; node < n_nodes; ++node) {
            cumulative += weights[node] / total;
            std::size_t end = (node + 1 == n_nodes)
                                  ? m
                                  : std::min(m, static_cast<std::size_t>(std::floor(
                                                    cumulative * static_cast<double>(m))));
            for (std::size_t i = start; i < end; ++i) {
                assignment[node].push_back(members[i]);
            }
            start = std::max(start, end);
        }
    }
    repair_empty_shards(assignment);
    return gather_partition(data, assignment);
}

void apply_trigger_inplace(double* features, std::size_t input_dim,
                           const TriggerSpec& trigger) {
    validate(trigger, input_dim);
    for (std::size_t t = 0; t < trigger.feature_indices.size(); ++t) {
        features[trigger.feature_indices[t]] = trigger.trigger_values[t];
    }
}

std::vector<double> apply_trigger(std::vector<double> sample_features,
                                  const TriggerSpec& trigger) {
    apply_trigger_inplace(sample_features.data(), sample_features.size(), trigger);
    return sample_features;
}

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices) {
    LabeledDataset out;
    out.input_dim = data.input_dim;
    out.num_classes = data.num_classes;
    out.features.reserve(indices.size() * data.input_dim);
    out.labels.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= data.size()) {
            throw std::invalid_argument("subset: index out of range");
        }
        const double* row = data.sample(idx);
        out.features.insert(out.features.end(), row, row + data.input_dim);
        out.labels.push_back(data.labels[idx]);
    }
    return out;
}

LabeledDataset make_blobs(std::size_t num_samples, std::size_t input_dim,
                          std::size_t num_classes, double cluster_std,
                          std::uint64_t seed) {
    if (num_samples < 1 || input_dim < 1 || num_classes < 1) {
        throw std::invalid_argument("make_blobs: bad dimensions");
    }
    if (!(cluster_std >= 0.0) || !std::isfinite(cluster_std)) {
        throw std::invalid_argument("make_blobs: bad cluster_std");
    }
    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> center_dist(-2.0, 2.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<double> centers(num_classes * input_dim);
    for (double& c : centers) {
        c = center_dist(engine);
    }

    LabeledDataset out;
    out.input_dim = input_dim;
    out.num_classes = num_classes;
    out.features.resize(num_samples * input_dim);
    out.labels.resize(num_samples);
    for (std::size_t i = 0; i < num_samples; ++i) {
        const std::size_t label = i % num_classes;
        out.labels[i] = static_cast<int>(label);
        const double* center = centers.data() + label * input_dim;
        double* row = out.sample(i);
        for (std::size_t f = 0; f < input_dim; ++f) {
            row[f] = center[f] + cluster_std * noise(engine);
        }
    }

    std::vector<std::size_t> order(num_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), engine);
    return subset(out, order);
}

LabeledDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_dataset_csv: cannot open " + path);
    }
    LabeledDataset out;
    std::string line;
    int max_label = -1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string token;
        while (std::getline(ss, token, ',')) {
            try {
                fields.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw std::runtime_error("load_dataset_csv: bad number at row " +
                                         std::to_string(row));
            }
        }
        if (fields.size() < 2) {
            throw std::runtime_error("load_dataset_csv: need features plus a label");
        }
        if (out.input_dim == 0) {
            out.input_dim = fields.size() - 1;
        } else if (fields.size() - 1 != out.input_dim) {
            throw std::runtime_error("load_dataset_csv: inconsistent column count at row " +
                                     std::to_string(row));
        }
        const double label_raw = fields.back();
        if (label_raw < 0.0 || label_raw != std::floor(label_raw)) {
            throw std::runtime_error("load_dataset_csv: label must be a nonnegative integer");
        }
        const int label = static_cast<int>(label_raw);
        max_label = std::max(max_label, label);
        out.features.insert(out.features.end(), fields.begin(), fields.end() - 1);
        out.labels.push_back(label);
        ++row;
    }
    if (out.size() == 0) {
        throw std::runtime_error("load_dataset_csv: no samples in " + path);
    }
    out.num_classes = static_cast<std::size_t>(max_label) + 1;
    validate(out);
    return out;
}

}  // namespace taser
