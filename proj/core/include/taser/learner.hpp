#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "taser/spectral.hpp"

namespace taser {

struct ModelDims {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_classes = 0;

    // Flat layout: [W1 (hidden x input, row-major), b1, W2 (classes x hidden,
    // row-major), b2]. All gradient vectors follow the same layout.
    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return hidden_dim * input_dim; }
    std::size_t w2_offset() const { return b1_offset() + hidden_dim; }
    std::size_t b2_offset() const { return w2_offset() + num_classes * hidden_dim; }
    std::size_t flat_dim() const { return b2_offset() + num_classes; }

    bool operator==(const ModelDims&) const = default;
};

// One hidden layer, tanh activation, softmax cross-entropy output. Parameters
// live in a single flat vector so that model updates and gradients share a
// representation with the spectral pipeline.
struct ModelParams {
    ModelDims dims;
    std::vector<double> values;

    std::size_t flat_dim() const { return values.size(); }

    double w1(std::size_t j, std::size_t i) const {
        return values[dims.w1_offset() + j * dims.input_dim + i];
    }
    double b1(std::size_t j) const { return values[dims.b1_offset() + j]; }
    double w2(std::size_t c, std::size_t j) const {
        return values[dims.w2_offset() + c * dims.hidden_dim + j];
    }
    double b2(std::size_t c) const { return values[dims.b2_offset() + c]; }
};

// Row-major sample storage; labels parallel to rows.
struct LabeledDataset {
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    const double* sample(std::size_t i) const { return features.data() + i * input_dim; }
    double* sample(std::size_t i) { return features.data() + i * input_dim; }
};

struct TriggerSpec {
    std::vector<std::size_t> feature_indices;
    std::vector<double> trigger_values;
    int target_label = 0;
};

struct LocalRound {
    std::vector<GradientVector> batch_gradients;
    GradientVector mean;
};

struct PartitionScheme {
    enum class Kind { iid, dirichlet };
    Kind kind = Kind::iid;
    double beta = 0.5;  // dirichlet concentration; ignored for iid
};

// Weights are uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_model(std::uint64_t seed, const ModelDims& dims);

// Gradient of the mean cross-entropy loss over the batch, flat layout.
GradientVector batch_gradient(const ModelParams& model, const LabeledDataset& batch);

// Same, restricted to the given sample indices (no copy of the data).
GradientVector batch_gradient(const ModelParams& model, const LabeledDataset& data,
                              const std::vector<std::size_t>& indices);

// Deterministic batch index draws: a shuffled deck of [0, n) dealt
// batch_size at a time, reshuffled whenever fewer than batch_size remain.
// Shared by honest training and the attack path so that both see identical
// sample draws for the same seed.
std::vector<std::vector<std::size_t>> draw_batches(std::size_t n, std::size_t batch_size,
                                                   std::size_t num_batches,
                                                   std::uint64_t seed);

// B per-batch gradients plus their arithmetic mean.
LocalRound local_round(const ModelParams& model, const LabeledDataset& data,
                       std::size_t batch_size, std::size_t num_batches,
                       std::uint64_t seed);

// Descent step: params - lr * update.
ModelParams apply_update(const ModelParams& model, const GradientVector& update,
                         double lr);

// Predicted class, ties resolved toward the lowest class index.
int predict(const ModelParams& model, const double* features);

// Top-1 accuracy on the given data.
double evaluate(const ModelParams& model, const LabeledDataset& data);

std::vector<LabeledDataset> partition_data(const LabeledDataset& data, std::size_t n_nodes,
                                           const PartitionScheme& scheme,
                                           std::uint64_t seed);

// Overwrites the listed feature indices with the trigger values. Labels are
// the caller's concern.
std::vector<double> apply_trigger(std::vector<double> sample_features,
                                  const TriggerSpec& trigger);
void apply_trigger_inplace(double* features, std::size_t input_dim,
                           const TriggerSpec& trigger);

// Copy of the selected rows, preserving order.
LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& indices);

// Isotropic Gaussian clusters around per-class centers drawn uniformly from
// [-2, 2]^input_dim; labels balanced, sample order shuffled.
LabeledDataset make_blobs(std::size_t num_samples, std::size_t input_dim,
                          std::size_t num_classes, double cluster_std,
                          std::uint64_t seed);

// CSV with one row per sample: feature columns then one integer label column.
// Class count is inferred as max label + 1.
LabeledDataset load_dataset_csv(const std::string& path);

void validate(const ModelDims& dims);
void validate(const LabeledDataset& data);
void validate(const TriggerSpec& trigger, std::size_t input_dim);

}  // namespace taser
