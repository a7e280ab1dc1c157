#pragma once

#include <cstdint>
#include <vector>

#include "taser/learner.hpp"
#include "taser/spectral.hpp"

namespace taser {

enum class AttackKind { traditional, mimicry, concealment };

struct AttackConfig {
    AttackKind kind = AttackKind::traditional;
    TriggerSpec trigger;
    double poison_fraction = 0.3;  // share of each batch replaced by triggered samples
    double scale = 10.0;           // traditional: multiplier on the reported update
    double align_cos = 0.9;        // mimicry: requested cosine to the benign direction
    double mask_ratio = 0.25;      // concealment: share of coordinates zeroed
};

struct AttackRound {
    std::vector<GradientVector> batch_gradients;  // what the node feeds the protocol
    GradientVector mean;
    GradientVector clean_mean;  // gradient on the attacker's own clean data, same seed
};

void validate(const AttackConfig& config, std::size_t input_dim);

// Batch gradients over mixed data: the first floor(poison_fraction * batch_size)
// samples of each drawn batch are triggered and relabelled to the target. Batch
// draws match learner::local_round for the same seed, so a fraction that rounds
// to zero samples reproduces the honest gradients bit for bit.
LocalRound poisoned_gradient(const ModelParams& model, const LabeledDataset& clean_data,
                             const AttackConfig& config, std::size_t batch_size,
                             std::size_t num_batches, std::uint64_t seed);

GradientVector scale_update(const GradientVector& update, double scale);

// Rotates the malicious gradient toward the benign reference so that
// cos(result, benign_ref) = align_cos while the norm of the malicious input is
// preserved. Rejects a zero reference; a malicious input parallel to the
// reference has no defined rotation plane and is rejected unless align_cos = 1.
GradientVector mimicry_align(const GradientVector& malicious,
                             const GradientVector& benign_ref, double align_cos);

// Zeros the ceil(mask_ratio * d) coordinates with the largest mean absolute
// magnitude across the history (ties toward the lower index), hiding the
// malicious signal in rarely-updated parameters.
GradientVector concealment_mask(const GradientVector& malicious,
                                const std::vector<GradientVector>& benign_history,
                                double mask_ratio);

// One full malicious local round: poisoned batch gradients shaped by the
// configured strategy. benign_history holds the attacker's clean mean gradients
// from earlier rounds; when empty, concealment ranks by the current clean mean.
AttackRound attacked_round(const ModelParams& model, const LabeledDataset& clean_data,
                           const AttackConfig& config,
                           const std::vector<GradientVector>& benign_history,
                           std::size_t batch_size, std::size_t num_batches,
                           std::uint64_t seed);

}  // namespace taser
