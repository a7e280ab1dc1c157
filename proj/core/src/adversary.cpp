#include "taser/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace taser {

void validate(const AttackConfig& config, std::size_t input_dim) {
    validate(config.trigger, input_dim);
    if (!(config.poison_fraction > 0.0) || !(config.poison_fraction <= 1.0)) {
        throw std::invalid_argument("AttackConfig: poison_fraction must be in (0, 1]");
    }
    switch (config.kind) {
        case AttackKind::traditional:
            if (!(config.scale >= 1.0) || !std::isfinite(config.scale)) {
                throw std::invalid_argument("AttackConfig: scale must be >= 1");
            }
            break;
        case AttackKind::mimicry:
            if (!(config.align_cos >= 0.0) || !(config.align_cos <= 1.0)) {
                throw std::invalid_argument("AttackConfig: align_cos must be in [0, 1]");
            }
            break;
        case AttackKind::concealment:
            if (!(config.mask_ratio > 0.0) || !(config.mask_ratio < 1.0)) {
                throw std::invalid_argument("AttackConfig: mask_ratio must be in (0, 1)");
            }
            break;
    }
}

LocalRound poisoned_gradient(const ModelParams& model, const LabeledDataset& clean_data,
                             const AttackConfig& config, std::size_t batch_size,
                             std::size_t num_batches, std::uint64_t seed) {
    validate(config, clean_data.input_dim);
    const auto batches =
        draw_batches(clean_data.size(), batch_size, num_batches, seed);
    // The small epsilon keeps an exact product like 0.3 * 10 from landing just
    // below the integer it represents.
    const std::size_t poison_count = static_cast<std::size_t>(
        std::floor(config.poison_fraction * static_cast<double>(batch_size) + 1e-9));

    LocalRound out;
    out.batch_gradients.reserve(num_batches);
    out.mean.values.assign(model.dims.flat_dim(), 0.0);
    for (const auto& idx : batches) {
        LabeledDataset batch = subset(clean_data, idx);
        for (std::size_t s = 0; s < poison_count; ++s) {
            apply_trigger_inplace(batch.sample(s), batch.input_dim, config.trigger);
            batch.labels[s] = config.trigger.target_label;
        }
        out.batch_gradients.push_back(batch_gradient(model, batch));
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

GradientVector scale_update(const GradientVector& update, double scale) {
    if (!(scale >= 1.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("scale_update: scale must be >= 1");
    }
    GradientVector out = update;
    for (double& v : out.values) {
        v *= scale;
    }
    return out;
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

}  // namespace

GradientVector mimicry_align(const GradientVector& malicious,
                             const GradientVector& benign_ref, double align_cos) {
    const std::size_t d = malicious.dim();
    if (benign_ref.dim() != d) {
        throw std::invalid_argument("mimicry_align: dimension mismatch");
    }
    if (!(align_cos >= 0.0) || !(align_cos <= 1.0)) {
        throw std::invalid_argument("mimicry_align: align_cos must be in [0, 1]");
    }
    const double ref_norm = norm2(benign_ref.values);
    if (ref_norm == 0.0) {
        throw std::invalid_argument("mimicry_align: zero benign reference");
    }
    const double mal_norm = norm2(malicious.values);
    if (mal_norm == 0.0) {
        throw std::invalid_argument("mimicry_align: zero malicious gradient");
    }

    // Orthogonal decomposition against the unit benign direction.
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        dot += malicious.values[i] * benign_ref.values[i];
    }
    const double along = dot / ref_norm;
    std::vector<double> residual(d);
    for (std::size_t i = 0; i < d; ++i) {
        residual[i] = malicious.values[i] - along * benign_ref.values[i] / ref_norm;
    }
    const double res_norm = norm2(residual);

    GradientVector out;
    out.values.assign(d, 0.0);
    if (res_norm <= 1e-12 * mal_norm) {
        if (align_cos < 1.0) {
            throw std::invalid_argument(
                "mimicry_align: malicious parallel to reference, rotation undefined");
        }
        for (std::size_t i = 0; i < d; ++i) {
            out.values[i] = benign_ref.values[i] / ref_norm * mal_norm;
        }
        return out;
    }

    const double sin_part = std::sqrt(std::max(0.0, 1.0 - align_cos * align_cos));
    for (std::size_t i = 0; i < d; ++i) {
        out.values[i] = align_cos * benign_ref.values[i] / ref_norm +
                        sin_part * residual[i] / res_norm;
    }
    const double out_norm = norm2(out.values);
    for (double& v : out.values) {
        v *= mal_norm / out_norm;
    }
    return out;
}

GradientVector concealment_mask(const GradientVector& malicious,
                                const std::vector<GradientVector>& benign_history,
                                double mask_ratio) {
    const std::size_t d = malicious.dim();
    if (benign_history.empty()) {
        throw std::invalid_argument("concealment_mask: empty history");
    }
    if (!(mask_ratio > 0.0) || !(mask_ratio < 1.0)) {
        throw std::invalid_argument("concealment_mask: mask_ratio must be in (0, 1)");
    }
    std::vector<double> mean_abs(d, 0.0);
    for (const auto& h : benign_history) {
        if (h.dim() != d) {
            throw std::invalid_argument("concealment_mask: history dimension mismatch");
        }
        for (std::size_t i = 0; i < d; ++i) {
            mean_abs[i] += std::fabs(h.values[i]);
        }
    }
    for (double& v : mean_abs) {
        v /= static_cast<double>(benign_history.size());
    }

    const std::size_t mask_count = std::min(
        d, static_cast<std::size_t>(std::ceil(mask_ratio * static_cast<double>(d))));
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mask_count - 1),
                     order.end(), [&](std::size_t a, std::size_t b) {
                         if (mean_abs[a] != mean_abs[b]) {
                             return mean_abs[a] > mean_abs[b];
                         }
                         return a < b;
                     });

    GradientVector out = malicious;
    for (std::size_t r = 0; r < mask_count; ++r) {
        out.values[order[r]] = 0.0;
    }
    return out;
}

AttackRound attacked_round(const ModelParams& model, const LabeledDataset& clean_data,
                           const AttackConfig& config,
                           const std::vector<GradientVector>& benign_history,
                           std::size_t batch_size, std::size_t num_batches,
                           std::uint64_t seed) {
    validate(config, clean_data.input_dim);
    const LocalRound clean =
        local_round(model, clean_data, batch_size, num_batches, seed);
    LocalRound poisoned =
        poisoned_gradient(model, clean_data, config, batch_size, num_batches, seed);

    AttackRound out;
    out.clean_mean = clean.mean;
    out.batch_gradients.reserve(num_batches);
    switch (config.kind) {
        case AttackKind::traditional:
            for (const auto& g : poisoned.batch_gradients) {
                out.batch_gradients.push_back(scale_update(g, config.scale));
            }
            break;
        case AttackKind::mimicry:
            for (const auto& g : poisoned.batch_gradients) {
                out.batch_gradients.push_back(
                    mimicry_align(g, clean.mean, config.align_cos));
            }
            break;
        case AttackKind::concealment: {
            const std::vector<GradientVector> fallback{clean.mean};
            const auto& ranking_source =
                benign_history.empty() ? fallback : benign_history;
            for (const auto& g : poisoned.batch_gradients) {
                out.batch_gradients.push_back(
                    concealment_mask(g, ranking_source, config.mask_ratio));
            }
            break;
        }
    }

    out.mean.values.assign(model.dims.flat_dim(), 0.0);
    for (const auto& g : out.batch_gradients) {
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            out.mean.values[i] += g.values[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(num_batches);
    for (double& v : out.mean.values) {
        v *= inv;
    }
    return out;
}

}  // namespace taser
