#pragma once

#include <cstdint>
#include <vector>

#include "taser/scoring.hpp"

namespace taser {

/// Wireless link parameters used to size the per-round coefficient budget.
/// snr is a linear power ratio, not dB.
struct ChannelParams {
    double bandwidth_hz = 0.0;
    double snr = 0.0;
    double slot_seconds = 0.0;
    int bits_per_coeff = 0;
};

/// The frequency indices a node retains for one round, plus the effective k
/// and the two bounds it was derived from. Indices are strictly increasing.
struct SelectionSet {
    std::vector<std::uint32_t> indices;
    std::size_t k_effective = 0;
    std::size_t k_bw = 0;
    std::size_t k_adv = 0;
};

/// Shannon capacity W * log2(1 + snr) in bits/s. Rejects nonpositive inputs.
double shannon_rate(double bandwidth_hz, double snr);

/// Largest coefficient count transmittable in one slot:
/// floor(rate * slot_seconds / bits_per_coeff).
std::size_t k_bandwidth(const ChannelParams& channel);

/// min(k_bw, k_adv) capped at d. A result of zero is a configuration error
/// (a round that retains no coefficients is undefined) and throws.
std::size_t effective_k(std::size_t k_bw, std::size_t k_adv, std::size_t d);

/// Deterministic top-k: picks the k highest-scoring indices, breaking score
/// ties in favor of the lower frequency index, and returns them sorted
/// ascending. Requires 1 <= k <= d.
SelectionSet top_k_indices(const FrequencyScore& score, std::size_t k);

}  // namespace taser
