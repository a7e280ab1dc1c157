#include "taser/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace taser {

double shannon_rate(double bandwidth_hz, double snr) {
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
        throw std::invalid_argument("shannon_rate: bandwidth must be positive");
    }
    if (!(snr > 0.0) || !std::isfinite(snr)) {
        throw std::invalid_argument("shannon_rate: snr must be positive");
    }
    return bandwidth_hz * std::log2(1.0 + snr);
}

std::size_t k_bandwidth(const ChannelParams& channel) {
    if (!(channel.slot_seconds > 0.0) || !std::isfinite(channel.slot_seconds)) {
        throw std::invalid_argument("k_bandwidth: slot_seconds must be positive");
    }
    if (channel.bits_per_coeff <= 0) {
        throw std::invalid_argument("k_bandwidth: bits_per_coeff must be positive");
    }
    const double rate = shannon_rate(channel.bandwidth_hz, channel.snr);
    const double k = std::floor(rate * channel.slot_seconds /
                                static_cast<double>(channel.bits_per_coeff));
    return static_cast<std::size_t>(k);
}

std::size_t effective_k(std::size_t k_bw, std::size_t k_adv, std::size_t d) {
    if (k_adv < 1) {
        throw std::invalid_argument("effective_k: k_adv must be at least 1");
    }
    if (d < 1) {
        throw std::invalid_argument("effective_k: dimension must be at least 1");
    }
    const std::size_t k = std::min({k_bw, k_adv, d});
    if (k == 0) {
        throw std::invalid_argument(
            "effective_k: channel budget admits zero coefficients per round");
    }
    return k;
}

SelectionSet top_k_indices(const FrequencyScore& score, std::size_t k) {
    const std::size_t d = score.dim();
    if (k < 1 || k > d) {
        throw std::invalid_argument("top_k_indices: k out of range");
    }
    for (double s : score.scores) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("top_k_indices: non-finite score");
        }
    }
    std::vector<std::uint32_t> order(d);
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     order.end(), [&](std::uint32_t a, std::uint32_t b) {
                         if (score.scores[a] != score.scores[b]) {
                             return score.scores[a] > score.scores[b];
                         }
                         return a < b;
                     });
    order.resize(k);
    std::sort(order.begin(), order.end());

    SelectionSet out;
    out.indices = std::move(order);
    out.k_effective = k;
    out.k_bw = k;
    out.k_adv = k;
    return out;
}

}  // namespace taser
