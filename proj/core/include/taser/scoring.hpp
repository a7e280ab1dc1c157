#pragma once

#include <vector>

#include "taser/spectral.hpp"

namespace taser {

/// The B per-mini-batch spectra a node computes in one round. All spectra
/// share the same dimension d.
struct BatchSpectra {
    std::vector<Spectrum> spectra;

    std::size_t batches() const { return spectra.size(); }
    std::size_t dim() const { return spectra.empty() ? 0 : spectra.front().dim(); }
};

/// Per-frequency task-relevance score: alpha * energy + (1 - alpha) * direction.
struct FrequencyScore {
    std::vector<double> scores;
    double alpha = 0.5;

    std::size_t dim() const { return scores.size(); }
};

/// Accumulated energy per frequency: entry k is the sum over batches of the
/// squared k-th coefficient.
std::vector<double> energy_term(const BatchSpectra& batch_spectra);

/// Directional agreement per frequency: entry k is |sum over batches of the
/// k-th coefficient|. Cancels when batch directions disagree.
std::vector<double> direction_term(const BatchSpectra& batch_spectra);

/// Convex combination of the two terms. alpha must be in [0, 1]; alpha = 1
/// reduces exactly to energy_term and alpha = 0 to direction_term.
FrequencyScore frequency_score(const BatchSpectra& batch_spectra, double alpha);

}  // namespace taser
