#pragma once

#include <cstddef>
#include <vector>

namespace taser {

/// A flattened model gradient: the full parameter gradient concatenated into
/// one real vector of dimension d. This is the unit all spectral analysis
/// operates on; there is no per-layer transform.
struct GradientVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

/// Orthonormal DCT-II coefficients of a GradientVector. Same length as the
/// originating signal; the scaling (sqrt(1/d) at k=0, sqrt(2/d) elsewhere)
/// makes the transform an isometry, so squared coefficients sum to the
/// squared signal norm.
struct Spectrum {
    std::vector<double> coeffs;

    std::size_t dim() const { return coeffs.size(); }
};

/// Orthonormal DCT-II. Fast path, O(d log d) for any d (not just powers of
/// two). Throws std::invalid_argument on empty or non-finite input.
Spectrum dct_forward(const GradientVector& signal);

/// Literal O(d^2) transcription of the DCT-II summation. This is the
/// normative definition; dct_forward is only correct insofar as it matches
/// this within 1e-9.
Spectrum dct_forward_naive(const GradientVector& signal);

/// Orthonormal DCT-III (the inverse of dct_forward). Roundtrip error is
/// bounded by 1e-9 per entry for d up to 4096.
GradientVector dct_inverse(const Spectrum& spectrum);

/// Per-frequency energy: entry k is coeffs[k]^2.
std::vector<double> frequency_energy(const Spectrum& spectrum);

}  // namespace taser
