#include "taser/scoring.hpp"

#include <cmath>
#include <stdexcept>

namespace taser {

namespace {

void validate(const BatchSpectra& bs, const char* what) {
    if (bs.spectra.empty()) {
        throw std::invalid_argument(std::string(what) + ": no spectra");
    }
    const std::size_t d = bs.spectra.front().dim();
    if (d == 0) {
        throw std::invalid_argument(std::string(what) + ": zero-dimensional spectrum");
    }
    for (const Spectrum& s : bs.spectra) {
        if (s.dim() != d) {
            throw std::invalid_argument(std::string(what) + ": spectra of mixed dimension");
        }
        for (double x : s.coeffs) {
            if (!std::isfinite(x)) {
                throw std::invalid_argument(std::string(what) + ": non-finite coefficient");
            }
        }
    }
}

}  // namespace

std::vector<double> energy_term(const BatchSpectra& batch_spectra) {
    validate(batch_spectra, "energy_term");
    const std::size_t d = batch_spectra.dim();
    std::vector<double> e(d, 0.0);
    for (const Spectrum& s : batch_spectra.spectra) {
        for (std::size_t k = 0; k < d; ++k) {
            e[k] += s.coeffs[k] * s.coeffs[k];
        }
    }
    return e;
}

std::vector<double> direction_term(const BatchSpectra& batch_spectra) {
    validate(batch_spectra, "direction_term");
    const std::size_t d = batch_spectra.dim();
    std::vector<double> sum(d, 0.0);
    for (const Spectrum& s : batch_spectra.spectra) {
        for (std::size_t k = 0; k < d; ++k) {
            sum[k] += s.coeffs[k];
        }
    }
    for (double& x : sum) x = std::fabs(x);
    return sum;
}

FrequencyScore frequency_score(const BatchSpectra& batch_spectra, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("frequency_score: alpha outside [0, 1]");
    }
    const std::vector<double> e = energy_term(batch_spectra);
    const std::vector<double> dir = direction_term(batch_spectra);
    FrequencyScore out;
    out.alpha = alpha;
    out.scores.resize(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        out.scores[k] = alpha * e[k] + (1.0 - alpha) * dir[k];
    }
    return out;
}

}  // namespace taser
