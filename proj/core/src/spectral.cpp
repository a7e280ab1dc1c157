#include "taser/spectral.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace taser {

namespace {

constexpr double kPi = std::numbers::pi;

using cplx = std::complex<double>;

void require_finite_nonempty(const std::vector<double>& v, const char* what) {
    if (v.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty input");
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
        }
    }
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// Twiddle table for a size-n FFT (n a power of two): w[j] = exp(-2*pi*i*j/n).
std::vector<cplx> make_roots(std::size_t n) {
    std::vector<cplx> w(n / 2);
    for (std::size_t j = 0; j < n / 2; ++j) {
        const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
        w[j] = {std::cos(ang), std::sin(ang)};
    }
    return w;
}

// In-place iterative radix-2 FFT. roots must come from make_roots(a.size()).
void fft_pow2(std::vector<cplx>& a, const std::vector<cplx>& roots, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx w = roots[j * stride];
                if (inverse) w = std::conj(w);
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= scale;
    }
}

// Per-size transform plan. The DCT-II of length n is computed as a length-n
// complex DFT of the even/odd-reordered signal followed by a half-sample
// phase rotation; non-power-of-two DFTs go through Bluestein's chirp-z
// reduction to a power-of-two convolution. Chirp angles use j^2 mod 2n so
// they stay small and exact in double precision.
struct DctPlan {
    std::size_t n = 0;
    bool pow2 = false;
    std::vector<cplx> roots;       // FFT twiddles for size n (pow2) or conv_size
    std::vector<cplx> half_phase;  // exp(-i*pi*k/(2n)), k = 0..n-1

    // Bluestein state.
    std::size_t conv_size = 0;
    std::vector<cplx> chirp;             // c[j] = exp(-i*pi*(j^2 mod 2n)/n)
    std::vector<cplx> chirp_kernel_fft;  // FFT of the wrapped conj-chirp kernel
};

DctPlan make_plan(std::size_t n) {
    DctPlan p;
    p.n = n;
    p.half_phase.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = -kPi * static_cast<double>(k) / (2.0 * static_cast<double>(n));
        p.half_phase[k] = {std::cos(ang), std::sin(ang)};
    }
    if (is_pow2(n)) {
        p.pow2 = true;
        p.roots = make_roots(n);
        return p;
    }
    p.conv_size = next_pow2(2 * n - 1);
    p.roots = make_roots(p.conv_size);
    p.chirp.resize(n);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t jj = static_cast<std::uint64_t>(j) * j % two_n;
        const double ang = -kPi * static_cast<double>(jj) / static_cast<double>(n);
        p.chirp[j] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<cplx> kernel(p.conv_size, cplx{0.0, 0.0});
    kernel[0] = std::conj(p.chirp[0]);
    for (std::size_t m = 1; m < n; ++m) {
        kernel[m] = std::conj(p.chirp[m]);
        kernel[p.conv_size - m] = std::conj(p.chirp[m]);
    }
    fft_pow2(kernel, p.roots, false);
    p.chirp_kernel_fft = std::move(kernel);
    return p;
}

// Forward DFT of length plan.n via Bluestein: X[k] = c[k] * (a (*) b)[k]
// with a[j] = x[j]*c[j] and b the conjugate chirp.
std::vector<cplx> dft_bluestein(const DctPlan& p, const std::vector<cplx>& x) {
    std::vector<cplx> a(p.conv_size, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < p.n; ++j) a[j] = x[j] * p.chirp[j];
    fft_pow2(a, p.roots, false);
    for (std::size_t m = 0; m < p.conv_size; ++m) a[m] *= p.chirp_kernel_fft[m];
    fft_pow2(a, p.roots, true);
    std::vector<cplx> out(p.n);
    for (std::size_t k = 0; k < p.n; ++k) out[k] = a[k] * p.chirp[k];
    return out;
}

std::vector<cplx> dft(const DctPlan& p, std::vector<cplx> x, bool inverse) {
    if (p.pow2) {
        fft_pow2(x, p.roots, inverse);
        return x;
    }
    if (!inverse) return dft_bluestein(p, x);
    for (auto& v : x) v = std::conj(v);
    std::vector<cplx> y = dft_bluestein(p, x);
    const double scale = 1.0 / static_cast<double>(p.n);
    for (auto& v : y) v = std::conj(v) * scale;
    return y;
}

const DctPlan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, DctPlan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_plan(n)).first;
    return it->second;
}

}  // namespace

Spectrum dct_forward(const GradientVector& signal) {
    require_finite_nonempty(signal.values, "dct_forward");
    const std::size_t n = signal.dim();
    const DctPlan& plan = plan_for(n);

    // Even samples ascending, odd samples descending.
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 2 == 0) {
            v[i / 2] = cplx{signal.values[i], 0.0};
        } else {
            v[n - 1 - i / 2] = cplx{signal.values[i], 0.0};
        }
    }
    const std::vector<cplx> V = dft(plan, std::move(v), false);

    Spectrum out;
    out.coeffs.resize(n);
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double c = (V[k] * plan.half_phase[k]).real();
        out.coeffs[k] = (k == 0 ? s0 : sk) * c;
    }
    return out;
}

Spectrum dct_forward_naive(const GradientVector& signal) {
    require_finite_nonempty(signal.values, "dct_forward_naive");
    const std::size_t n = signal.dim();
    Spectrum out;
    out.coeffs.resize(n);
    const double s0 = std::sqrt(1.0 / static_cast<double>(n));
    const double sk = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += signal.values[i] *
                   std::cos(kPi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) /
                            (2.0 * static_cast<double>(n)));
        }
        out.coeffs[k] = (k == 0 ? s0 : sk) * sum;
    }
    return out;
}

GradientVector dct_inverse(const Spectrum& spectrum) {
    require_finite_nonempty(spectrum.coeffs, "dct_inverse");
    const std::size_t n = spectrum.dim();
    const DctPlan& plan = plan_for(n);

    // Undo the orthonormal scaling, rebuild the Hermitian DFT of the
    // reordered signal, then invert the DFT and the reordering.
    const double u0 = std::sqrt(static_cast<double>(n));
    const double uk = std::sqrt(static_cast<double>(n) / 2.0);
    std::vector<double> c(n);
    c[0] = spectrum.coeffs[0] * u0;
    for (std::size_t k = 1; k < n; ++k) c[k] = spectrum.coeffs[k] * uk;

    std::vector<cplx> V(n);
    V[0] = cplx{c[0], 0.0};
    for (std::size_t k = 1; k < n; ++k) {
        V[k] = cplx{c[k], -c[n - k]} * std::conj(plan.half_phase[k]);
    }
    const std::vector<cplx> v = dft(plan, std::move(V), true);

    GradientVector out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 2 == 0) {
            out.values[i] = v[i / 2].real();
        } else {
            out.values[i] = v[n - 1 - i / 2].real();
        }
    }
    return out;
}

std::vector<double> frequency_energy(const Spectrum& spectrum) {
    require_finite_nonempty(spectrum.coeffs, "frequency_energy");
    std::vector<double> e(spectrum.dim());
    for (std::size_t k = 0; k < spectrum.dim(); ++k) {
        e[k] = spectrum.coeffs[k] * spectrum.coeffs[k];
    }
    return e;
}

}  // namespace taser
