#pragma once

// Self-contained FFT: iterative radix-2 for power-of-two sizes, Bluestein's
// chirp-z for everything else. Pure functions, no planner state, safe to call
// from any thread.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "physaudit/error.hpp"

namespace physaudit::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

// Bluestein: re-expresses an arbitrary-length DFT as a circular convolution
// that a power-of-two FFT can evaluate.
inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const std::size_t m = next_pow2(2 * n - 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small for large n
        const std::size_t k2 = (static_cast<unsigned long long>(k) * k) % (2 * n);
        const double ang = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }

    std::vector<cplx> x(m, cplx(0.0, 0.0));
    std::vector<cplx> y(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);

    fft_pow2(x, false);
    fft_pow2(y, false);
    for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
    fft_pow2(x, true);

    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv;
    }
}

}  // namespace detail

inline void transform(std::vector<cplx>& a, bool inverse = false) {
    if (a.empty()) throw Error("empty_fft", "cannot transform an empty buffer");
    if (a.size() == 1) return;
    if (is_pow2(a.size())) {
        detail::fft_pow2(a, inverse);
    } else {
        detail::fft_bluestein(a, inverse);
    }
}

inline std::vector<cplx> forward(const std::vector<cplx>& input) {
    std::vector<cplx> a = input;
    transform(a, false);
    return a;
}

inline std::vector<cplx> inverse(const std::vector<cplx>& input) {
    std::vector<cplx> a = input;
    transform(a, true);
    return a;
}

// Real-input FFT; returns the n/2+1 non-redundant bins.
inline std::vector<cplx> real_forward(const std::vector<double>& input) {
    std::vector<cplx> a(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) a[i] = cplx(input[i], 0.0);
    transform(a, false);
    a.resize(input.size() / 2 + 1);
    return a;
}

}  // namespace physaudit::fft
