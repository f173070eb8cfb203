// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"
#include "sidonforge/rir.hpp"

namespace sidonforge {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::span<std::complex<double>> data, bool inverse) {
    const std::size_t n = data.size();
    if (n <= 1) return;
    if ((n & (n - 1)) != 0) throw InvalidArgument("fft size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    // Twiddles evaluated directly (no recurrence) to keep rounding error flat
    // for long transforms.
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[k] = {std::cos(angle), std::sin(angle)};
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<double> t = data[start + k + half] * twiddle[k * stride];
                const std::complex<double> u = data[start + k];
                data[start + k] = u + t;
                data[start + k + half] = u - t;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : data) x *= scale;
    }
}

std::vector<double> fft_convolve_full(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);

    // Both real inputs share one forward transform: z = a + i*b.
    std::vector<std::complex<double>> z(n);
    for (std::size_t i = 0; i < a.size(); ++i) z[i].real(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) z[i].imag(b[i]);
    fft_inplace(z, false);

    std::vector<std::complex<double>> product(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::complex<double> zk = z[k];
        const std::complex<double> zc = std::conj(z[(n - k) & (n - 1)]);
        const std::complex<double> fa = 0.5 * (zk + zc);
        const std::complex<double> fb = std::complex<double>(0.0, -0.5) * (zk - zc);
        product[k] = fa * fb;
    }
    fft_inplace(product, true);

    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = product[i].real();
    return out;
}

Waveform fft_convolve(const Waveform& signal, const Rir& kernel) {
    require_valid(signal, "fft_convolve");
    if (signal.sample_rate_hz != kernel.sample_rate_hz) {
        throw RateMismatch("signal at " + std::to_string(signal.sample_rate_hz) + " Hz, kernel at " +
                           std::to_string(kernel.sample_rate_hz) + " Hz");
    }
    if (kernel.taps.empty()) throw InvalidArgument("fft_convolve: empty kernel");
    auto full = fft_convolve_full(signal.samples, kernel.taps);
    full.resize(signal.size());
    return Waveform(std::move(full), signal.sample_rate_hz);
}

double rms(std::span<const double> samples) {
    if (samples.empty()) return 0.0;
    long double acc = 0.0L;
    for (double x : samples) acc += static_cast<long double>(x) * x;
    return static_cast<double>(std::sqrt(acc / static_cast<long double>(samples.size())));
}

}  // namespace sidonforge
