// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"

namespace sidonforge {
namespace {

constexpr double kStopbandDb = 90.0;
constexpr double kPassbandEdge = 0.45;  // fraction of the lower sample rate
constexpr double kStopbandEdge = 0.50;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

// Polyphase decomposition of a Kaiser-windowed sinc prototype running at
// source_rate * up. Phase p holds taps h(p + j*up), j in [-half, half].
struct PolyphaseBank {
    std::int64_t up = 1;
    std::int64_t down = 1;
    std::int64_t half = 0;
    std::vector<double> coefs;  // up rows of (2*half + 1)

    const double* phase(std::int64_t p) const { return coefs.data() + p * (2 * half + 1); }
};

PolyphaseBank design(int source_rate, int target_rate) {
    const std::int64_t g = std::gcd(source_rate, target_rate);
    PolyphaseBank bank;
    bank.up = target_rate / g;
    bank.down = source_rate / g;

    const double low_rate = std::min(source_rate, target_rate);
    const double proto_rate = static_cast<double>(source_rate) * static_cast<double>(bank.up);
    const double cutoff = 0.5 * (kPassbandEdge + kStopbandEdge) * low_rate / proto_rate;  // cycles/sample
    const double transition = (kStopbandEdge - kPassbandEdge) * low_rate / proto_rate;
    const double beta = 0.1102 * (kStopbandDb - 8.7);
    const double order = (kStopbandDb - 7.95) / (2.285 * 2.0 * M_PI * transition);

    bank.half = static_cast<std::int64_t>(std::ceil(order / (2.0 * static_cast<double>(bank.up)))) + 1;
    const double support = static_cast<double>((bank.half + 1) * bank.up);
    const double i0_beta = std::cyl_bessel_i(0.0, beta);
    const std::int64_t width = 2 * bank.half + 1;

    bank.coefs.resize(static_cast<std::size_t>(bank.up * width));
    for (std::int64_t p = 0; p < bank.up; ++p) {
        double* row = bank.coefs.data() + p * width;
        double sum = 0.0;
        for (std::int64_t j = -bank.half; j <= bank.half; ++j) {
            const double t = static_cast<double>(p + j * bank.up);
            const double r = t / support;
            double value = 0.0;
            if (std::abs(r) < 1.0) {
                const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
                value = 2.0 * cutoff * sinc(2.0 * cutoff * t) * window;
            }
            row[j + bank.half] = value;
            sum += value;
        }
        // Unity DC gain per phase.
        for (std::int64_t j = 0; j < width; ++j) row[j] /= sum;
    }
    return bank;
}

// Filter banks are immutable once designed and shared across threads.
std::shared_ptr<const PolyphaseBank> cached_bank(int source_rate, int target_rate) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const PolyphaseBank>> cache;
    const std::lock_guard lock(mutex);
    auto& slot = cache[{source_rate, target_rate}];
    if (!slot) slot = std::make_shared<const PolyphaseBank>(design(source_rate, target_rate));
    return slot;
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate_hz) {
    require_valid(w, "resample");
    if (target_rate_hz != w.sample_rate_hz && !is_supported_rate(target_rate_hz)) {
        throw UnsupportedRate("cannot resample to " + std::to_string(target_rate_hz) + " Hz");
    }
    return convert_rate(w, target_rate_hz);
}

Waveform convert_rate(const Waveform& w, int target_rate_hz) {
    require_valid(w, "convert_rate");
    if (target_rate_hz == w.sample_rate_hz) return w;
    if (target_rate_hz <= 0) throw UnsupportedRate("target rate must be positive");

    const auto bank_ptr = cached_bank(w.sample_rate_hz, target_rate_hz);
    const PolyphaseBank& bank = *bank_ptr;
    const auto in_len = static_cast<std::int64_t>(w.size());
    const std::int64_t src = w.sample_rate_hz;
    const std::int64_t out_len = (in_len * target_rate_hz + src / 2) / src;

    std::vector<double> out(static_cast<std::size_t>(out_len));
    const double* x = w.samples.data();
    for (std::int64_t m = 0; m < out_len; ++m) {
        const std::int64_t u = m * bank.down;
        const std::int64_t base = u / bank.up;
        const double* h = bank.phase(u % bank.up);
        // Input index base - j for j in [-half, half], clipped to the signal.
        const std::int64_t j_lo = std::max(-bank.half, base - (in_len - 1));
        const std::int64_t j_hi = std::min(bank.half, base);
        double acc = 0.0;
        for (std::int64_t j = j_lo; j <= j_hi; ++j) acc += h[j + bank.half] * x[base - j];
        out[static_cast<std::size_t>(m)] = acc;
    }
    return Waveform(std::move(out), target_rate_hz);
}

}  // namespace sidonforge
