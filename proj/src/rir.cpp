// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/rir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sidonforge/error.hpp"

namespace sidonforge {
namespace {

constexpr int kFracDelayHalfWidth = 40;  // 81-tap interpolator
constexpr double kMinSourceMicDistance = 0.01;

struct AxisImage {
    double offset;  // image coordinate minus mic coordinate
    int order;
};

// Images along one axis: x = (1 - 2q) s + 2 n L with |n - q| + |n| wall hits.
std::vector<AxisImage> axis_images(double source, double mic, double length, int max_order) {
    std::vector<AxisImage> images;
    for (int n = -max_order; n <= max_order; ++n) {
        for (int q = 0; q <= 1; ++q) {
            const int order = std::abs(n - q) + std::abs(n);
            if (order > max_order) continue;
            const double image = (1 - 2 * q) * source + 2.0 * n * length;
            images.push_back({image - mic, order});
        }
    }
    return images;
}

std::string fmt_vec(const Vec3& v) {
    return "(" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " + std::to_string(v[2]) + ")";
}

}  // namespace

double sabine_constant(SabineConstant variant, double speed_of_sound_mps) {
    if (variant == SabineConstant::Derived) return 24.0 * std::numbers::ln10 / speed_of_sound_mps;
    return 0.161;
}

SabineSolution inverse_sabine(double rt60_s, const Vec3& dims_m, double speed_of_sound_mps, int max_order_cap,
                              SabineConstant variant) {
    if (!(rt60_s > 0.0)) throw InvalidArgument("rt60 must be positive");
    for (double d : dims_m) {
        if (!(d > 0.0)) throw InvalidArgument("room dimensions must be positive");
    }
    if (!(speed_of_sound_mps > 0.0)) throw InvalidArgument("speed of sound must be positive");
    if (max_order_cap < 0) throw InvalidArgument("max order cap must be non-negative");

    const auto [lx, ly, lz] = dims_m;
    const double volume = lx * ly * lz;
    const double surface = 2.0 * (lx * ly + ly * lz + lx * lz);
    const double absorption = sabine_constant(variant, speed_of_sound_mps) * volume / (rt60_s * surface);
    if (absorption > 1.0) {
        throw AbsorptionInfeasible("RT60 " + std::to_string(rt60_s) + " s needs absorption " +
                                   std::to_string(absorption) + " > 1 in room " + fmt_vec(dims_m));
    }
    const double min_dim = std::min({lx, ly, lz});
    const double raw_order = std::ceil(speed_of_sound_mps * rt60_s / min_dim);
    const int max_order = static_cast<int>(std::min<double>(raw_order, max_order_cap));
    return {absorption, max_order};
}

void validate_geometry(const RoomSpec& room) {
    for (int axis = 0; axis < 3; ++axis) {
        const double len = room.dims_m[axis];
        if (!(len > 0.0)) throw InvalidGeometry("room dimensions must be positive, got " + fmt_vec(room.dims_m));
        const double s = room.source_m[axis];
        const double m = room.mic_m[axis];
        if (!(s > 0.0 && s < len)) throw InvalidGeometry("source " + fmt_vec(room.source_m) + " is not inside the room");
        if (!(m > 0.0 && m < len)) throw InvalidGeometry("mic " + fmt_vec(room.mic_m) + " is not inside the room");
    }
    const double dx = room.source_m[0] - room.mic_m[0];
    const double dy = room.source_m[1] - room.mic_m[1];
    const double dz = room.source_m[2] - room.mic_m[2];
    if (std::sqrt(dx * dx + dy * dy + dz * dz) <= kMinSourceMicDistance) {
        throw InvalidGeometry("source and mic are closer than 1 cm");
    }
}

Rir simulate_rir(const RoomSpec& room, int sample_rate_hz) {
    if (sample_rate_hz <= 0) throw InvalidArgument("sample rate must be positive");
    validate_geometry(room);

    double absorption = 0.0;
    int max_order = 0;
    if (room.absorption_override && room.max_order_override) {
        absorption = *room.absorption_override;
        max_order = *room.max_order_override;
    } else {
        const SabineSolution sol =
            inverse_sabine(room.rt60_s, room.dims_m, room.speed_of_sound_mps, room.max_order_cap, room.sabine);
        absorption = room.absorption_override.value_or(sol.absorption);
        max_order = room.max_order_override.value_or(sol.max_order);
    }
    if (!(absorption >= 0.0 && absorption <= 1.0)) throw InvalidArgument("absorption must lie in [0, 1]");
    if (max_order < 0) throw InvalidArgument("max order must be non-negative");

    const double c = room.speed_of_sound_mps;
    const double fs = sample_rate_hz;
    const double reflection = std::sqrt(1.0 - absorption);
    std::vector<double> gain_by_order(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= max_order; ++k) gain_by_order[k] = std::pow(reflection, k);

    std::array<std::vector<AxisImage>, 3> axes;
    for (int a = 0; a < 3; ++a) axes[a] = axis_images(room.source_m[a], room.mic_m[a], room.dims_m[a], max_order);

    struct Arrival {
        double delay_samples;
        double amplitude;
    };
    std::vector<Arrival> arrivals;
    double max_delay = 0.0;
    for (const auto& ix : axes[0]) {
        for (const auto& iy : axes[1]) {
            const int oxy = ix.order + iy.order;
            if (oxy > max_order) continue;
            for (const auto& iz : axes[2]) {
                const int order = oxy + iz.order;
                if (order > max_order) continue;
                const double gain = gain_by_order[order];
                if (gain == 0.0) continue;
                const double d = std::sqrt(ix.offset * ix.offset + iy.offset * iy.offset + iz.offset * iz.offset);
                if (d < 1e-9) continue;
                const double delay = d / c * fs;
                arrivals.push_back({delay, gain / (4.0 * std::numbers::pi * d)});
                max_delay = std::max(max_delay, delay);
            }
        }
    }

    const auto length = static_cast<std::size_t>(std::floor(max_delay)) + kFracDelayHalfWidth + 2;
    std::vector<double> taps(length, 0.0);

    // sin(pi (j - f)) = -(-1)^j sin(pi f) and the Hann window term is expanded
    // with the angle-sum identity, so each arrival costs two trig calls.
    constexpr int width = 2 * kFracDelayHalfWidth + 1;
    constexpr double window_span = kFracDelayHalfWidth + 1.0;
    std::array<double, width> cos_j{};
    std::array<double, width> sin_j{};
    for (int j = -kFracDelayHalfWidth; j <= kFracDelayHalfWidth; ++j) {
        cos_j[j + kFracDelayHalfWidth] = std::cos(std::numbers::pi * j / window_span);
        sin_j[j + kFracDelayHalfWidth] = std::sin(std::numbers::pi * j / window_span);
    }

    for (const Arrival& arr : arrivals) {
        const double whole = std::floor(arr.delay_samples);
        const double frac = arr.delay_samples - whole;
        const auto center = static_cast<std::ptrdiff_t>(whole);
        if (frac < 1e-9) {
            taps[static_cast<std::size_t>(center)] += arr.amplitude;
            continue;
        }
        // Near-integer delays from below: 1 - frac is exact, pi * frac is not.
        const double sin_pf = std::sin(std::numbers::pi * (frac <= 0.5 ? frac : 1.0 - frac));
        const double cos_wf = std::cos(std::numbers::pi * frac / window_span);
        const double sin_wf = std::sin(std::numbers::pi * frac / window_span);
        for (int j = -kFracDelayHalfWidth; j <= kFracDelayHalfWidth; ++j) {
            const std::ptrdiff_t idx = center + j;
            if (idx < 0) continue;
            const double t = j - frac;
            const double sign = (j & 1) ? 1.0 : -1.0;
            const double sinc = sign * sin_pf / (std::numbers::pi * t);
            const double cos_t = cos_j[j + kFracDelayHalfWidth] * cos_wf + sin_j[j + kFracDelayHalfWidth] * sin_wf;
            const double window = 0.5 * (1.0 + cos_t);
            taps[static_cast<std::size_t>(idx)] += arr.amplitude * sinc * window;
        }
    }
    return Rir{std::move(taps), sample_rate_hz};
}

double estimate_rt60(const Rir& rir) {
    if (rir.sample_rate_hz <= 0) throw InvalidArgument("sample rate must be positive");
    if (rir.duration_seconds() < 0.010) throw DecayRangeUnavailable("RIR shorter than 10 ms");

    const std::size_t n = rir.taps.size();
    std::vector<long double> edc(n);
    long double acc = 0.0L;
    for (std::size_t i = n; i-- > 0;) {
        acc += static_cast<long double>(rir.taps[i]) * rir.taps[i];
        edc[i] = acc;
    }
    if (!(edc[0] > 0.0L) || !std::isfinite(static_cast<double>(edc[0]))) {
        throw DecayRangeUnavailable("RIR has no finite energy");
    }

    auto level_db = [&](std::size_t i) {
        return 10.0 * std::log10(static_cast<double>(edc[i] / edc[0]));
    };
    std::size_t start = n;
    std::size_t stop = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double db = level_db(i);
        if (start == n && db <= -5.0) start = i;
        if (db <= -25.0) {
            stop = i;
            break;
        }
    }
    if (stop == n) throw DecayRangeUnavailable("energy decay curve never reaches -25 dB");

    // Least-squares line through the finite points of the -5..-25 dB span.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = start; i <= stop; ++i) {
        const double db = level_db(i);
        if (!std::isfinite(db)) continue;
        const double t = static_cast<double>(i) / rir.sample_rate_hz;
        sx += t;
        sy += db;
        sxx += t * t;
        sxy += t * db;
        ++count;
    }
    const double denom = static_cast<double>(count) * sxx - sx * sx;
    if (count < 2 || !(denom > 0.0)) throw DecayRangeUnavailable("decay span too short to fit");
    const double slope = (static_cast<double>(count) * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) throw DecayRangeUnavailable("energy decay curve is not decreasing");
    return -60.0 / slope;
}

}  // namespace sidonforge
