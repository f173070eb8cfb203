// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>

namespace sidonforge {

using Vec3 = std::array<double, 3>;

/// How the Sabine constant 0.161 s/m is obtained. `Derived` uses
/// 24 ln(10) / c, which is 0.1611 at c = 343 m/s.
enum class SabineConstant { Fixed0161, Derived };

/// Rectangular ("shoebox") room with one omnidirectional source and mic.
struct RoomSpec {
    Vec3 dims_m{};
    double rt60_s = 0.0;
    Vec3 source_m{};
    Vec3 mic_m{};
    double speed_of_sound_mps = 343.0;
    int max_order_cap = 32;
    SabineConstant sabine = SabineConstant::Fixed0161;

    /// When set, these replace the values derived from rt60_s.
    std::optional<double> absorption_override;
    std::optional<int> max_order_override;
};

struct Rir {
    std::vector<double> taps;
    int sample_rate_hz = 0;

    double duration_seconds() const {
        return static_cast<double>(taps.size()) / static_cast<double>(sample_rate_hz);
    }
};

struct SabineSolution {
    double absorption = 0.0;  // energy absorption coefficient, (0, 1]
    int max_order = 0;
};

double sabine_constant(SabineConstant variant, double speed_of_sound_mps);

/// Absorption a = K V / (RT60 S); max order = min(ceil(c RT60 / min(dims)), cap).
/// Throws AbsorptionInfeasible when a > 1.
SabineSolution inverse_sabine(double rt60_s, const Vec3& dims_m, double speed_of_sound_mps = 343.0,
                              int max_order_cap = 32, SabineConstant variant = SabineConstant::Fixed0161);

/// Throws InvalidGeometry if the source or mic lies outside the room or the
/// two are closer than 1 cm.
void validate_geometry(const RoomSpec& room);

/// Image-source RIR. Each image of reflection order k at distance d adds
/// (1 - a)^(k/2) / (4 pi d) at delay d / c, spread with an 81-tap Hann-windowed
/// sinc centred on the exact (fractional) delay. Taps that would precede
/// index 0 are dropped; no global delay is added.
Rir simulate_rir(const RoomSpec& room, int sample_rate_hz);

/// Schroeder backward integration + least-squares T20 fit (-5 to -25 dB),
/// extrapolated to 60 dB. Throws DecayRangeUnavailable if the decay curve never
/// reaches -25 dB or the RIR is shorter than 10 ms.
double estimate_rt60(const Rir& rir);

}  // namespace sidonforge
