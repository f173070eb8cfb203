// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace sidonforge {

/// Sample rates accepted by the resampler and the band-limitation stage.
inline constexpr std::array<int, 6> kSupportedRates = {8000, 16000, 22050, 24000, 44100, 48000};

bool is_supported_rate(int rate_hz) noexcept;

/// Mono audio buffer. Samples are doubles with nominal full scale +-1.0; no
/// normalization is ever applied implicitly.
struct Waveform {
    std::vector<double> samples;
    int sample_rate_hz = 0;

    Waveform() = default;
    Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate_hz(rate) {}

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    double duration_seconds() const noexcept {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
    }
    std::span<const double> view() const noexcept { return samples; }

    bool operator==(const Waveform&) const = default;
};

/// Throws InvalidArgument unless the waveform is non-empty with a positive rate.
void require_valid(const Waveform& w, const char* what);

/// Pads with zeros or truncates in place so that `w.size() == length`.
void fit_length(Waveform& w, std::size_t length);

}  // namespace sidonforge
