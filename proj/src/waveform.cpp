// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/waveform.hpp"

#include <algorithm>
#include <string>

#include "sidonforge/error.hpp"

namespace sidonforge {

bool is_supported_rate(int rate_hz) noexcept {
    return std::find(kSupportedRates.begin(), kSupportedRates.end(), rate_hz) != kSupportedRates.end();
}

void require_valid(const Waveform& w, const char* what) {
    if (w.samples.empty()) {
        throw InvalidArgument(std::string(what) + ": waveform has no samples");
    }
    if (w.sample_rate_hz <= 0) {
        throw InvalidArgument(std::string(what) + ": sample rate must be positive");
    }
}

void fit_length(Waveform& w, std::size_t length) { w.samples.resize(length, 0.0); }

}  // namespace sidonforge
