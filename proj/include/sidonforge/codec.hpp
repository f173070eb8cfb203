// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sidonforge/waveform.hpp"

namespace sidonforge {

enum class CodecKind { Identity, External };

/// Configuration of the lossy-codec round trip.
///
/// External templates are run through `/bin/sh -c` after placeholder
/// substitution. Encode: {input} {output} {bitrate_kbps}. Decode: {input}
/// {output}. {bitrate_kbps} expands to the requested bitrate rounded to the
/// nearest integer. Paths are single-quoted before substitution. An empty
/// template falls back to the SIDONFORGE_CODEC_ENCODE / SIDONFORGE_CODEC_DECODE
/// environment variables.
struct CodecConfig {
    CodecKind kind = CodecKind::Identity;
    std::string encode_cmd;
    std::string decode_cmd;
    std::string encoded_extension = "mp3";
    std::string bitrate_mode = "abr";
    std::filesystem::path temp_root;  // empty: system temp directory
    int max_concurrent = 4;
    /// Rates the encoder accepts; empty means any. Other rates are converted
    /// to the nearest accepted rate and back around the round trip.
    std::vector<int> supported_rates;
};

struct TranscodeResult {
    Waveform audio;
    /// Samples the decoded stream was shifted left by to realign with the input.
    std::int64_t lag_samples = 0;
    /// Normalized cross-correlation at the chosen lag (1.0 for identity).
    double alignment_correlation = 1.0;
};

/// Estimates the delay of `decoded` relative to `reference` by cross-correlating
/// the first 500 ms, searching lags in [-500 ms, +500 ms]. Returns the lag and
/// its normalized correlation; a silent reference yields lag 0, correlation 1.
struct AlignmentEstimate {
    std::int64_t lag = 0;
    double correlation = 1.0;
};
AlignmentEstimate estimate_alignment(const Waveform& reference, const Waveform& decoded);

class CodecBackend {
public:
    /// Bit-exact passthrough.
    static CodecBackend identity();

    /// Validates the templates and resolves the executables on PATH.
    /// Throws BackendUnavailable when an executable cannot be found and
    /// FatalConfig when a template is empty or lacks required placeholders.
    static CodecBackend external(CodecConfig config);

    static CodecBackend from_config(const CodecConfig& config);

    CodecKind kind() const noexcept { return config_.kind; }
    const CodecConfig& config() const noexcept { return config_; }

    bool accepts_rate(int rate_hz) const noexcept;
    int nearest_accepted_rate(int rate_hz) const noexcept;

    /// Encode/decode round trip. Output length and rate equal the input's.
    /// Throws BackendUnavailable, BackendFailure or AlignmentFailure.
    TranscodeResult transcode(const Waveform& w, double bitrate_kbps) const;

private:
    struct Shared;
    explicit CodecBackend(CodecConfig config);

    CodecConfig config_;
    std::shared_ptr<Shared> shared_;
};

/// Resolves the first word of a command template against PATH (or as a path).
bool command_resolvable(const std::string& command_template);

}  // namespace sidonforge
