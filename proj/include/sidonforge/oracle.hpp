// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidonforge/pipeline.hpp"
#include "sidonforge/waveform.hpp"

namespace sidonforge::oracle {

// Tolerances used by validate_manifest.
inline constexpr double kSnrToleranceDb = 1e-6;
inline constexpr double kRt60RelativeTolerance = 0.25;
inline constexpr double kRt60PassRate = 0.80;
inline constexpr double kBandEnergyCeilingDb = -50.0;
inline constexpr double kNaturalZeroRunMs = 1.0;
inline constexpr double kRunLengthSlackSamples = 1.0;

/// 20 log10(rms(clean) / rms(noisy - clean)). Throws SilentResidual when the
/// residual is silent and SilentSignal when the clean signal is.
double measure_snr(const Waveform& clean, const Waveform& noisy);

struct ZeroRuns {
    double fraction = 0.0;             // zeroed samples in counted runs / total
    std::vector<double> runs_ms;       // lengths of counted runs
    std::vector<std::size_t> runs_samples;
};

/// Exact-zero run-length scan; runs shorter than `min_run_ms` are ignored.
ZeroRuns measure_zero_runs(const Waveform& w, double min_run_ms = kNaturalZeroRunMs);

/// 10 log10(energy above cutoff / total energy) from a Blackman-Harris
/// windowed periodogram. Returns -inf for an all-zero signal.
double band_energy_above(const Waveform& w, double cutoff_hz);

struct Check {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct EntryReport {
    std::string utterance_id;
    int variant_index = 0;
    std::vector<Check> checks;
    std::string error;
};

struct ValidationReport {
    std::vector<EntryReport> entries;
    std::size_t checks = 0;
    std::size_t failed = 0;
    std::size_t reverb_checked = 0;
    std::size_t reverb_within_tolerance = 0;
    bool pass = false;

    nlohmann::json to_json() const;
};

/// Replays every manifest entry stage by stage from its recorded parameters
/// and checks each applied stage against its oracle. Reverb checks pass in
/// aggregate when at least kRt60PassRate of them fall within tolerance; every
/// other check must pass individually.
ValidationReport validate_manifest(const std::filesystem::path& manifest_path, const PipelineConfig& cfg);

}  // namespace sidonforge::oracle
