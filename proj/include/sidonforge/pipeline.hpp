// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidonforge/audio.hpp"
#include "sidonforge/codec.hpp"
#include "sidonforge/degrade.hpp"
#include "sidonforge/noise_pool.hpp"

namespace sidonforge {

inline constexpr std::string_view kManifestSchema = "sidon_forge_manifest_v1";
inline constexpr std::string_view kManifestFileName = "manifest.jsonl";
inline constexpr std::string_view kPartialManifestFileName = "manifest.partial.jsonl";
inline constexpr std::string_view kRunConfigFileName = "run_config.toml";

/// Dataset metadata attached to every utterance whose id starts with `prefix`
/// (longest prefix wins).
struct CorpusInfo {
    std::string prefix;
    std::string name;
    std::string language;
};

struct PipelineConfig {
    std::filesystem::path clean_root;
    std::filesystem::path out_root;
    std::filesystem::path noise_index;
    CodecConfig codec;
    DegradationConfig degradation;
    int variants_per_utterance = 4;
    std::uint64_t global_seed = 0;
    int workers = 0;  // 0: available parallelism
    BitDepth output_bit_depth = BitDepth::Float32;
    std::vector<CorpusInfo> corpora;

    int effective_workers() const;

    /// Structural checks only (no filesystem access beyond path identity).
    /// Throws FatalConfig.
    void validate() const;
};

/// Reads a TOML config. Unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
std::string to_toml(const PipelineConfig& cfg);

/// FNV-1a 64 over (global_seed as 8 little-endian bytes, utterance_id bytes,
/// one 0x00 byte, variant_index as 4 little-endian bytes), finalized with
/// the SplitMix64 mixer.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view utterance_id, int variant_index);

struct DegradeResult {
    Waveform audio;
    DegradationRecord record;
};

/// In-memory degradation entry point: one (config, pool, backend, seed)
/// bundle, safe to share between threads. The CLI and bindings both go
/// through this, so their outputs agree before bit-depth quantization.
class Degrader {
public:
    /// Validates the configuration; throws FatalConfig on invalid settings.
    Degrader(DegradationConfig config, std::shared_ptr<const NoisePool> pool, CodecBackend backend,
             std::uint64_t global_seed);

    DegradeResult degrade(const Waveform& clean, std::string_view utterance_id, int variant_index,
                          StageSeconds* timing = nullptr) const;

    const DegradationConfig& config() const noexcept { return config_; }
    const NoisePool* pool() const noexcept { return pool_.get(); }
    const CodecBackend& backend() const noexcept { return backend_; }
    std::uint64_t global_seed() const noexcept { return global_seed_; }

private:
    DegradationConfig config_;
    std::shared_ptr<const NoisePool> pool_;
    CodecBackend backend_;
    std::uint64_t global_seed_;
};

/// Validates the degradation and codec settings the way `degrade` does (no
/// clean/out roots needed), loads the noise index and builds a Degrader.
/// Throws FatalConfig.
Degrader make_degrader(const PipelineConfig& cfg);

struct ManifestEntry {
    std::string utterance_id;
    int variant_index = 0;
    std::string clean_path;
    std::string noisy_path;  // relative to the manifest directory
    std::string language;
    std::string dataset_name;
    double duration_s = 0.0;
    int sample_rate_hz = 0;
    nlohmann::json record;
};

nlohmann::json to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const nlohmann::json& j);

/// Reads a JSON-lines manifest.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Per-op application rates and parameter histograms over manifest entries:
/// {"entries", "ops": {name: {"applied", "rate", "params": {key: histogram}}}}.
/// Numeric parameters get `bins` equal-width bins over their observed range;
/// integer-valued ones with few distinct values are counted per value.
nlohmann::json summarize_manifest(const std::vector<ManifestEntry>& entries, int bins = 10);

/// `<id minus extension>.v<K>.wav`.
std::string noisy_relative_path(std::string_view utterance_id, int variant_index);

struct Failure {
    std::string utterance_id;
    int variant_index = -1;  // -1: the whole utterance
    std::string reason;
};

struct PipelineSummary {
    std::size_t utterances = 0;
    std::size_t variants = 0;  // manifest entries on completion
    std::size_t generated = 0;
    std::size_t resumed = 0;  // valid outputs kept from a previous run
    double hours_in = 0.0;
    double hours_out = 0.0;
    std::vector<Failure> failures;
};

struct Progress {
    std::size_t tasks_done = 0;
    std::size_t tasks_total = 0;
    double hours_in = 0.0;
    double hours_out = 0.0;
    double elapsed_s = 0.0;
};
using ProgressCallback = std::function<void(const Progress&)>;

/// Degrades every WAV under clean_root into out_root. Per-utterance failures
/// are recorded and skipped. Throws FatalConfig for invalid setups.
PipelineSummary run_pipeline(const PipelineConfig& cfg, const ProgressCallback& progress = {});

/// Lists clean utterance ids (relative '/'-separated paths of *.wav files),
/// sorted lexicographically.
std::vector<std::string> scan_corpus(const std::filesystem::path& clean_root);

// ---------------------------------------------------------------------------
// Throughput benchmark
// ---------------------------------------------------------------------------

struct RtfReport {
    int batch_size = 0;
    int repeats = 0;
    double audio_seconds_processed = 0.0;
    double wall_clock_seconds = 0.0;
    double rtf = 0.0;
    StageSeconds stage_breakdown{};  // cumulative per-op seconds across the batch

    nlohmann::json to_json() const;
};

struct BenchOptions {
    std::vector<int> batch_sizes{1, 2, 4, 8};
    double input_duration_s = 30.0;
    int input_rate_hz = 16000;
    int repeats = 3;
};

/// Times full degradation (every op forced on) of batch_size synthetic
/// utterances per iteration, after one untimed warm-up iteration.
std::vector<RtfReport> bench_rtf(const PipelineConfig& cfg, const BenchOptions& options);

/// Deterministic speech-like probe (voiced harmonics with syllabic envelope).
Waveform synth_speech_like(double duration_s, int rate_hz, std::uint64_t seed);

}  // namespace sidonforge
