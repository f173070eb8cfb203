// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sidonforge/codec.hpp"
#include "sidonforge/rir.hpp"
#include "sidonforge/rng.hpp"
#include "sidonforge/waveform.hpp"

namespace sidonforge {

class NoisePool;

/// Degradation stages in the order they are applied.
enum class Op { Reverb = 0, Noise, Bandlimit, Clip, Codec, PacketLoss };
inline constexpr std::size_t kNumOps = 6;
inline constexpr std::array<Op, kNumOps> kPipelineOrder = {Op::Reverb, Op::Noise,  Op::Bandlimit,
                                                           Op::Clip,   Op::Codec,  Op::PacketLoss};

std::string_view op_name(Op op);
Op op_from_name(std::string_view name);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling distributions of every stage.
struct DegradationConfig {
    double per_op_probability = 0.5;
    Range rt60_range_s{0.1, 2.0};
    Range room_dim_range_m{2.0, 20.0};
    Range snr_range_db{-5.0, 20.0};
    std::vector<int> bandlimit_rates_hz{8000, 16000, 22050, 24000, 44100, 48000};
    Range clip_lo_quantile_range{0.00, 0.10};
    Range clip_hi_quantile_range{0.90, 1.00};
    Range mp3_bitrate_range_kbps{65.0, 245.0};
    double packet_loss_total_fraction = 0.09;
    Range packet_segment_range_ms{20.0, 200.0};

    // Room placement and image-source settings.
    double placement_margin_m = 0.5;
    double min_source_mic_distance_m = 1.0;
    double speed_of_sound_mps = 343.0;
    int max_order_cap = 32;
    SabineConstant sabine = SabineConstant::Fixed0161;
    int max_room_draws = 10000;

    /// Throws FatalConfig on any violated invariant.
    void validate() const;
};

struct ReverbParams {
    RoomSpec room;
    double absorption = 0.0;
    int max_order = 0;
    int rejected_draws = 0;  // (rt60, dims) draws discarded as infeasible
};

struct NoiseParams {
    std::uint64_t selection_seed = 0;
    double snr_db = 0.0;
    // Filled in by apply().
    std::string noise_id;
    std::uint64_t loop_count = 0;
    double gain = 0.0;
};

struct BandlimitParams {
    int intermediate_rate_hz = 0;
};

struct ClipParams {
    double lo_quantile = 0.0;
    double hi_quantile = 1.0;
    // Filled in by apply().
    double lo_threshold = 0.0;
    double hi_threshold = 0.0;
};

struct CodecParams {
    double bitrate_kbps = 0.0;
    // Filled in by apply().
    std::int64_t lag_samples = 0;
    int codec_rate_hz = 0;
};

struct LossSegment {
    std::size_t start = 0;   // samples
    std::size_t length = 0;  // samples
};

struct PacketLossParams {
    std::uint64_t loss_seed = 0;
    double total_fraction = 0.09;
    Range segment_range_ms{20.0, 200.0};
    // Filled in by apply().
    std::vector<LossSegment> segments;
    int sample_rate_hz = 0;
    bool skipped_short_input = false;
};

/// Parameters actually used for one degraded variant. Fields marked "filled
/// in by apply()" depend on the signal and are recorded after the fact; the
/// drawn fields alone determine the output.
struct DegradationRecord {
    std::uint64_t rng_seed = 0;
    int variant_index = 0;
    std::array<bool, kNumOps> applied{};

    std::optional<ReverbParams> reverb;
    std::optional<NoiseParams> noise;
    std::optional<BandlimitParams> bandlimit;
    std::optional<ClipParams> clip;
    std::optional<CodecParams> codec;
    std::optional<PacketLossParams> packet_loss;

    bool is_applied(Op op) const { return applied[static_cast<std::size_t>(op)]; }
};

nlohmann::json to_json(const DegradationRecord& rec);
DegradationRecord record_from_json(const nlohmann::json& j);

/// Draws one record. Consumption order from `rng`: six Bernoulli flips in
/// pipeline order, then for each applied op in pipeline order:
///   reverb      repeat {Lx, Ly, Lz, rt60} until feasible, then
///               repeat {source xyz, mic xyz} until separated
///   noise       selection seed (u64), snr
///   bandlimit   rate index
///   clip        lo quantile, hi quantile
///   codec       bitrate
///   packet loss loss seed (u64)
DegradationRecord sample_params(const DegradationConfig& cfg, Rng& rng);

/// The reverb draw alone (the first branch above).
ReverbParams sample_room(const DegradationConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Individual operators
// ---------------------------------------------------------------------------

Waveform op_reverb(const Waveform& w, const RoomSpec& room);

/// Gain g = (rms(w) / rms(noise)) 10^(-snr/20) over the first len(w) noise samples.
double noise_gain(const Waveform& w, const Waveform& noise, double snr_db);
Waveform op_mix_noise(const Waveform& w, const Waveform& noise, double snr_db);

Waveform op_bandlimit(const Waveform& w, int intermediate_rate_hz);

/// Linear-interpolation quantile of the samples (q in [0, 1]).
double quantile(std::vector<double> samples, double q);

struct ClipResult {
    Waveform audio;
    double lo_threshold = 0.0;
    double hi_threshold = 0.0;
};
ClipResult op_clip(const Waveform& w, double lo_quantile, double hi_quantile);

struct CodecResult {
    Waveform audio;
    std::int64_t lag_samples = 0;
    int codec_rate_hz = 0;
};
CodecResult op_codec(const Waveform& w, double bitrate_kbps, const CodecBackend& backend);

struct PacketLossResult {
    Waveform audio;
    std::vector<LossSegment> segments;
    bool applied = false;
};
/// Zeroes non-overlapping, non-adjacent segments with durations from
/// U(seg_range) until the zeroed fraction first reaches `total_fraction`.
/// Inputs shorter than the longest segment are returned unchanged.
PacketLossResult op_packet_loss(const Waveform& w, double total_fraction, Range seg_range_ms, Rng& rng);

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// Per-stage cumulative wall time, indexed by Op.
using StageSeconds = std::array<double, kNumOps>;

/// Runs a single stage with the parameters stored in `rec` (the stage must be
/// flagged as applied) and fills in its signal-dependent fields.
Waveform apply_stage(Op op, const Waveform& w, DegradationRecord& rec, const NoisePool* pool,
                     const CodecBackend& backend);

/// Applies the ops flagged in `rec` in pipeline order and fills in the
/// signal-dependent fields of `rec`. Output length equals input length.
/// Replaying the same (w, rec) gives bit-identical output.
Waveform apply(const Waveform& w, DegradationRecord& rec, const NoisePool* pool, const CodecBackend& backend,
               StageSeconds* timing = nullptr);

}  // namespace sidonforge
