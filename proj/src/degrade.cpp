// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"
#include "sidonforge/noise_pool.hpp"

namespace sidonforge {
namespace {

constexpr int kMaxPlacementDraws = 10000;
constexpr int kMaxPacketLossCandidates = 1000000;

constexpr std::array<std::string_view, kNumOps> kOpNames = {"reverb", "noise", "bandlimit",
                                                            "clip",   "codec", "packet_loss"};

void check_range(const Range& r, const char* name, double min_allowed, double max_allowed) {
    if (!(r.lo <= r.hi)) throw FatalConfig(std::string(name) + ": lower bound exceeds upper bound");
    if (!(r.lo >= min_allowed && r.hi <= max_allowed)) {
        throw FatalConfig(std::string(name) + " must lie within [" + std::to_string(min_allowed) + ", " +
                          std::to_string(max_allowed) + "]");
    }
}

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

ReverbParams sample_room(const DegradationConfig& cfg, Rng& rng) {
    ReverbParams p;
    RoomSpec& room = p.room;
    room.speed_of_sound_mps = cfg.speed_of_sound_mps;
    room.max_order_cap = cfg.max_order_cap;
    room.sabine = cfg.sabine;

    bool feasible = false;
    for (int draw = 0; draw < cfg.max_room_draws && !feasible; ++draw) {
        for (double& d : room.dims_m) d = rng.uniform(cfg.room_dim_range_m.lo, cfg.room_dim_range_m.hi);
        room.rt60_s = rng.uniform(cfg.rt60_range_s.lo, cfg.rt60_range_s.hi);
        try {
            const SabineSolution sol =
                inverse_sabine(room.rt60_s, room.dims_m, room.speed_of_sound_mps, room.max_order_cap, room.sabine);
            p.absorption = sol.absorption;
            p.max_order = sol.max_order;
            feasible = true;
        } catch (const AbsorptionInfeasible&) {
            ++p.rejected_draws;
        }
    }
    if (!feasible) {
        throw FatalConfig("no feasible (rt60, room) pair in " + std::to_string(cfg.max_room_draws) + " draws");
    }

    // Uniform placement inside the margin; redraw until the pair is separated.
    // If that never happens, keep the best-separated pair seen.
    double best_sep = -1.0;
    Vec3 best_src{}, best_mic{};
    for (int draw = 0; draw < kMaxPlacementDraws; ++draw) {
        Vec3 src{}, mic{};
        for (Vec3* v : {&src, &mic}) {
            for (int a = 0; a < 3; ++a) {
                const double len = room.dims_m[a];
                const double margin = std::min(cfg.placement_margin_m, 0.25 * len);
                (*v)[a] = rng.uniform(margin, len - margin);
            }
        }
        const double sep = distance(src, mic);
        if (sep > best_sep) {
            best_sep = sep;
            best_src = src;
            best_mic = mic;
        }
        if (sep >= cfg.min_source_mic_distance_m) break;
    }
    room.source_m = best_src;
    room.mic_m = best_mic;
    room.absorption_override = p.absorption;
    room.max_order_override = p.max_order;
    return p;
}

std::string_view op_name(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

Op op_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumOps; ++i) {
        if (kOpNames[i] == name) return static_cast<Op>(i);
    }
    throw InvalidArgument("unknown op '" + std::string(name) + "'");
}

void DegradationConfig::validate() const {
    if (!(per_op_probability >= 0.0 && per_op_probability <= 1.0)) {
        throw FatalConfig("per_op_probability must lie in [0, 1]");
    }
    check_range(rt60_range_s, "rt60_range_s", 1e-6, 100.0);
    check_range(room_dim_range_m, "room_dim_range_m", 1e-3, 1000.0);
    check_range(snr_range_db, "snr_range_db", -200.0, 200.0);
    check_range(clip_lo_quantile_range, "clip_lo_quantile_range", 0.0, 1.0);
    check_range(clip_hi_quantile_range, "clip_hi_quantile_range", 0.0, 1.0);
    if (clip_lo_quantile_range.hi > clip_hi_quantile_range.lo) {
        throw FatalConfig("clip quantile ranges overlap: lo range must end before hi range starts");
    }
    check_range(mp3_bitrate_range_kbps, "mp3_bitrate_range_kbps", 1.0, 10000.0);
    if (!(packet_loss_total_fraction >= 0.0 && packet_loss_total_fraction < 1.0)) {
        throw FatalConfig("packet_loss_total_fraction must lie in [0, 1)");
    }
    check_range(packet_segment_range_ms, "packet_segment_range_ms", 1e-3, 60000.0);
    if (bandlimit_rates_hz.empty()) throw FatalConfig("bandlimit_rates_hz must not be empty");
    for (int r : bandlimit_rates_hz) {
        if (!is_supported_rate(r)) throw FatalConfig("unsupported band-limit rate " + std::to_string(r));
    }
    if (!(placement_margin_m >= 0.0)) throw FatalConfig("placement_margin_m must be non-negative");
    if (!(min_source_mic_distance_m > 0.0)) throw FatalConfig("min_source_mic_distance_m must be positive");
    if (!(speed_of_sound_mps > 0.0)) throw FatalConfig("speed_of_sound_mps must be positive");
    if (max_order_cap < 0) throw FatalConfig("max_order_cap must be non-negative");
    if (max_room_draws < 1) throw FatalConfig("max_room_draws must be >= 1");
}

DegradationRecord sample_params(const DegradationConfig& cfg, Rng& rng) {
    DegradationRecord rec;
    for (std::size_t i = 0; i < kNumOps; ++i) rec.applied[i] = rng.bernoulli(cfg.per_op_probability);

    if (rec.is_applied(Op::Reverb)) rec.reverb = sample_room(cfg, rng);
    if (rec.is_applied(Op::Noise)) {
        NoiseParams p;
        p.selection_seed = rng.next_u64();
        p.snr_db = rng.uniform(cfg.snr_range_db.lo, cfg.snr_range_db.hi);
        rec.noise = p;
    }
    if (rec.is_applied(Op::Bandlimit)) {
        rec.bandlimit = BandlimitParams{cfg.bandlimit_rates_hz[rng.index(cfg.bandlimit_rates_hz.size())]};
    }
    if (rec.is_applied(Op::Clip)) {
        ClipParams p;
        p.lo_quantile = rng.uniform(cfg.clip_lo_quantile_range.lo, cfg.clip_lo_quantile_range.hi);
        p.hi_quantile = rng.uniform(cfg.clip_hi_quantile_range.lo, cfg.clip_hi_quantile_range.hi);
        rec.clip = p;
    }
    if (rec.is_applied(Op::Codec)) {
        CodecParams p;
        p.bitrate_kbps = rng.uniform(cfg.mp3_bitrate_range_kbps.lo, cfg.mp3_bitrate_range_kbps.hi);
        rec.codec = p;
    }
    if (rec.is_applied(Op::PacketLoss)) {
        PacketLossParams p;
        p.loss_seed = rng.next_u64();
        p.total_fraction = cfg.packet_loss_total_fraction;
        p.segment_range_ms = cfg.packet_segment_range_ms;
        rec.packet_loss = p;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

Waveform op_reverb(const Waveform& w, const RoomSpec& room) {
    require_valid(w, "op_reverb");
    return fft_convolve(w, simulate_rir(room, w.sample_rate_hz));
}

double noise_gain(const Waveform& w, const Waveform& noise, double snr_db) {
    require_valid(w, "op_mix_noise");
    require_valid(noise, "op_mix_noise noise");
    if (noise.sample_rate_hz != w.sample_rate_hz) {
        throw RateMismatch("noise at " + std::to_string(noise.sample_rate_hz) + " Hz, signal at " +
                           std::to_string(w.sample_rate_hz) + " Hz");
    }
    if (noise.size() < w.size()) throw InvalidArgument("noise is shorter than the signal");
    const double signal_rms = rms(w);
    const double noise_rms = rms(std::span<const double>(noise.samples.data(), w.size()));
    if (!(signal_rms > 0.0)) throw SilentSignal("signal has zero RMS");
    if (!(noise_rms > 0.0)) throw SilentSignal("noise has zero RMS over the signal span");
    return signal_rms / noise_rms * std::pow(10.0, -snr_db / 20.0);
}

Waveform op_mix_noise(const Waveform& w, const Waveform& noise, double snr_db) {
    const double g = noise_gain(w, noise, snr_db);
    Waveform out = w;
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += g * noise.samples[i];
    return out;
}

Waveform op_bandlimit(const Waveform& w, int intermediate_rate_hz) {
    require_valid(w, "op_bandlimit");
    if (!is_supported_rate(intermediate_rate_hz)) {
        throw UnsupportedRate("band-limit rate " + std::to_string(intermediate_rate_hz) + " Hz is not supported");
    }
    if (intermediate_rate_hz == w.sample_rate_hz) return w;
    Waveform out = convert_rate(resample(w, intermediate_rate_hz), w.sample_rate_hz);
    fit_length(out, w.size());
    return out;
}

double quantile(std::vector<double> samples, double q) {
    if (samples.empty()) throw InvalidArgument("quantile of an empty sequence");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(samples.begin(), samples.end());
    const double h = static_cast<double>(samples.size() - 1) * q;
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= samples.size()) return samples.back();
    return samples[i] + (h - static_cast<double>(i)) * (samples[i + 1] - samples[i]);
}

ClipResult op_clip(const Waveform& w, double lo_quantile, double hi_quantile) {
    require_valid(w, "op_clip");
    if (!(lo_quantile <= hi_quantile)) throw InvalidArgument("clip lo quantile exceeds hi quantile");
    ClipResult r;
    r.lo_threshold = quantile(w.samples, lo_quantile);
    r.hi_threshold = quantile(w.samples, hi_quantile);
    r.audio = w;
    for (double& x : r.audio.samples) x = std::min(std::max(x, r.lo_threshold), r.hi_threshold);
    return r;
}

CodecResult op_codec(const Waveform& w, double bitrate_kbps, const CodecBackend& backend) {
    require_valid(w, "op_codec");
    CodecResult r;
    r.codec_rate_hz = backend.nearest_accepted_rate(w.sample_rate_hz);
    if (r.codec_rate_hz == w.sample_rate_hz) {
        TranscodeResult t = backend.transcode(w, bitrate_kbps);
        r.audio = std::move(t.audio);
        r.lag_samples = t.lag_samples;
    } else {
        TranscodeResult t = backend.transcode(convert_rate(w, r.codec_rate_hz), bitrate_kbps);
        r.audio = convert_rate(t.audio, w.sample_rate_hz);
        r.lag_samples = t.lag_samples;
    }
    fit_length(r.audio, w.size());
    return r;
}

PacketLossResult op_packet_loss(const Waveform& w, double total_fraction, Range seg_range_ms, Rng& rng) {
    require_valid(w, "op_packet_loss");
    if (!(total_fraction >= 0.0 && total_fraction < 1.0)) throw InvalidArgument("total_fraction must lie in [0, 1)");
    if (!(seg_range_ms.lo > 0.0 && seg_range_ms.lo <= seg_range_ms.hi)) {
        throw InvalidArgument("invalid packet segment range");
    }
    PacketLossResult r;
    r.audio = w;
    const std::size_t n = w.size();
    const double rate = w.sample_rate_hz;
    const auto longest = static_cast<std::size_t>(std::llround(seg_range_ms.hi * rate / 1000.0));
    if (n < longest) return r;
    r.applied = true;
    if (total_fraction == 0.0) return r;

    const double target = total_fraction * static_cast<double>(n);
    std::map<std::size_t, std::size_t> taken;  // start -> end (exclusive)
    std::size_t zeroed = 0;
    for (int attempt = 0; attempt < kMaxPacketLossCandidates && static_cast<double>(zeroed) < target; ++attempt) {
        const double dur_ms = rng.uniform(seg_range_ms.lo, seg_range_ms.hi);
        const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(dur_ms * rate / 1000.0)));
        const std::size_t start = rng.index(n - len + 1);
        const std::size_t end = start + len;
        // Reject overlap and adjacency with existing segments so every lost
        // span stays a separate run.
        auto next = taken.lower_bound(start);
        if (next != taken.end() && next->first <= end) continue;
        if (next != taken.begin() && std::prev(next)->second >= start) continue;
        taken.emplace(start, end);
        zeroed += len;
    }
    for (const auto& [start, end] : taken) {
        std::fill(r.audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                  r.audio.samples.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
        r.segments.push_back({start, end - start});
    }
    return r;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

Waveform apply_stage(Op op, const Waveform& w, DegradationRecord& rec, const NoisePool* pool,
                     const CodecBackend& backend) {
    auto missing = [&] { return InvalidArgument("record lacks parameters for " + std::string(op_name(op))); };
    switch (op) {
        case Op::Reverb: {
            if (!rec.reverb) throw missing();
            RoomSpec room = rec.reverb->room;
            room.absorption_override = rec.reverb->absorption;
            room.max_order_override = rec.reverb->max_order;
            return op_reverb(w, room);
        }
        case Op::Noise: {
            if (!rec.noise) throw missing();
            if (pool == nullptr || pool->empty()) throw EmptyPool("noise stage requires a noise pool");
            Rng selector(rec.noise->selection_seed);
            NoiseDraw draw = pool->draw(w.size(), w.sample_rate_hz, selector);
            rec.noise->noise_id = draw.id;
            rec.noise->loop_count = draw.loop_count;
            rec.noise->gain = noise_gain(w, draw.audio, rec.noise->snr_db);
            return op_mix_noise(w, draw.audio, rec.noise->snr_db);
        }
        case Op::Bandlimit:
            if (!rec.bandlimit) throw missing();
            return op_bandlimit(w, rec.bandlimit->intermediate_rate_hz);
        case Op::Clip: {
            if (!rec.clip) throw missing();
            ClipResult r = op_clip(w, rec.clip->lo_quantile, rec.clip->hi_quantile);
            rec.clip->lo_threshold = r.lo_threshold;
            rec.clip->hi_threshold = r.hi_threshold;
            return std::move(r.audio);
        }
        case Op::Codec: {
            if (!rec.codec) throw missing();
            CodecResult r = op_codec(w, rec.codec->bitrate_kbps, backend);
            rec.codec->lag_samples = r.lag_samples;
            rec.codec->codec_rate_hz = r.codec_rate_hz;
            return std::move(r.audio);
        }
        case Op::PacketLoss: {
            if (!rec.packet_loss) throw missing();
            Rng loss_rng(rec.packet_loss->loss_seed);
            PacketLossResult r =
                op_packet_loss(w, rec.packet_loss->total_fraction, rec.packet_loss->segment_range_ms, loss_rng);
            rec.packet_loss->segments = std::move(r.segments);
            rec.packet_loss->sample_rate_hz = w.sample_rate_hz;
            rec.packet_loss->skipped_short_input = !r.applied;
            return std::move(r.audio);
        }
    }
    throw missing();
}

Waveform apply(const Waveform& w, DegradationRecord& rec, const NoisePool* pool, const CodecBackend& backend,
               StageSeconds* timing) {
    require_valid(w, "apply");
    Waveform current = w;
    for (Op op : kPipelineOrder) {
        const std::size_t i = static_cast<std::size_t>(op);
        const bool skipped_before = op == Op::PacketLoss && rec.packet_loss && rec.packet_loss->skipped_short_input;
        if (!rec.applied[i] && !skipped_before) continue;
        const auto t0 = std::chrono::steady_clock::now();
        current = apply_stage(op, current, rec, pool, backend);
        fit_length(current, w.size());
        if (timing != nullptr) {
            (*timing)[i] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        if (op == Op::PacketLoss) rec.applied[i] = !rec.packet_loss->skipped_short_input;
    }
    return current;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json to_json(const DegradationRecord& rec) {
    nlohmann::json ops = nlohmann::json::array();
    for (Op op : kPipelineOrder) {
        nlohmann::json o = {{"op", op_name(op)}, {"applied", rec.is_applied(op)}};
        switch (op) {
            case Op::Reverb:
                if (rec.reverb) {
                    const RoomSpec& room = rec.reverb->room;
                    o["rt60_s"] = room.rt60_s;
                    o["dims_m"] = vec_json(room.dims_m);
                    o["source_m"] = vec_json(room.source_m);
                    o["mic_m"] = vec_json(room.mic_m);
                    o["absorption"] = rec.reverb->absorption;
                    o["max_order"] = rec.reverb->max_order;
                    o["speed_of_sound_mps"] = room.speed_of_sound_mps;
                    o["rejected_draws"] = rec.reverb->rejected_draws;
                }
                break;
            case Op::Noise:
                if (rec.noise) {
                    o["selection_seed"] = rec.noise->selection_seed;
                    o["snr_db"] = rec.noise->snr_db;
                    o["noise_id"] = rec.noise->noise_id;
                    o["loop_count"] = rec.noise->loop_count;
                    o["gain"] = rec.noise->gain;
                }
                break;
            case Op::Bandlimit:
                if (rec.bandlimit) o["intermediate_rate_hz"] = rec.bandlimit->intermediate_rate_hz;
                break;
            case Op::Clip:
                if (rec.clip) {
                    o["lo_quantile"] = rec.clip->lo_quantile;
                    o["hi_quantile"] = rec.clip->hi_quantile;
                    o["lo_threshold"] = rec.clip->lo_threshold;
                    o["hi_threshold"] = rec.clip->hi_threshold;
                }
                break;
            case Op::Codec:
                if (rec.codec) {
                    o["bitrate_kbps"] = rec.codec->bitrate_kbps;
                    o["lag_samples"] = rec.codec->lag_samples;
                    o["codec_rate_hz"] = rec.codec->codec_rate_hz;
                }
                break;
            case Op::PacketLoss:
                if (rec.packet_loss) {
                    const auto& p = *rec.packet_loss;
                    o["loss_seed"] = p.loss_seed;
                    o["total_fraction"] = p.total_fraction;
                    o["segment_range_ms"] = {p.segment_range_ms.lo, p.segment_range_ms.hi};
                    nlohmann::json segs = nlohmann::json::array();
                    const double to_ms = p.sample_rate_hz > 0 ? 1000.0 / p.sample_rate_hz : 0.0;
                    for (const LossSegment& s : p.segments) {
                        segs.push_back({static_cast<double>(s.start) * to_ms, static_cast<double>(s.length) * to_ms});
                    }
                    o["segments_ms"] = std::move(segs);
                    if (p.skipped_short_input) o["skipped"] = "input shorter than the longest segment";
                }
                break;
        }
        ops.push_back(std::move(o));
    }
    return {{"rng_seed", rec.rng_seed}, {"variant_index", rec.variant_index}, {"ops", std::move(ops)}};
}

DegradationRecord record_from_json(const nlohmann::json& j) {
    DegradationRecord rec;
    try {
        rec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        rec.variant_index = j.at("variant_index").get<int>();
        const auto& ops = j.at("ops");
        if (!ops.is_array() || ops.size() != kNumOps) throw InvalidArgument("record must list exactly six ops");
        for (std::size_t i = 0; i < kNumOps; ++i) {
            const auto& o = ops.at(i);
            const Op op = op_from_name(o.at("op").get<std::string>());
            if (op != kPipelineOrder[i]) throw InvalidArgument("record ops are not in pipeline order");
            rec.applied[i] = o.at("applied").get<bool>();
            switch (op) {
                case Op::Reverb:
                    if (o.contains("rt60_s")) {
                        ReverbParams p;
                        p.room.rt60_s = o.at("rt60_s").get<double>();
                        p.room.dims_m = vec_from(o.at("dims_m"));
                        p.room.source_m = vec_from(o.at("source_m"));
                        p.room.mic_m = vec_from(o.at("mic_m"));
                        p.room.speed_of_sound_mps = o.value("speed_of_sound_mps", 343.0);
                        p.absorption = o.at("absorption").get<double>();
                        p.max_order = o.at("max_order").get<int>();
                        p.room.absorption_override = p.absorption;
                        p.room.max_order_override = p.max_order;
                        p.rejected_draws = o.value("rejected_draws", 0);
                        rec.reverb = p;
                    }
                    break;
                case Op::Noise:
                    if (o.contains("snr_db")) {
                        NoiseParams p;
                        p.selection_seed = o.at("selection_seed").get<std::uint64_t>();
                        p.snr_db = o.at("snr_db").get<double>();
                        p.noise_id = o.value("noise_id", "");
                        p.loop_count = o.value("loop_count", std::uint64_t{0});
                        p.gain = o.value("gain", 0.0);
                        rec.noise = p;
                    }
                    break;
                case Op::Bandlimit:
                    if (o.contains("intermediate_rate_hz")) {
                        rec.bandlimit = BandlimitParams{o.at("intermediate_rate_hz").get<int>()};
                    }
                    break;
                case Op::Clip:
                    if (o.contains("lo_quantile")) {
                        ClipParams p;
                        p.lo_quantile = o.at("lo_quantile").get<double>();
                        p.hi_quantile = o.at("hi_quantile").get<double>();
                        p.lo_threshold = o.value("lo_threshold", 0.0);
                        p.hi_threshold = o.value("hi_threshold", 0.0);
                        rec.clip = p;
                    }
                    break;
                case Op::Codec:
                    if (o.contains("bitrate_kbps")) {
                        CodecParams p;
                        p.bitrate_kbps = o.at("bitrate_kbps").get<double>();
                        p.lag_samples = o.value("lag_samples", std::int64_t{0});
                        p.codec_rate_hz = o.value("codec_rate_hz", 0);
                        rec.codec = p;
                    }
                    break;
                case Op::PacketLoss:
                    if (o.contains("loss_seed")) {
                        PacketLossParams p;
                        p.loss_seed = o.at("loss_seed").get<std::uint64_t>();
                        p.total_fraction = o.at("total_fraction").get<double>();
                        const auto& range = o.at("segment_range_ms");
                        p.segment_range_ms = {range.at(0).get<double>(), range.at(1).get<double>()};
                        p.skipped_short_input = o.contains("skipped");
                        rec.packet_loss = p;
                    }
                    break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed degradation record: ") + e.what());
    }
    return rec;
}

}  // namespace sidonforge
