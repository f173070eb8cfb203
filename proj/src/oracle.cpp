// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"
#include "sidonforge/rir.hpp"

namespace sidonforge::oracle {
namespace fs = std::filesystem;

namespace {

// Sum of squares in long double, independent of audio-core's rms().
long double energy(const std::vector<double>& x) {
    long double acc = 0.0L;
    for (double v : x) acc += static_cast<long double>(v) * v;
    return acc;
}

Check make_check(std::string name, double value, double expected, double tolerance, bool pass, std::string note = {}) {
    return {std::move(name), value, expected, tolerance, pass, std::move(note)};
}

}  // namespace

double measure_snr(const Waveform& clean, const Waveform& noisy) {
    if (clean.sample_rate_hz != noisy.sample_rate_hz) throw RateMismatch("measure_snr: sample rates differ");
    if (clean.samples.size() != noisy.samples.size() || clean.samples.empty()) {
        throw InvalidArgument("measure_snr: signals must have equal nonzero length");
    }
    std::vector<double> residual(clean.samples.size());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = noisy.samples[i] - clean.samples[i];
    const long double e_clean = energy(clean.samples);
    const long double e_residual = energy(residual);
    if (e_residual == 0.0L) throw SilentResidual("measure_snr: noisy equals clean");
    if (e_clean == 0.0L) throw SilentSignal("measure_snr: clean signal is silent");
    return static_cast<double>(10.0L * std::log10(e_clean / e_residual));
}

ZeroRuns measure_zero_runs(const Waveform& w, double min_run_ms) {
    ZeroRuns out;
    if (w.samples.empty()) return out;
    const double ms_per_sample = 1000.0 / w.sample_rate_hz;
    std::size_t zeroed = 0;
    std::size_t run = 0;
    auto close_run = [&] {
        if (run > 0 && static_cast<double>(run) * ms_per_sample >= min_run_ms) {
            out.runs_samples.push_back(run);
            out.runs_ms.push_back(static_cast<double>(run) * ms_per_sample);
            zeroed += run;
        }
        run = 0;
    };
    for (double v : w.samples) {
        if (v == 0.0) {
            ++run;
        } else {
            close_run();
        }
    }
    close_run();
    out.fraction = static_cast<double>(zeroed) / static_cast<double>(w.samples.size());
    return out;
}

double band_energy_above(const Waveform& w, double cutoff_hz) {
    require_valid(w, "band_energy_above");
    const double nyquist = 0.5 * w.sample_rate_hz;
    if (!(cutoff_hz >= 0.0 && cutoff_hz < nyquist)) throw InvalidArgument("cutoff must lie in [0, Nyquist)");

    const std::size_t n = w.samples.size();
    const std::size_t nfft = next_pow2(n);
    std::vector<std::complex<double>> spec(nfft);
    // 4-term Blackman-Harris window.
    constexpr double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = n > 1 ? 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        const double win = a0 - a1 * std::cos(x) + a2 * std::cos(2.0 * x) - a3 * std::cos(3.0 * x);
        spec[i] = w.samples[i] * win;
    }
    fft_inplace(spec, false);

    long double total = 0.0L;
    long double above = 0.0L;
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        const double weight = (k == 0 || k == nfft / 2) ? 1.0 : 2.0;
        const long double p = weight * std::norm(spec[k]);
        total += p;
        const double freq = static_cast<double>(k) * w.sample_rate_hz / static_cast<double>(nfft);
        if (freq > cutoff_hz) above += p;
    }
    if (total == 0.0L) return -std::numeric_limits<double>::infinity();
    if (above == 0.0L) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(10.0L * std::log10(above / total));
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const EntryReport& e : entries) {
        nlohmann::json checks_json = nlohmann::json::array();
        for (const Check& c : e.checks) {
            nlohmann::json cj = {{"name", c.name}, {"pass", c.pass}};
            cj["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
            cj["expected"] = c.expected;
            cj["tolerance"] = c.tolerance;
            if (!c.note.empty()) cj["note"] = c.note;
            checks_json.push_back(std::move(cj));
        }
        nlohmann::json ej = {{"utterance_id", e.utterance_id}, {"variant_index", e.variant_index}, {"checks", checks_json}};
        if (!e.error.empty()) ej["error"] = e.error;
        entries_json.push_back(std::move(ej));
    }
    const double reverb_rate = reverb_checked == 0 ? 1.0
                                                   : static_cast<double>(reverb_within_tolerance) /
                                                         static_cast<double>(reverb_checked);
    return {{"pass", pass},
            {"checks", checks},
            {"failed", failed},
            {"reverb", {{"checked", reverb_checked},
                        {"within_tolerance", reverb_within_tolerance},
                        {"rate", reverb_rate},
                        {"required_rate", kRt60PassRate}}},
            {"entries", entries_json}};
}

ValidationReport validate_manifest(const fs::path& manifest_path, const PipelineConfig& cfg) {
    const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
    std::shared_ptr<const NoisePool> pool;
    if (!cfg.noise_index.empty()) pool = std::make_shared<const NoisePool>(NoisePool::load_index(cfg.noise_index));
    const CodecBackend backend = CodecBackend::from_config(cfg.codec);

    ValidationReport report;
    bool entry_failed = false;
    for (const ManifestEntry& entry : entries) {
        EntryReport er;
        er.utterance_id = entry.utterance_id;
        er.variant_index = entry.variant_index;
        try {
            DegradationRecord rec = record_from_json(entry.record);
            Waveform x = read_wav(entry.clean_path);
            for (Op op : kPipelineOrder) {
                if (!rec.is_applied(op)) continue;
                const Waveform y = apply_stage(op, x, rec, pool.get(), backend);
                switch (op) {
                    case Op::Reverb: {
                        RoomSpec room = rec.reverb->room;
                        double est = std::numeric_limits<double>::quiet_NaN();
                        std::string note;
                        try {
                            est = estimate_rt60(simulate_rir(room, x.sample_rate_hz));
                        } catch (const DecayRangeUnavailable& e) {
                            note = e.what();
                        }
                        const bool within = std::isfinite(est) &&
                                            std::abs(est - room.rt60_s) <= kRt60RelativeTolerance * room.rt60_s;
                        ++report.reverb_checked;
                        if (within) ++report.reverb_within_tolerance;
                        // Judged in aggregate below.
                        er.checks.push_back(make_check("reverb_rt60_s", est, room.rt60_s,
                                                       kRt60RelativeTolerance * room.rt60_s, within, note));
                        break;
                    }
                    case Op::Noise: {
                        const double snr = measure_snr(x, y);
                        const double want = rec.noise->snr_db;
                        er.checks.push_back(make_check("noise_snr_db", snr, want, kSnrToleranceDb,
                                                       std::abs(snr - want) <= kSnrToleranceDb));
                        break;
                    }
                    case Op::Bandlimit: {
                        const int mid = rec.bandlimit->intermediate_rate_hz;
                        if (mid < x.sample_rate_hz) {
                            const double db = band_energy_above(y, 0.5 * mid);
                            er.checks.push_back(make_check("bandlimit_energy_above_db", db, kBandEnergyCeilingDb, 0.0,
                                                           db <= kBandEnergyCeilingDb));
                        }
                        break;
                    }
                    case Op::Clip: {
                        const auto [mn, mx] = std::minmax_element(y.samples.begin(), y.samples.end());
                        const double t_lo = quantile(x.samples, rec.clip->lo_quantile);
                        const double t_hi = quantile(x.samples, rec.clip->hi_quantile);
                        er.checks.push_back(make_check("clip_min", *mn, t_lo, 0.0, *mn == t_lo));
                        er.checks.push_back(make_check("clip_max", *mx, t_hi, 0.0, *mx == t_hi));
                        break;
                    }
                    case Op::Codec: {
                        er.checks.push_back(make_check("codec_length", static_cast<double>(y.samples.size()),
                                                       static_cast<double>(x.samples.size()), 0.0,
                                                       y.samples.size() == x.samples.size() &&
                                                           y.sample_rate_hz == x.sample_rate_hz));
                        break;
                    }
                    case Op::PacketLoss: {
                        const PacketLossParams& pl = *rec.packet_loss;
                        if (pl.skipped_short_input) break;
                        const ZeroRuns z = measure_zero_runs(y);
                        const double dur = y.duration_seconds();
                        const double lo = pl.total_fraction;
                        const double hi = pl.total_fraction + pl.segment_range_ms.hi / 1000.0 / dur;
                        er.checks.push_back(make_check("packet_loss_fraction", z.fraction, lo, hi - lo,
                                                       z.fraction >= lo && z.fraction <= hi));
                        const double slack_ms = kRunLengthSlackSamples * 1000.0 / y.sample_rate_hz;
                        bool runs_ok = true;
                        double worst = 0.0;
                        for (double ms : z.runs_ms) {
                            if (ms < pl.segment_range_ms.lo - slack_ms || ms > pl.segment_range_ms.hi + slack_ms) {
                                runs_ok = false;
                                worst = ms;
                            }
                        }
                        er.checks.push_back(make_check("packet_loss_run_lengths_ms", worst, pl.segment_range_ms.lo,
                                                       pl.segment_range_ms.hi - pl.segment_range_ms.lo, runs_ok));
                        break;
                    }
                }
                x = y;
            }
            // The file on disk must be exactly the quantized replay.
            const Waveform out = read_wav(manifest_path.parent_path() / entry.noisy_path);
            double worst = out.samples.size() == x.samples.size() ? 0.0 : std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; std::isfinite(worst) && i < x.samples.size(); ++i) {
                worst = std::max(worst, std::abs(out.samples[i] - quantize_sample(x.samples[i], cfg.output_bit_depth)));
            }
            er.checks.push_back(make_check("output_matches_replay", worst, 0.0, 0.0,
                                           worst == 0.0 && out.sample_rate_hz == x.sample_rate_hz));
        } catch (const std::exception& e) {
            er.error = e.what();
            entry_failed = true;
        }
        for (const Check& c : er.checks) {
            ++report.checks;
            if (!c.pass && c.name != "reverb_rt60_s") ++report.failed;
        }
        report.entries.push_back(std::move(er));
    }

    const bool reverb_ok =
        report.reverb_checked == 0 ||
        static_cast<double>(report.reverb_within_tolerance) >= kRt60PassRate * static_cast<double>(report.reverb_checked);
    report.pass = !entry_failed && report.failed == 0 && reverb_ok;
    return report;
}

}  // namespace sidonforge::oracle
