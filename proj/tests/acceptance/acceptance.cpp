// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are pinned below and never tuned per run.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sidonforge/audio.hpp"
#include "sidonforge/degrade.hpp"
#include "sidonforge/oracle.hpp"
#include "sidonforge/pipeline.hpp"
#include "sidonforge/rir.hpp"
#include "sidonforge/rng.hpp"

namespace sf = sidonforge;
namespace so = sidonforge::oracle;
namespace fs = std::filesystem;

namespace {

// Degradation probability.
constexpr int kProbDraws = 10000;
constexpr double kProbP = 0.5;
constexpr double kProbLo = 0.485;
constexpr double kProbHi = 0.515;
constexpr double kProbSeconds = 10.0;

// SNR exactness.
constexpr int kSnrTriples = 1000;
constexpr double kSnrTolDb = 1e-6;

// RT60 fidelity.
constexpr int kRooms = 20;
constexpr double kRt60Tol = 0.25;
constexpr double kRt60Rate = 0.80;
constexpr double kRt60Seconds = 120.0;
constexpr double kDelayTolSamples = 1.0;
constexpr double kAmplitudeTol = 1e-4;

// Clipping.
constexpr int kClipCases = 1000;

// Packet loss.
constexpr int kLossRuns = 100;
constexpr double kLossDurationS = 30.0;
constexpr double kLossFracLo = 0.09;
constexpr double kLossFracHi = 0.0967;
constexpr double kLossRunLoMs = 20.0;
constexpr double kLossRunHiMs = 200.0;
constexpr double kLossRunSlackSamples = 1.0;

// Band limitation.
constexpr int kProbeRate = 48000;
constexpr double kBandCeilingDb = -50.0;
constexpr double kInBandTolDb = 0.1;

// Dataset scaling.
constexpr int kScalingVariants = 4;
constexpr double kScalingRelTol = 1e-3;

// RTF harness.
constexpr double kRtfRelTol = 1e-9;
constexpr double kRtfInputS = 30.0;

// FFT convolution.
constexpr int kConvPairs = 100;
constexpr double kConvTol = 1e-6;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

sf::Waveform noise_wave(sf::Rng& rng, std::size_t n, int rate, double amp) {
    sf::Waveform w{std::vector<double>(n), rate};
    for (double& s : w.samples) s = rng.uniform(-amp, amp);
    return w;
}

Outcome degradation_probability() {
    const auto t0 = std::chrono::steady_clock::now();
    sf::DegradationConfig cfg;
    cfg.per_op_probability = kProbP;
    std::array<int, 6> applied{};
    for (int i = 0; i < kProbDraws; ++i) {
        sf::Rng rng(sf::derive_seed(2026, "probability", i));
        const sf::DegradationRecord rec = sf::sample_params(cfg, rng);
        for (sf::Op op : sf::kPipelineOrder) applied[static_cast<int>(op)] += rec.is_applied(op);
    }
    const double elapsed = seconds_since(t0);
    Outcome o{elapsed < kProbSeconds, ""};
    for (sf::Op op : sf::kPipelineOrder) {
        const double rate = static_cast<double>(applied[static_cast<int>(op)]) / kProbDraws;
        o.pass = o.pass && rate >= kProbLo && rate <= kProbHi;
        o.detail += fmt("%s=%.4f ", std::string(sf::op_name(op)).c_str(), rate);
    }
    o.detail += fmt("in %.2fs", elapsed);
    return o;
}

Outcome snr_exactness() {
    sf::Rng rng(11);
    double worst = 0.0;
    for (int i = 0; i < kSnrTriples; ++i) {
        const auto n = static_cast<std::size_t>(rng.uniform(800, 16000));
        const sf::Waveform clean = noise_wave(rng, n, 16000, rng.uniform(0.01, 0.9));
        const sf::Waveform noise = noise_wave(rng, n, 16000, rng.uniform(0.01, 0.9));
        const double snr = rng.uniform(-5.0, 20.0);
        worst = std::max(worst, std::abs(so::measure_snr(clean, sf::op_mix_noise(clean, noise, snr)) - snr));
    }
    return {worst <= kSnrTolDb, fmt("max |error| %.3g dB over %d triples", worst, kSnrTriples)};
}

Outcome rt60_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    // Rooms are drawn the same way the reverb stage draws them, with the
    // criterion's dimension and decay ranges; infeasible draws are redrawn.
    sf::DegradationConfig cfg;
    cfg.room_dim_range_m = {5.0, 20.0};
    cfg.rt60_range_s = {0.3, 1.5};
    sf::Rng rng(20);
    int within = 0;
    std::string worst;
    double worst_err = 0.0;
    for (int i = 0; i < kRooms; ++i) {
        const sf::ReverbParams p = sf::sample_room(cfg, rng);
        const double est = sf::estimate_rt60(sf::simulate_rir(p.room, 16000));
        const double err = std::abs(est - p.room.rt60_s) / p.room.rt60_s;
        within += err <= kRt60Tol;
        if (err > worst_err) {
            worst_err = err;
            worst = fmt("%.2fx%.2fx%.2f target %.3f est %.3f", p.room.dims_m[0], p.room.dims_m[1], p.room.dims_m[2],
                        p.room.rt60_s, est);
        }
    }

    // Hand-computed anechoic geometries: delay d / c * fs, amplitude 1 / (4 pi d).
    // Distances land on whole samples, where the tap value is the amplitude;
    // fractional delays spread the pulse over neighbouring taps.
    struct Hand {
        double d;
        int rate;
    };
    bool hand_ok = true;
    std::string hand;
    for (const Hand h : {Hand{3.43, 48000}, Hand{1.715, 16000}, Hand{6.86, 22050}}) {
        sf::RoomSpec r;
        r.dims_m = {20, 20, 20};
        r.rt60_s = 0.5;
        r.source_m = {4, 6, 5};
        r.mic_m = {4 + h.d, 6, 5};
        r.absorption_override = 1.0;
        r.max_order_override = 0;
        const sf::Rir rir = sf::simulate_rir(r, h.rate);
        const auto peak = std::max_element(rir.taps.begin(), rir.taps.end()) - rir.taps.begin();
        const double delay = h.d / 343.0 * h.rate;
        const double amp = 1.0 / (4.0 * M_PI * h.d);
        const bool ok = std::abs(static_cast<double>(peak) - delay) <= kDelayTolSamples &&
                        std::abs(rir.taps[static_cast<std::size_t>(peak)] - amp) <= kAmplitudeTol;
        hand_ok = hand_ok && ok;
        hand += fmt(" d=%.2f peak %ld/%.2f amp %.5f/%.5f", h.d, static_cast<long>(peak), delay,
                    rir.taps[static_cast<std::size_t>(peak)], amp);
    }
    const double elapsed = seconds_since(t0);
    const bool rate_ok = within >= kRt60Rate * kRooms;
    return {rate_ok && hand_ok && elapsed < kRt60Seconds,
            fmt("%d/%d rooms within 25%% (worst %s);", within, kRooms, worst.c_str()) + hand +
                fmt("; %.1fs", elapsed)};
}

Outcome clip_equivalence() {
    sf::Rng rng(4);
    int bad = 0;
    for (int i = 0; i < kClipCases; ++i) {
        const auto n = static_cast<std::size_t>(rng.uniform(2, 4000));
        const sf::Waveform w = noise_wave(rng, n, 16000, rng.uniform(0.05, 1.0));
        const double ql = rng.uniform(0.0, 0.1);
        const double qh = rng.uniform(0.9, 1.0);
        const sf::ClipResult r = sf::op_clip(w, ql, qh);
        const double lo = oracles::sorted_quantile(w.samples, ql);
        const double hi = oracles::sorted_quantile(w.samples, qh);
        const auto [mn, mx] = std::minmax_element(r.audio.samples.begin(), r.audio.samples.end());
        bool ok = *mn == lo && *mx == hi;
        for (std::size_t k = 0; ok && k < n; ++k) {
            const double x = w.samples[k];
            if (x > lo && x < hi) ok = r.audio.samples[k] == x;
        }
        bad += !ok;
    }
    return {bad == 0, fmt("%d/%d cases differ from the sort-and-interpolate oracle", bad, kClipCases)};
}

Outcome packet_loss_accounting() {
    const int rate = 16000;
    const auto n = static_cast<std::size_t>(kLossDurationS * rate);
    sf::Rng src(5);
    sf::Waveform w = noise_wave(src, n, rate, 0.5);
    for (double& s : w.samples) s = s == 0.0 ? 1e-3 : s;
    double fmin = 1.0, fmax = 0.0, rmin = 1e9, rmax = 0.0;
    const double slack_ms = kLossRunSlackSamples * 1000.0 / rate;
    bool ok = true;
    for (int i = 0; i < kLossRuns; ++i) {
        sf::Rng rng(sf::derive_seed(9, "loss", i));
        const sf::PacketLossResult r = sf::op_packet_loss(w, 0.09, {kLossRunLoMs, kLossRunHiMs}, rng);
        const auto runs = oracles::zero_runs(r.audio.samples, 1);
        std::size_t zeros = 0;
        for (std::size_t len : runs) {
            zeros += len;
            const double ms = 1000.0 * static_cast<double>(len) / rate;
            rmin = std::min(rmin, ms);
            rmax = std::max(rmax, ms);
            ok = ok && ms >= kLossRunLoMs - slack_ms && ms <= kLossRunHiMs + slack_ms;
        }
        const double frac = static_cast<double>(zeros) / static_cast<double>(n);
        fmin = std::min(fmin, frac);
        fmax = std::max(fmax, frac);
        ok = ok && frac >= kLossFracLo && frac <= kLossFracHi;
    }
    return {ok, fmt("fraction [%.5f, %.5f], runs [%.3f, %.3f] ms over %d runs", fmin, fmax, rmin, rmax, kLossRuns)};
}

Outcome band_limitation() {
    const sf::DegradationConfig cfg;
    const std::size_t n = kProbeRate * 2;
    bool ok = true;
    std::string detail;
    for (int mid : cfg.bandlimit_rates_hz) {
        // Tones inside the retained band plus tones above its Nyquist.
        const double nyq = 0.5 * std::min(mid, kProbeRate);
        std::vector<double> in_band{0.1 * nyq, 0.45 * nyq, 0.8 * nyq};
        std::vector<double> out_band;
        for (double f = nyq + 500.0; f < 0.5 * kProbeRate - 200.0; f += 0.5 * (0.5 * kProbeRate - nyq)) out_band.push_back(f);
        sf::Waveform probe{std::vector<double>(n, 0.0), kProbeRate};
        for (double f : in_band) {
            const auto s = oracles::sine(f, 0.1, kProbeRate, n, f);
            for (std::size_t i = 0; i < n; ++i) probe.samples[i] += s[i];
        }
        for (double f : out_band) {
            const auto s = oracles::sine(f, 0.1, kProbeRate, n, 2.0 * f);
            for (std::size_t i = 0; i < n; ++i) probe.samples[i] += s[i];
        }
        const sf::Waveform y = sf::op_bandlimit(probe, mid);
        double above = -INFINITY;
        if (mid < kProbeRate) above = so::band_energy_above(y, 0.5 * mid);
        // Tone amplitudes away from the edges, where the filters have settled.
        double worst = 0.0;
        for (double f : in_band) {
            const double a = oracles::tone_amplitude(y, f, n / 4, 3 * n / 4);
            worst = std::max(worst, std::abs(20.0 * std::log10(a / 0.1)));
        }
        const bool this_ok = above <= kBandCeilingDb && worst <= kInBandTolDb;
        ok = ok && this_ok;
        detail += fmt("%d: above %.1f dB, in-band %.4f dB; ", mid, above, worst);
    }
    return {ok, detail};
}

Outcome dataset_scaling(const fs::path& clean, const fs::path& index, const fs::path& out, int files) {
    sf::PipelineConfig cfg = fixtures::toy_config(clean, out, index);
    cfg.variants_per_utterance = kScalingVariants;
    const sf::PipelineSummary s = sf::run_pipeline(cfg);
    const auto entries = sf::read_manifest(out / sf::kManifestFileName);
    const double ratio = s.hours_out / s.hours_in;
    const bool ok = s.failures.empty() && std::abs(ratio - kScalingVariants) <= kScalingRelTol * kScalingVariants &&
                    entries.size() == static_cast<std::size_t>(kScalingVariants * files);
    return {ok, fmt("hours %.5f -> %.5f (ratio %.6f), %zu entries for %d files", s.hours_in, s.hours_out, ratio,
                    entries.size(), files)};
}

Outcome determinism(const fs::path& clean, const fs::path& index, const fs::path& root) {
    std::map<std::string, std::string> trees[2];
    const int workers[2] = {1, 8};
    for (int k = 0; k < 2; ++k) {
        sf::PipelineConfig cfg = fixtures::toy_config(clean, root / ("w" + std::to_string(workers[k])), index);
        cfg.workers = workers[k];
        if (!sf::run_pipeline(cfg).failures.empty()) return {false, "run reported failures"};
        trees[k] = fixtures::read_tree(cfg.out_root);
        // The run config echoes out_root and workers, which differ by design.
        trees[k].erase(std::string(sf::kRunConfigFileName));
    }
    std::size_t differing = 0;
    for (const auto& [rel, bytes] : trees[0]) {
        const auto it = trees[1].find(rel);
        differing += it == trees[1].end() || it->second != bytes;
    }
    const bool ok = trees[0].size() == trees[1].size() && differing == 0;
    return {ok, fmt("%zu files compared, %zu differ (workers 1 vs 8)", trees[0].size(), differing)};
}

Outcome rtf_harness() {
    sf::PipelineConfig cfg;
    sf::BenchOptions opts;
    opts.batch_sizes = {1, 2, 4, 8};
    opts.input_duration_s = kRtfInputS;
    opts.input_rate_hz = 16000;
    opts.repeats = 1;
    const auto reports = sf::bench_rtf(cfg, opts);
    bool ok = reports.size() == 4;
    std::string detail;
    for (const sf::RtfReport& r : reports) {
        const double expect = r.wall_clock_seconds / r.audio_seconds_processed;
        const bool row = std::abs(r.rtf - expect) <= kRtfRelTol * expect &&
                         r.audio_seconds_processed == kRtfInputS * r.batch_size && r.to_json().contains("stage_breakdown");
        ok = ok && row;
        detail += fmt("batch %d rtf %.5f; ", r.batch_size, r.rtf);
    }
    return {ok, detail};
}

Outcome fft_convolution() {
    sf::Rng rng(10);
    double worst = 0.0;
    for (int i = 0; i < kConvPairs; ++i) {
        const auto n = static_cast<std::size_t>(rng.uniform(1, 5000));
        const auto m = static_cast<std::size_t>(rng.uniform(1, 2000));
        std::vector<double> a(n), k(m);
        for (double& v : a) v = rng.uniform(-1, 1);
        for (double& v : k) v = rng.uniform(-1, 1);
        const auto fast = sf::fft_convolve_full(a, k);
        std::vector<double> padded = a;
        padded.resize(n + m - 1, 0.0);
        const auto slow = oracles::direct_convolve(padded, k);
        if (fast.size() != slow.size()) return {false, "length mismatch"};
        for (std::size_t j = 0; j < slow.size(); ++j) worst = std::max(worst, std::abs(fast[j] - slow[j]));
    }
    return {worst <= kConvTol, fmt("max |error| %.3g over %d pairs", worst, kConvPairs)};
}

}  // namespace

int main() {
    fixtures::TempDir dir("sf-accept");
    constexpr int kToyFiles = 12;
    fixtures::make_corpus(dir / "clean", kToyFiles, 180.0, 16000);
    const fs::path index = fixtures::make_noise_pool(dir / "noise", 4, 3.0, 16000);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"degradation probability", degradation_probability},
        {"snr exactness", snr_exactness},
        {"rt60 fidelity", rt60_fidelity},
        {"clipping oracle equivalence", clip_equivalence},
        {"packet loss accounting", packet_loss_accounting},
        {"band limitation", band_limitation},
        {"dataset scaling arithmetic", [&] { return dataset_scaling(dir / "clean", index, dir / "scaling", kToyFiles); }},
        {"end-to-end determinism", [&] { return determinism(dir / "clean", index, dir.path()); }},
        {"rtf harness", rtf_harness},
        {"fft convolution", fft_convolution},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
