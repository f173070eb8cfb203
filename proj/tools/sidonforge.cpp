// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

// sidonforge command line: degrade, rir, index-noise, validate, bench, inspect.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"
#include "sidonforge/noise_pool.hpp"
#include "sidonforge/oracle.hpp"
#include "sidonforge/pipeline.hpp"
#include "sidonforge/rir.hpp"

namespace sf = sidonforge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitFailures = 2;

const char* kConfigHelp = R"(Config file (TOML). Every key is optional; defaults shown.

  clean_root = ""                 directory of clean *.wav files (required for degrade)
  out_root = ""                   output directory, must differ from clean_root
  noise_index = ""                JSON-lines index from `index-noise`
  variants_per_utterance = 4      independent degraded copies per utterance
  global_seed = 0                 per-file seeds derive from (seed, id, variant)
  workers = 0                     0 = available hardware threads
  output_bit_depth = "32f"        16, 24 or "32f"

  [degradation]
  per_op_probability = 0.5        chance that each stage is applied
  rt60_range_s = [0.1, 2.0]       reverberation time, uniform
  room_dim_range_m = [2.0, 20.0]  each room side, uniform
  snr_range_db = [-5.0, 20.0]     noise SNR, uniform
  bandlimit_rates_hz = [8000, 16000, 22050, 24000, 44100, 48000]
  clip_lo_quantile_range = [0.0, 0.1]
  clip_hi_quantile_range = [0.9, 1.0]
  mp3_bitrate_range_kbps = [65.0, 245.0]
  packet_loss_total_fraction = 0.09
  packet_segment_range_ms = [20.0, 200.0]
  placement_margin_m = 0.5        source/mic distance from every wall
  min_source_mic_distance_m = 1.0
  speed_of_sound_mps = 343.0
  max_order_cap = 32              image-source reflection order limit
  max_room_draws = 10000          redraw budget for infeasible (rt60, room) pairs
  sabine_constant = "0.161"       "0.161" or "derived" (24 ln10 / c)

  [codec]
  kind = "identity"               "identity" or "external"
  encode_cmd = ""                 template with {input} {output} {bitrate_kbps} {bitrate_mode}
  decode_cmd = ""                 template with {input} {output}
  encoded_extension = "mp3"
  bitrate_mode = "abr"
  temp_root = ""                  default: system temp directory
  max_concurrent = 4              concurrent encoder subprocesses
  supported_rates = []            rates the encoder accepts; empty = any

  [[corpus]]                      optional, repeatable
  prefix = "libritts/"            utterance ids starting with this prefix...
  name = "LibriTTS-R"             ...get this dataset_name
  language = "en"                 ...and this language tag

Exit codes: 0 success, 1 fatal configuration error, 2 completed with failures.
)";

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw sf::FatalConfig(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (expected != 0 && out.size() != expected) {
        throw sf::FatalConfig(std::string(what) + ": expected " + std::to_string(expected) + " comma-separated values");
    }
    return out;
}

sf::Vec3 parse_vec3(const std::string& text, const char* what) {
    const auto v = parse_list(text, 3, what);
    return {v[0], v[1], v[2]};
}

struct Overrides {
    std::string config;
    std::string clean_root;
    std::string out_root;
    std::string noise_index;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> variants;
    std::string bit_depth;
    std::optional<double> probability;

    void add_to(CLI::App* cmd) {
        cmd->add_option("-c,--config", config, "TOML config file");
        cmd->add_option("--clean-root", clean_root, "override clean_root");
        cmd->add_option("--out-root", out_root, "override out_root");
        cmd->add_option("--noise-index", noise_index, "override noise_index");
        cmd->add_option("--seed", seed, "override global_seed");
        cmd->add_option("--workers", workers, "override workers (0 = hardware threads)");
        cmd->add_option("--variants", variants, "override variants_per_utterance");
        cmd->add_option("--bit-depth", bit_depth, "override output_bit_depth (16, 24, 32f)");
        cmd->add_option("--probability", probability, "override degradation.per_op_probability");
    }

    sf::PipelineConfig resolve() const {
        sf::PipelineConfig cfg = config.empty() ? sf::PipelineConfig{} : sf::load_config(config);
        if (!clean_root.empty()) cfg.clean_root = clean_root;
        if (!out_root.empty()) cfg.out_root = out_root;
        if (!noise_index.empty()) cfg.noise_index = noise_index;
        if (seed) cfg.global_seed = *seed;
        if (workers) cfg.workers = *workers;
        if (variants) cfg.variants_per_utterance = *variants;
        if (!bit_depth.empty()) {
            try {
                cfg.output_bit_depth = sf::parse_bit_depth(bit_depth);
            } catch (const sf::Error& e) {
                throw sf::FatalConfig(e.what());
            }
        }
        if (probability) cfg.degradation.per_op_probability = *probability;
        return cfg;
    }
};

std::string format_duration(double seconds) {
    if (!std::isfinite(seconds) || seconds < 0) return "--:--";
    const auto s = static_cast<long long>(seconds + 0.5);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld", s / 3600, (s / 60) % 60, s % 60);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw sf::IoError("cannot write " + path);
    out << text;
}

int run_degrade(const Overrides& o, bool quiet) {
    const sf::PipelineConfig cfg = o.resolve();
    cfg.validate();
    std::cerr << "# effective configuration\n" << sf::to_toml(cfg) << "\n";

    const auto progress = [quiet](const sf::Progress& p) {
        if (quiet) return;
        const double frac = p.tasks_total ? static_cast<double>(p.tasks_done) / p.tasks_total : 1.0;
        const double eta = frac > 0 ? p.elapsed_s * (1.0 - frac) / frac : NAN;
        std::fprintf(stderr, "\r[%zu/%zu] hours in %.4f  hours out %.4f  elapsed %s  eta %s", p.tasks_done,
                     p.tasks_total, p.hours_in, p.hours_out, format_duration(p.elapsed_s).c_str(),
                     format_duration(eta).c_str());
        if (p.tasks_done == p.tasks_total) std::fputc('\n', stderr);
        std::fflush(stderr);
    };
    const sf::PipelineSummary s = sf::run_pipeline(cfg, progress);

    nlohmann::json failures = nlohmann::json::array();
    for (const sf::Failure& f : s.failures) {
        failures.push_back({{"utterance_id", f.utterance_id}, {"variant_index", f.variant_index}, {"reason", f.reason}});
    }
    const nlohmann::json summary = {{"utterances", s.utterances}, {"variants", s.variants},
                                    {"generated", s.generated},   {"resumed", s.resumed},
                                    {"hours_in", s.hours_in},     {"hours_out", s.hours_out},
                                    {"failures", failures}};
    std::cout << summary.dump(2) << "\n";
    return s.failures.empty() ? kExitOk : kExitFailures;
}

struct RirArgs {
    double rt60 = 0.5;
    std::string dims;
    std::string src;
    std::string mic;
    int rate = 16000;
    std::string out;
    double c = 343.0;
    int cap = 32;
    std::string sabine = "0.161";
    std::optional<double> absorption;
    std::optional<int> max_order;
};

int run_rir(const RirArgs& a) {
    sf::RoomSpec room;
    room.dims_m = parse_vec3(a.dims, "--dims");
    room.source_m = parse_vec3(a.src, "--src");
    room.mic_m = parse_vec3(a.mic, "--mic");
    room.rt60_s = a.rt60;
    room.speed_of_sound_mps = a.c;
    room.max_order_cap = a.cap;
    if (a.sabine == "derived") {
        room.sabine = sf::SabineConstant::Derived;
    } else if (a.sabine != "0.161") {
        throw sf::FatalConfig("--sabine must be 0.161 or derived");
    }
    room.absorption_override = a.absorption;
    room.max_order_override = a.max_order;

    const sf::Rir rir = sf::simulate_rir(room, a.rate);
    sf::write_wav(sf::Waveform{rir.taps, rir.sample_rate_hz}, a.out, sf::BitDepth::Float32);

    nlohmann::json info = {{"out", a.out}, {"taps", rir.taps.size()}, {"sample_rate_hz", rir.sample_rate_hz}};
    if (!a.absorption || !a.max_order) {
        const sf::SabineSolution sol = sf::inverse_sabine(room.rt60_s, room.dims_m, room.speed_of_sound_mps,
                                                          room.max_order_cap, room.sabine);
        info["absorption"] = a.absorption.value_or(sol.absorption);
        info["max_order"] = a.max_order.value_or(sol.max_order);
    } else {
        info["absorption"] = *a.absorption;
        info["max_order"] = *a.max_order;
    }
    try {
        info["estimated_rt60_s"] = sf::estimate_rt60(rir);
    } catch (const sf::DecayRangeUnavailable&) {
        info["estimated_rt60_s"] = nullptr;
    }
    std::cout << info.dump(2) << "\n";
    return kExitOk;
}

int run_index_noise(const std::string& root, const std::string& out) {
    std::vector<sf::SkippedFile> skipped;
    const sf::NoisePool pool = sf::NoisePool::build_index(root, out, &skipped);
    double hours = 0.0;
    for (const auto& e : pool.entries()) hours += e.duration_s / 3600.0;
    nlohmann::json skip = nlohmann::json::array();
    for (const auto& s : skipped) skip.push_back({{"id", s.id}, {"reason", s.reason}});
    std::cout << nlohmann::json{{"index", out}, {"entries", pool.size()}, {"hours", hours}, {"skipped", skip}}.dump(2)
              << "\n";
    return kExitOk;
}

int run_validate(const std::string& manifest, const Overrides& o, const std::string& report_path) {
    sf::PipelineConfig cfg;
    if (!o.config.empty()) {
        cfg = o.resolve();
    } else {
        // Use the configuration the run recorded beside its manifest.
        const fs::path beside = fs::path(manifest).parent_path() / sf::kRunConfigFileName;
        Overrides with_run = o;
        if (fs::exists(beside)) with_run.config = beside.string();
        cfg = with_run.resolve();
    }
    const sf::oracle::ValidationReport report = sf::oracle::validate_manifest(manifest, cfg);
    write_text(report_path, report.to_json().dump(2) + "\n");
    std::cerr << "validate: " << report.checks << " checks, " << report.failed << " failed; reverb "
              << report.reverb_within_tolerance << "/" << report.reverb_checked << " within tolerance -> "
              << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? kExitOk : kExitFailures;
}

int run_bench(const Overrides& o, const std::string& batches, double duration, int rate, int repeats,
              const std::string& json_out) {
    const sf::PipelineConfig cfg = o.resolve();
    sf::BenchOptions opts;
    opts.batch_sizes.clear();
    for (double b : parse_list(batches, 0, "--batches")) opts.batch_sizes.push_back(static_cast<int>(b));
    opts.input_duration_s = duration;
    opts.input_rate_hz = rate;
    opts.repeats = repeats;
    const std::vector<sf::RtfReport> reports = sf::bench_rtf(cfg, opts);

    std::printf("%-6s %12s %12s %14s", "batch", "audio_s", "elapsed_s", "rtf");
    for (sf::Op op : sf::kPipelineOrder) std::printf(" %12s", std::string(sf::op_name(op)).c_str());
    std::printf("\n");
    nlohmann::json all = nlohmann::json::array();
    for (const sf::RtfReport& r : reports) {
        std::printf("%-6d %12.3f %12.4f %14.10f", r.batch_size, r.audio_seconds_processed, r.wall_clock_seconds, r.rtf);
        for (double s : r.stage_breakdown) std::printf(" %12.4f", s);
        std::printf("\n");
        all.push_back(r.to_json());
    }
    if (!json_out.empty()) write_text(json_out, all.dump(2) + "\n");
    return kExitOk;
}

int run_inspect(const std::string& manifest, int bins, bool as_json) {
    const auto entries = sf::read_manifest(manifest);
    const nlohmann::json s = sf::summarize_manifest(entries, bins);
    if (as_json) {
        std::cout << s.dump(2) << "\n";
        return kExitOk;
    }
    std::printf("%zu entries\n\n%-12s %8s %8s\n", entries.size(), "op", "applied", "rate");
    for (sf::Op op : sf::kPipelineOrder) {
        const auto& o = s["ops"][std::string(sf::op_name(op))];
        std::printf("%-12s %8zu %8.4f\n", std::string(sf::op_name(op)).c_str(), o["applied"].get<std::size_t>(),
                    o["rate"].get<double>());
    }
    for (sf::Op op : sf::kPipelineOrder) {
        const auto& params = s["ops"][std::string(sf::op_name(op))]["params"];
        for (const auto& [key, h] : params.items()) {
            std::printf("\n%s.%s  (n=%zu, min %.6g, max %.6g)\n", std::string(sf::op_name(op)).c_str(), key.c_str(),
                        h["count"].get<std::size_t>(), h["min"].get<double>(), h["max"].get<double>());
            std::vector<std::pair<std::string, std::size_t>> rows;
            if (h.contains("categories")) {
                for (const auto& c : h["categories"]) {
                    char label[64];
                    std::snprintf(label, sizeof label, "%.6g", c["value"].get<double>());
                    rows.emplace_back(label, c["count"].get<std::size_t>());
                }
            } else {
                const auto& edges = h["edges"];
                const auto& counts = h["counts"];
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    char label[64];
                    std::snprintf(label, sizeof label, "[%.4g, %.4g)", edges[i].get<double>(), edges[i + 1].get<double>());
                    rows.emplace_back(label, counts[i].get<std::size_t>());
                }
            }
            std::size_t peak = 1;
            for (const auto& r : rows) peak = std::max(peak, r.second);
            for (const auto& [label, count] : rows) {
                std::printf("  %-22s %7zu %s\n", label.c_str(), count, std::string(40 * count / peak, '#').c_str());
            }
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sidonforge: deterministic paired (clean, degraded) speech data synthesis"};
    app.footer(kConfigHelp);
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "no progress line, warnings only");

    Overrides degrade_opts;
    auto* degrade = app.add_subcommand("degrade", "degrade every clean utterance into N variants plus a manifest");
    degrade_opts.add_to(degrade);

    RirArgs rir_args;
    auto* rir = app.add_subcommand("rir", "simulate one room impulse response and write it as 32-bit float WAV");
    rir->add_option("--rt60", rir_args.rt60, "target RT60 in seconds")->capture_default_str();
    rir->add_option("--dims", rir_args.dims, "room size Lx,Ly,Lz in meters")->required();
    rir->add_option("--src", rir_args.src, "source position x,y,z")->required();
    rir->add_option("--mic", rir_args.mic, "microphone position x,y,z")->required();
    rir->add_option("--rate", rir_args.rate, "sample rate in Hz")->capture_default_str();
    rir->add_option("--out", rir_args.out, "output WAV")->required();
    rir->add_option("--speed-of-sound", rir_args.c, "m/s")->capture_default_str();
    rir->add_option("--max-order-cap", rir_args.cap, "reflection order limit")->capture_default_str();
    rir->add_option("--sabine", rir_args.sabine, "0.161 or derived")->capture_default_str();
    rir->add_option("--absorption", rir_args.absorption, "override the Sabine absorption");
    rir->add_option("--max-order", rir_args.max_order, "override the reflection order");

    std::string noise_root;
    std::string noise_out;
    auto* index = app.add_subcommand("index-noise", "index a directory of noise WAVs into a JSON-lines file");
    index->add_option("root", noise_root, "noise directory")->required();
    index->add_option("-o,--out", noise_out, "index file")->required();

    std::string validate_manifest_path;
    std::string report_path;
    Overrides validate_opts;
    auto* validate = app.add_subcommand("validate", "replay manifest entries stage by stage and check them with oracles");
    validate->add_option("manifest", validate_manifest_path, "manifest.jsonl")->required();
    validate->add_option("--report", report_path, "JSON report path (default stdout)");
    validate->add_option("-c,--config", validate_opts.config, "config (default: run_config.toml beside the manifest)");
    validate->add_option("--noise-index", validate_opts.noise_index, "override noise_index");

    Overrides bench_opts;
    std::string batches = "1,2,4,8";
    double bench_duration = 30.0;
    int bench_rate = 16000;
    int bench_repeats = 3;
    std::string bench_json;
    auto* bench = app.add_subcommand("bench", "time full degradation (all stages on) of synthetic input batches");
    bench->add_option("-c,--config", bench_opts.config, "TOML config file");
    bench->add_option("--noise-index", bench_opts.noise_index, "noise index (default: synthetic white noise)");
    bench->add_option("--seed", bench_opts.seed, "override global_seed");
    bench->add_option("--workers", bench_opts.workers, "threads per batch");
    bench->add_option("--batches", batches, "comma-separated batch sizes")->capture_default_str();
    bench->add_option("--duration", bench_duration, "seconds per input")->capture_default_str();
    bench->add_option("--rate", bench_rate, "input sample rate")->capture_default_str();
    bench->add_option("--repeats", bench_repeats, "timed iterations per batch size")->capture_default_str();
    bench->add_option("--json", bench_json, "also write the reports as JSON");

    std::string inspect_manifest;
    int inspect_bins = 10;
    bool inspect_json = false;
    auto* inspect = app.add_subcommand("inspect", "per-stage application rates and parameter histograms");
    inspect->add_option("manifest", inspect_manifest, "manifest.jsonl")->required();
    inspect->add_option("--bins", inspect_bins, "histogram bins")->capture_default_str();
    inspect->add_flag("--json", inspect_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << kConfigHelp;
        return kExitFatal;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("sidonforge"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        if (*degrade) return run_degrade(degrade_opts, quiet);
        if (*rir) return run_rir(rir_args);
        if (*index) return run_index_noise(noise_root, noise_out);
        if (*validate) return run_validate(validate_manifest_path, validate_opts, report_path);
        if (*bench) return run_bench(bench_opts, batches, bench_duration, bench_rate, bench_repeats, bench_json);
        if (*inspect) return run_inspect(inspect_manifest, inspect_bins, inspect_json);
    } catch (const sf::Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return kExitFatal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}
