// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "sidonforge/error.hpp"

namespace sidonforge {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const unsigned char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

bool is_wav(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".wav";
}

using TaskKey = std::pair<std::string, int>;

/// Serializes manifest lines from many workers into one append-only file.
class ManifestAppender {
public:
    explicit ManifestAppender(const fs::path& path) : out_(path, std::ios::binary | std::ios::app) {
        if (!out_) throw IoError("cannot open " + path.string());
    }
    void append(const nlohmann::json& line) {
        const std::string text = line.dump() + "\n";
        const std::lock_guard lock(mutex_);
        out_ << text;
        out_.flush();
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
};

void load_manifest_lines(const fs::path& path, std::map<TaskKey, nlohmann::json>& into) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TaskKey key{j.at("utterance_id").get<std::string>(), j.at("variant_index").get<int>()};
            into[key] = std::move(j);
        } catch (const nlohmann::json::exception&) {
            // A torn final line from an interrupted run; that task is redone.
        }
    }
}

void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        body(out);
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

const CorpusInfo* match_corpus(const std::vector<CorpusInfo>& corpora, const std::string& id) {
    const CorpusInfo* best = nullptr;
    for (const CorpusInfo& c : corpora) {
        if (id.starts_with(c.prefix) && (best == nullptr || c.prefix.size() > best->prefix.size())) best = &c;
    }
    return best;
}

std::shared_ptr<const NoisePool> load_pool(const PipelineConfig& cfg) {
    if (cfg.noise_index.empty()) return nullptr;
    return std::make_shared<const NoisePool>(NoisePool::load_index(cfg.noise_index));
}

}  // namespace

Degrader make_degrader(const PipelineConfig& cfg) {
    if (cfg.codec.max_concurrent < 1) throw FatalConfig("codec.max_concurrent must be >= 1");
    cfg.degradation.validate();
    return Degrader(cfg.degradation, load_pool(cfg), CodecBackend::from_config(cfg.codec), cfg.global_seed);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view utterance_id, int variant_index) {
    unsigned char seed_bytes[8];
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<unsigned char>((global_seed >> (8 * i)) & 0xFF);
    const auto variant = static_cast<std::uint32_t>(variant_index);
    unsigned char variant_bytes[4];
    for (int i = 0; i < 4; ++i) variant_bytes[i] = static_cast<unsigned char>((variant >> (8 * i)) & 0xFF);
    const unsigned char separator = 0;

    std::uint64_t h = kFnvOffset;
    h = fnv1a(h, seed_bytes, 8);
    h = fnv1a(h, reinterpret_cast<const unsigned char*>(utterance_id.data()), utterance_id.size());
    h = fnv1a(h, &separator, 1);
    h = fnv1a(h, variant_bytes, 4);
    return splitmix64_finalize(h);
}

// ---------------------------------------------------------------------------
// Degrader
// ---------------------------------------------------------------------------

Degrader::Degrader(DegradationConfig config, std::shared_ptr<const NoisePool> pool, CodecBackend backend,
                   std::uint64_t global_seed)
    : config_(std::move(config)), pool_(std::move(pool)), backend_(std::move(backend)), global_seed_(global_seed) {
    config_.validate();
    if (config_.per_op_probability > 0.0 && (pool_ == nullptr || pool_->empty())) {
        throw FatalConfig("a noise pool is required when degradations can be applied");
    }
}

DegradeResult Degrader::degrade(const Waveform& clean, std::string_view utterance_id, int variant_index,
                                StageSeconds* timing) const {
    require_valid(clean, "degrade");
    if (!is_supported_rate(clean.sample_rate_hz)) {
        throw UnsupportedRate("degrade: input rate " + std::to_string(clean.sample_rate_hz) + " Hz is not supported");
    }
    DegradeResult result;
    const std::uint64_t seed = derive_seed(global_seed_, utterance_id, variant_index);
    Rng rng(seed);
    result.record = sample_params(config_, rng);
    result.record.rng_seed = seed;
    result.record.variant_index = variant_index;
    result.audio = apply(clean, result.record, pool_.get(), backend_, timing);
    return result;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

nlohmann::json to_json(const ManifestEntry& e) {
    nlohmann::json j = {{"schema", kManifestSchema},
                        {"utterance_id", e.utterance_id},
                        {"variant_index", e.variant_index},
                        {"clean_path", e.clean_path},
                        {"noisy_path", e.noisy_path},
                        {"duration_s", e.duration_s},
                        {"sample_rate_hz", e.sample_rate_hz},
                        {"record", e.record}};
    j["language"] = e.language.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.language);
    j["dataset_name"] = e.dataset_name.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.dataset_name);
    return j;
}

ManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    try {
        if (j.at("schema").get<std::string>() != kManifestSchema) {
            throw InvalidArgument("unexpected manifest schema " + j.at("schema").dump());
        }
        e.utterance_id = j.at("utterance_id").get<std::string>();
        e.variant_index = j.at("variant_index").get<int>();
        e.clean_path = j.at("clean_path").get<std::string>();
        e.noisy_path = j.at("noisy_path").get<std::string>();
        if (j.contains("language") && j["language"].is_string()) e.language = j["language"].get<std::string>();
        if (j.contains("dataset_name") && j["dataset_name"].is_string()) {
            e.dataset_name = j["dataset_name"].get<std::string>();
        }
        e.duration_s = j.at("duration_s").get<double>();
        e.sample_rate_hz = j.at("sample_rate_hz").get<int>();
        e.record = j.at("record");
    } catch (const nlohmann::json::exception& ex) {
        throw InvalidArgument(std::string("malformed manifest entry: ") + ex.what());
    }
    return e;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            entries.push_back(manifest_entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return entries;
}

std::string noisy_relative_path(std::string_view utterance_id, int variant_index) {
    fs::path p{std::string(utterance_id)};
    p.replace_extension();
    return p.generic_string() + ".v" + std::to_string(variant_index) + ".wav";
}

std::vector<std::string> scan_corpus(const fs::path& clean_root) {
    std::error_code ec;
    if (!fs::is_directory(clean_root, ec)) throw FatalConfig("clean_root " + clean_root.string() + " is not a directory");
    std::vector<std::string> ids;
    for (auto it = fs::recursive_directory_iterator(clean_root, fs::directory_options::follow_directory_symlink, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (it->is_regular_file(ec) && is_wav(it->path())) {
            ids.push_back(fs::relative(it->path(), clean_root).generic_string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

// ---------------------------------------------------------------------------
// Corpus run
// ---------------------------------------------------------------------------

PipelineSummary run_pipeline(const PipelineConfig& cfg, const ProgressCallback& progress) {
    cfg.validate();
    const std::vector<std::string> ids = scan_corpus(cfg.clean_root);
    if (ids.empty()) throw FatalConfig("no WAV files under " + cfg.clean_root.string());

    const Degrader degrader = make_degrader(cfg);

    fs::create_directories(cfg.out_root);
    const fs::path manifest_path = cfg.out_root / kManifestFileName;
    const fs::path partial_path = cfg.out_root / kPartialManifestFileName;
    {
        std::ofstream run_config(cfg.out_root / kRunConfigFileName, std::ios::binary | std::ios::trunc);
        run_config << to_toml(cfg);
    }

    std::map<TaskKey, nlohmann::json> previous;
    load_manifest_lines(manifest_path, previous);
    load_manifest_lines(partial_path, previous);

    struct Utterance {
        std::string id;
        WavInfo info;
        bool readable = false;
        std::string error;
    };
    std::vector<Utterance> utterances(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        utterances[i].id = ids[i];
        try {
            utterances[i].info = read_wav_info(cfg.clean_root / ids[i]);
            utterances[i].readable = utterances[i].info.frames > 0;
            if (!utterances[i].readable) utterances[i].error = "no audio frames";
        } catch (const Error& e) {
            utterances[i].error = e.what();
        }
    }

    const int variants = cfg.variants_per_utterance;
    const std::size_t total_tasks = utterances.size() * static_cast<std::size_t>(variants);

    PipelineSummary summary;
    summary.utterances = utterances.size();
    std::mutex state_mutex;
    std::map<TaskKey, nlohmann::json> finished;
    std::vector<std::vector<bool>> ok(utterances.size(), std::vector<bool>(static_cast<std::size_t>(variants), false));
    ManifestAppender appender(partial_path);

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    double hours_in_done = 0.0;
    double hours_out_done = 0.0;
    const auto started = std::chrono::steady_clock::now();

    auto report = [&](double seconds_in, double seconds_out) {
        const std::lock_guard lock(state_mutex);
        ++done;
        hours_in_done += seconds_in / 3600.0;
        hours_out_done += seconds_out / 3600.0;
        if (progress) {
            progress({done, total_tasks, hours_in_done, hours_out_done,
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()});
        }
    };

    auto worker = [&] {
        for (std::size_t task = next.fetch_add(1); task < total_tasks; task = next.fetch_add(1)) {
            const std::size_t u = task / static_cast<std::size_t>(variants);
            const int v = static_cast<int>(task % static_cast<std::size_t>(variants));
            const Utterance& utt = utterances[u];
            if (!utt.readable) {
                if (v == 0) {
                    const std::lock_guard lock(state_mutex);
                    summary.failures.push_back({utt.id, -1, utt.error});
                }
                report(0.0, 0.0);
                continue;
            }
            const std::string rel = noisy_relative_path(utt.id, v);
            const fs::path out_path = cfg.out_root / rel;
            const TaskKey key{utt.id, v};

            // Resume: keep outputs that are complete and have a manifest line.
            if (auto it = previous.find(key); it != previous.end()) {
                try {
                    const WavInfo existing = read_wav_info(out_path);
                    if (existing.frames == utt.info.frames && existing.sample_rate_hz == utt.info.sample_rate_hz) {
                        {
                            const std::lock_guard lock(state_mutex);
                            finished[key] = it->second;
                            ok[u][static_cast<std::size_t>(v)] = true;
                            ++summary.resumed;
                        }
                        report(v == 0 ? utt.info.duration_seconds() : 0.0, existing.duration_seconds());
                        continue;
                    }
                } catch (const Error&) {
                }
            }

            try {
                const Waveform clean = read_wav(cfg.clean_root / utt.id);
                DegradeResult result = degrader.degrade(clean, utt.id, v);
                fs::create_directories(out_path.parent_path());
                const fs::path tmp = out_path.string() + ".partial";
                write_wav(result.audio, tmp, cfg.output_bit_depth);
                fs::rename(tmp, out_path);

                ManifestEntry entry;
                entry.utterance_id = utt.id;
                entry.variant_index = v;
                entry.clean_path = (cfg.clean_root / utt.id).generic_string();
                entry.noisy_path = rel;
                if (const CorpusInfo* corpus = match_corpus(cfg.corpora, utt.id)) {
                    entry.language = corpus->language;
                    entry.dataset_name = corpus->name;
                }
                entry.duration_s = clean.duration_seconds();
                entry.sample_rate_hz = clean.sample_rate_hz;
                entry.record = to_json(result.record);
                nlohmann::json line = to_json(entry);
                appender.append(line);
                {
                    const std::lock_guard lock(state_mutex);
                    finished[key] = std::move(line);
                    ok[u][static_cast<std::size_t>(v)] = true;
                    ++summary.generated;
                }
                report(v == 0 ? clean.duration_seconds() : 0.0, result.audio.duration_seconds());
            } catch (const Error& e) {
                {
                    const std::lock_guard lock(state_mutex);
                    summary.failures.push_back({utt.id, v, e.what()});
                }
                spdlog::warn("{} variant {} failed: {}", utt.id, v, e.what());
                report(0.0, 0.0);
            } catch (const std::exception& e) {
                {
                    const std::lock_guard lock(state_mutex);
                    summary.failures.push_back({utt.id, v, e.what()});
                }
                spdlog::warn("{} variant {} failed: {}", utt.id, v, e.what());
                report(0.0, 0.0);
            }
        }
    };

    const int n_workers = std::min<int>(cfg.effective_workers(), static_cast<int>(std::max<std::size_t>(1, total_tasks)));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    }

    // Hours are recomputed from headers so they do not depend on scheduling.
    for (std::size_t u = 0; u < utterances.size(); ++u) {
        const auto good = static_cast<std::size_t>(std::count(ok[u].begin(), ok[u].end(), true));
        if (good == 0) continue;
        summary.hours_in += utterances[u].info.duration_seconds() / 3600.0;
        summary.hours_out += static_cast<double>(good) * utterances[u].info.duration_seconds() / 3600.0;
    }
    summary.variants = finished.size();

    write_atomically(manifest_path, [&](std::ostream& out) {
        for (const auto& [key, line] : finished) out << line.dump() << '\n';
    });
    std::error_code ec;
    fs::remove(partial_path, ec);

    std::sort(summary.failures.begin(), summary.failures.end(), [](const Failure& a, const Failure& b) {
        return std::tie(a.utterance_id, a.variant_index) < std::tie(b.utterance_id, b.variant_index);
    });
    return summary;
}

// ---------------------------------------------------------------------------
// Throughput benchmark
// ---------------------------------------------------------------------------

nlohmann::json RtfReport::to_json() const {
    nlohmann::json stages = nlohmann::json::object();
    for (Op op : kPipelineOrder) stages[std::string(op_name(op))] = stage_breakdown[static_cast<std::size_t>(op)];
    return {{"batch_size", batch_size},
            {"repeats", repeats},
            {"audio_seconds_processed", audio_seconds_processed},
            {"wall_clock_seconds", wall_clock_seconds},
            {"rtf", rtf},
            {"stage_breakdown", stages}};
}

Waveform synth_speech_like(double duration_s, int rate_hz, std::uint64_t seed) {
    if (!(duration_s > 0.0) || rate_hz <= 0) throw InvalidArgument("synth_speech_like needs a positive duration and rate");
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    Waveform w{std::vector<double>(std::max<std::size_t>(n, 1), 0.0), rate_hz};
    const double nyquist = 0.5 * rate_hz;
    const double f0 = rng.uniform(100.0, 220.0);
    const double syllable_hz = rng.uniform(3.0, 5.0);
    double phase = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        const double pitch = f0 * (1.0 + 0.05 * std::sin(2.0 * M_PI * 0.7 * t));
        phase += 2.0 * M_PI * pitch / rate_hz;
        double voiced = 0.0;
        for (int h = 1; h <= 20 && h * pitch < nyquist; ++h) voiced += std::sin(h * phase) / h;
        const double envelope = std::pow(std::max(0.0, std::sin(M_PI * syllable_hz * t)), 2.0);
        w.samples[i] = 0.3 * envelope * voiced + 0.01 * rng.uniform(-1.0, 1.0);
    }
    return w;
}

std::vector<RtfReport> bench_rtf(const PipelineConfig& cfg, const BenchOptions& options) {
    if (options.repeats < 1) throw InvalidArgument("bench repeats must be >= 1");
    if (!(options.input_duration_s > 0.0)) throw InvalidArgument("bench duration must be positive");
    if (!is_supported_rate(options.input_rate_hz)) {
        throw UnsupportedRate("bench rate " + std::to_string(options.input_rate_hz) + " is not supported");
    }
    for (int b : options.batch_sizes) {
        if (b < 1) throw InvalidArgument("batch sizes must be >= 1");
    }

    DegradationConfig degradation = cfg.degradation;
    degradation.per_op_probability = 1.0;
    std::shared_ptr<const NoisePool> pool = load_pool(cfg);
    if (pool == nullptr) {
        Rng rng(cfg.global_seed ^ 0x6e6f697365ULL);
        Waveform noise{std::vector<double>(static_cast<std::size_t>(options.input_rate_hz) * 5), options.input_rate_hz};
        for (double& s : noise.samples) s = rng.uniform(-0.5, 0.5);
        pool = std::make_shared<const NoisePool>(NoisePool::from_waveforms({{"white", std::move(noise)}}));
    }
    const Degrader degrader(degradation, pool, CodecBackend::from_config(cfg.codec), cfg.global_seed);

    const int max_batch = *std::max_element(options.batch_sizes.begin(), options.batch_sizes.end());
    std::vector<Waveform> inputs;
    for (int i = 0; i < max_batch; ++i) {
        inputs.push_back(synth_speech_like(options.input_duration_s, options.input_rate_hz, cfg.global_seed + i));
    }

    const int workers = cfg.effective_workers();
    std::vector<RtfReport> reports;
    for (int batch : options.batch_sizes) {
        auto run_batch = [&](int iteration, StageSeconds& stages) {
            std::atomic<int> next{0};
            std::vector<StageSeconds> per_thread(static_cast<std::size_t>(std::min(batch, workers)), StageSeconds{});
            auto worker = [&](std::size_t slot) {
                for (int i = next.fetch_add(1); i < batch; i = next.fetch_add(1)) {
                    const std::string id = "bench/" + std::to_string(i) + ".wav";
                    degrader.degrade(inputs[static_cast<std::size_t>(i)], id, iteration, &per_thread[slot]);
                }
            };
            {
                std::vector<std::jthread> threads;
                for (std::size_t t = 0; t < per_thread.size(); ++t) threads.emplace_back(worker, t);
            }
            for (const StageSeconds& s : per_thread) {
                for (std::size_t k = 0; k < kNumOps; ++k) stages[k] += s[k];
            }
        };

        StageSeconds warmup{};
        run_batch(0, warmup);

        RtfReport report;
        report.batch_size = batch;
        report.repeats = options.repeats;
        for (int r = 1; r <= options.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            run_batch(r, report.stage_breakdown);
            report.wall_clock_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (int i = 0; i < batch; ++i) report.audio_seconds_processed += inputs[static_cast<std::size_t>(i)].duration_seconds();
        }
        report.rtf = report.wall_clock_seconds / report.audio_seconds_processed;
        reports.push_back(report);
    }
    return reports;
}

}  // namespace sidonforge
