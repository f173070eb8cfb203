// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/noise_pool.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"

namespace sidonforge {
namespace fs = std::filesystem;

namespace {

constexpr int kMaxDrawAttempts = 3;

bool has_wav_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".wav";
}

}  // namespace

std::uint64_t loop_to_length(const std::vector<double>& noise, std::size_t target_len, std::vector<double>& out) {
    if (noise.empty()) throw InvalidArgument("cannot loop an empty noise recording");
    out.clear();
    out.reserve(target_len);
    std::uint64_t copies = 0;
    while (out.size() < target_len) {
        const std::size_t take = std::min(noise.size(), target_len - out.size());
        out.insert(out.end(), noise.begin(), noise.begin() + static_cast<std::ptrdiff_t>(take));
        ++copies;
    }
    return std::max<std::uint64_t>(copies, 1);
}

NoisePool NoisePool::build_index(const fs::path& root, const fs::path& index_out, std::vector<SkippedFile>* skipped) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw EmptyPool("noise root " + root.string() + " is not a directory");

    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::follow_directory_symlink, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (it->is_regular_file(ec) && has_wav_extension(it->path())) files.push_back(it->path());
    }

    NoisePool pool;
    for (const fs::path& file : files) {
        const std::string id = fs::relative(file, root).generic_string();
        try {
            const WavInfo info = read_wav_info(file);
            if (info.frames == 0) throw MalformedWav("no audio frames");
            pool.entries_.push_back({id, fs::absolute(file).lexically_normal(), info.duration_seconds(), info.sample_rate_hz, nullptr});
        } catch (const Error& e) {
            spdlog::warn("skipping noise file {}: {}", id, e.what());
            if (skipped != nullptr) skipped->push_back({id, e.what()});
        }
    }
    if (pool.entries_.empty()) throw EmptyPool("no decodable WAV files under " + root.string());
    std::sort(pool.entries_.begin(), pool.entries_.end(),
              [](const NoiseEntry& a, const NoiseEntry& b) { return a.id < b.id; });
    if (skipped != nullptr) {
        std::sort(skipped->begin(), skipped->end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    }
    if (!index_out.empty()) pool.write_index(index_out);
    return pool;
}

void NoisePool::write_index(const fs::path& index_out) const {
    if (index_out.has_parent_path()) fs::create_directories(index_out.parent_path());
    std::ofstream out(index_out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write noise index " + index_out.string());
    for (const NoiseEntry& e : entries_) {
        const nlohmann::json line = {
            {"id", e.id}, {"path", e.path.generic_string()}, {"duration_s", e.duration_s}, {"sample_rate_hz", e.sample_rate_hz}};
        out << line.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + index_out.string());
}

NoisePool NoisePool::load_index(const fs::path& index_file) {
    std::ifstream in(index_file);
    if (!in) throw IoError("cannot open noise index " + index_file.string());
    NoisePool pool;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            NoiseEntry e;
            e.id = j.at("id").get<std::string>();
            e.path = j.at("path").get<std::string>();
            if (e.path.is_relative()) e.path = index_file.parent_path() / e.path;
            e.duration_s = j.at("duration_s").get<double>();
            e.sample_rate_hz = j.at("sample_rate_hz").get<int>();
            if (!(e.duration_s > 0.0)) throw FatalConfig("duration_s must be positive");
            if (!seen.insert(e.id).second) throw FatalConfig("duplicate id '" + e.id + "'");
            pool.entries_.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw FatalConfig(index_file.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        } catch (const FatalConfig& ex) {
            throw FatalConfig(index_file.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    if (pool.entries_.empty()) throw EmptyPool("noise index " + index_file.string() + " has no entries");
    return pool;
}

NoisePool NoisePool::from_waveforms(std::vector<std::pair<std::string, Waveform>> items) {
    NoisePool pool;
    std::set<std::string> seen;
    for (auto& [id, w] : items) {
        require_valid(w, "noise pool entry");
        if (!seen.insert(id).second) throw InvalidArgument("duplicate noise id '" + id + "'");
        NoiseEntry e;
        e.id = id;
        e.duration_s = w.duration_seconds();
        e.sample_rate_hz = w.sample_rate_hz;
        e.audio = std::make_shared<const Waveform>(std::move(w));
        pool.entries_.push_back(std::move(e));
    }
    if (pool.entries_.empty()) throw EmptyPool("no noise waveforms supplied");
    std::sort(pool.entries_.begin(), pool.entries_.end(),
              [](const NoiseEntry& a, const NoiseEntry& b) { return a.id < b.id; });
    return pool;
}

NoiseDraw NoisePool::materialize(std::size_t index, std::size_t target_len, int target_rate_hz) const {
    const NoiseEntry& entry = entries_.at(index);
    Waveform source = entry.audio ? *entry.audio : read_wav(entry.path);
    if (source.sample_rate_hz != target_rate_hz) source = convert_rate(source, target_rate_hz);
    NoiseDraw draw;
    draw.id = entry.id;
    draw.audio.sample_rate_hz = target_rate_hz;
    draw.loop_count = loop_to_length(source.samples, target_len, draw.audio.samples);
    return draw;
}

NoiseDraw NoisePool::draw(std::size_t target_len, int target_rate_hz, Rng& rng) const {
    if (entries_.empty()) throw EmptyPool("cannot draw from an empty noise pool");
    std::string last_error;
    for (int attempt = 1; attempt <= kMaxDrawAttempts; ++attempt) {
        const auto index = static_cast<std::size_t>(rng.index(entries_.size()));
        try {
            NoiseDraw d = materialize(index, target_len, target_rate_hz);
            d.attempts = attempt;
            return d;
        } catch (const Error& e) {
            last_error = e.what();
            spdlog::warn("noise entry {} failed to load: {}", entries_[index].id, last_error);
        }
    }
    throw NoiseDecodeFatal("3 consecutive noise draws failed; last error: " + last_error);
}

}  // namespace sidonforge
