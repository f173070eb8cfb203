// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <sys/wait.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sidonforge/audio.hpp"
#include "sidonforge/noise_pool.hpp"
#include "sidonforge/rng.hpp"

namespace fs = std::filesystem;

namespace fixtures {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    for (;;) {
        path_ = fs::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
        if (fs::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::vector<std::string> make_corpus(const fs::path& root, int count, double total_seconds, int rate_hz,
                                     std::uint64_t seed) {
    sidonforge::Rng rng(seed);
    std::vector<double> weights;
    double sum = 0.0;
    for (int i = 0; i < count; ++i) {
        weights.push_back(rng.uniform(0.5, 1.5));
        sum += weights.back();
    }
    std::vector<std::string> ids;
    for (int i = 0; i < count; ++i) {
        const double seconds = total_seconds * weights[static_cast<std::size_t>(i)] / sum;
        const std::string id = "spk" + std::to_string(i % 2) + "/utt_" + std::to_string(100 + i) + ".wav";
        fs::create_directories((root / id).parent_path());
        sidonforge::write_wav(sidonforge::synth_speech_like(seconds, rate_hz, seed * 1000 + static_cast<std::uint64_t>(i)),
                              root / id, sidonforge::BitDepth::Int16);
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

fs::path make_noise_pool(const fs::path& dir, int count, double seconds, int rate_hz, std::uint64_t seed) {
    fs::create_directories(dir / "files");
    sidonforge::Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        sidonforge::Waveform w{std::vector<double>(static_cast<std::size_t>(seconds * rate_hz)), rate_hz};
        double lp = 0.0;
        const double colour = 0.2 * i;
        for (double& s : w.samples) {
            lp = colour * lp + (1.0 - colour) * rng.uniform(-0.5, 0.5);
            s = lp;
        }
        sidonforge::write_wav(w, dir / "files" / ("noise_" + std::to_string(i) + ".wav"), sidonforge::BitDepth::Int16);
    }
    const fs::path index = dir / "noise_index.jsonl";
    sidonforge::NoisePool::build_index(dir / "files", index);
    return index;
}

sidonforge::PipelineConfig toy_config(const fs::path& clean, const fs::path& out, const fs::path& noise_index) {
    sidonforge::PipelineConfig cfg;
    cfg.clean_root = clean;
    cfg.out_root = out;
    cfg.noise_index = noise_index;
    cfg.global_seed = 7;
    cfg.workers = 2;
    return cfg;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> tree;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        tree[fs::relative(e.path(), root).generic_string()] = ss.str();
    }
    return tree;
}

int run(const std::string& command, std::string* output) {
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (pipe == nullptr) return -1;
    std::array<char, 4096> buf{};
    std::string text;
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) text += buf.data();
    const int status = pclose(pipe);
    if (output != nullptr) *output = text;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

}  // namespace fixtures
