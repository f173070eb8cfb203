// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sidonforge/pipeline.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "sf");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Writes `count` speech-like clean files (nested in two speaker dirs) whose
/// durations sum to `total_seconds`, at `rate_hz`. Returns their ids.
std::vector<std::string> make_corpus(const std::filesystem::path& root, int count, double total_seconds, int rate_hz,
                                     std::uint64_t seed = 1);

/// Writes `count` white/pink-ish noise files and returns the index path.
std::filesystem::path make_noise_pool(const std::filesystem::path& dir, int count, double seconds, int rate_hz,
                                      std::uint64_t seed = 2);

/// Config for a toy run: clean corpus, noise index, identity codec.
sidonforge::PipelineConfig toy_config(const std::filesystem::path& clean, const std::filesystem::path& out,
                                      const std::filesystem::path& noise_index);

/// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> read_tree(const std::filesystem::path& root);

/// Runs a shell command; returns its exit status. Output goes to `log` when set.
int run(const std::string& command, std::string* output = nullptr);

std::string quote(const std::string& s);

}  // namespace fixtures
