// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sidonforge/rng.hpp"
#include "sidonforge/waveform.hpp"

namespace sidonforge {

struct NoiseEntry {
    std::string id;  // path relative to the pool root, '/'-separated
    std::filesystem::path path;
    double duration_s = 0.0;
    int sample_rate_hz = 0;
    /// In-memory entries (benchmarks, bindings) bypass decoding.
    std::shared_ptr<const Waveform> audio;
};

struct SkippedFile {
    std::string id;
    std::string reason;
};

struct NoiseDraw {
    Waveform audio;
    std::string id;
    std::uint64_t loop_count = 0;
    int attempts = 1;
};

/// Immutable index of noise recordings; safe to share across threads.
class NoisePool {
public:
    NoisePool() = default;

    /// Recursively indexes *.wav under `root` (entries sorted by id) and writes
    /// the JSON-lines index to `index_out` when non-empty. Undecodable files
    /// are skipped and reported in `skipped`. Throws EmptyPool if nothing
    /// usable was found.
    static NoisePool build_index(const std::filesystem::path& root, const std::filesystem::path& index_out,
                                 std::vector<SkippedFile>* skipped = nullptr);

    /// Loads an index written by build_index. Relative paths resolve against
    /// the index file's directory.
    static NoisePool load_index(const std::filesystem::path& index_file);

    static NoisePool from_waveforms(std::vector<std::pair<std::string, Waveform>> items);

    void write_index(const std::filesystem::path& index_out) const;

    const std::vector<NoiseEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Picks an entry uniformly, converts it to `target_rate_hz`, loops it by
    /// plain concatenation until it covers `target_len`, then truncates.
    /// Decode failures trigger a redraw (3 attempts total) before
    /// NoiseDecodeFatal is thrown.
    NoiseDraw draw(std::size_t target_len, int target_rate_hz, Rng& rng) const;

    /// Loads, converts and loops one entry.
    NoiseDraw materialize(std::size_t index, std::size_t target_len, int target_rate_hz) const;

private:
    std::vector<NoiseEntry> entries_;
};

/// Tiles `noise` until it covers `target_len` samples and truncates.
/// Returns the number of copies used.
std::uint64_t loop_to_length(const std::vector<double>& noise, std::size_t target_len, std::vector<double>& out);

}  // namespace sidonforge
