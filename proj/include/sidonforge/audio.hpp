// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sidonforge/waveform.hpp"

namespace sidonforge {

// ---------------------------------------------------------------------------
// WAV I/O
// ---------------------------------------------------------------------------

enum class BitDepth { Int16, Int24, Float32 };

/// Parses "16", "24", "32f" (also "32").
BitDepth parse_bit_depth(const std::string& text);
std::string to_string(BitDepth depth);

struct WavInfo {
    int sample_rate_hz = 0;
    int channels = 0;
    int bits_per_sample = 0;
    bool is_float = false;
    std::size_t frames = 0;

    double duration_seconds() const {
        return static_cast<double>(frames) / static_cast<double>(sample_rate_hz);
    }
};

/// Reads only the header chunks; validates that the data chunk is complete.
WavInfo read_wav_info(const std::filesystem::path& path);

/// Reads a PCM (16/24/32-bit integer) or IEEE float WAV, averaging channels
/// to mono. Integer PCM is scaled by 2^-(bits-1), so full scale maps to [-1, 1).
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const unsigned char> bytes);

/// Integer depths saturate at the extreme codes and round to nearest.
void write_wav(const Waveform& w, const std::filesystem::path& path, BitDepth depth);
std::vector<unsigned char> encode_wav(const Waveform& w, BitDepth depth);

/// Value a sample takes after a write/read round trip at `depth`.
double quantize_sample(double x, BitDepth depth);

// ---------------------------------------------------------------------------
// Sample-rate conversion
// ---------------------------------------------------------------------------

/// Polyphase windowed-sinc (Kaiser) rational resampler. Passband edge is
/// 0.45 * min(source, target), stopband starts at 0.5 * min(source, target)
/// with >= 80 dB rejection. Output length is round(len * target / source).
/// Resampling to the source rate returns the input unchanged.
Waveform resample(const Waveform& w, int target_rate_hz);

/// Same converter without the supported-rate check on the target; used for
/// the return leg of band limitation and for matching noise to arbitrary
/// clean rates.
Waveform convert_rate(const Waveform& w, int target_rate_hz);

// ---------------------------------------------------------------------------
// FFT and convolution
// ---------------------------------------------------------------------------

/// In-place iterative radix-2 FFT; `data.size()` must be a power of two.
void fft_inplace(std::span<std::complex<double>> data, bool inverse);

std::size_t next_pow2(std::size_t n);

/// Full linear convolution of two real sequences via FFT
/// (length a.size() + b.size() - 1).
std::vector<double> fft_convolve_full(std::span<const double> a, std::span<const double> b);

struct Rir;

/// Convolves with the impulse response and truncates to the signal length.
Waveform fft_convolve(const Waveform& signal, const Rir& kernel);

// ---------------------------------------------------------------------------
// Levels
// ---------------------------------------------------------------------------

double rms(std::span<const double> samples);
inline double rms(const Waveform& w) { return rms(w.view()); }

}  // namespace sidonforge
