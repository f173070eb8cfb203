// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"

namespace sidonforge {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct ParsedHeader {
    WavInfo info;
    std::size_t data_offset = 0;
};

// Walks the RIFF chunk list. Only the header region plus the data chunk
// extent is needed, so `total_size` may exceed `bytes.size()` when only a
// prefix of the file was loaded.
ParsedHeader parse_header(std::span<const unsigned char> bytes, std::size_t total_size) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw MalformedWav("missing RIFF/WAVE signature");
    }
    std::optional<WavInfo> fmt;
    std::uint16_t format_tag = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || body + size > bytes.size()) throw MalformedWav("truncated fmt chunk");
            const unsigned char* f = bytes.data() + body;
            format_tag = le16(f);
            WavInfo info;
            info.channels = le16(f + 2);
            info.sample_rate_hz = static_cast<int>(le32(f + 4));
            info.bits_per_sample = le16(f + 14);
            if (format_tag == kFormatExtensible) {
                if (size < 40) throw MalformedWav("truncated WAVE_FORMAT_EXTENSIBLE header");
                format_tag = le16(f + 24);
            }
            if (format_tag != kFormatPcm && format_tag != kFormatFloat) {
                throw UnsupportedEncoding("WAV format tag " + std::to_string(format_tag) + " is not PCM or IEEE float");
            }
            info.is_float = format_tag == kFormatFloat;
            fmt = info;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!fmt) throw MalformedWav("data chunk precedes fmt chunk");
            WavInfo info = *fmt;
            if (info.channels <= 0) throw MalformedWav("zero channels");
            if (info.sample_rate_hz <= 0) throw MalformedWav("zero sample rate");
            const int bps = info.bits_per_sample;
            const bool ok = info.is_float ? (bps == 32 || bps == 64) : (bps == 8 || bps == 16 || bps == 24 || bps == 32);
            if (!ok) throw UnsupportedEncoding("unsupported bit depth " + std::to_string(bps));
            if (body + size > total_size) {
                throw MalformedWav("data chunk declares " + std::to_string(size) + " bytes but the file ends early");
            }
            const std::size_t frame_bytes = static_cast<std::size_t>(info.channels) * (bps / 8);
            info.frames = size / frame_bytes;
            return {info, body};
        }
        pos = body + size + (size & 1U);
    }
    throw MalformedWav(fmt ? "no data chunk" : "no fmt chunk");
}

double read_sample(const unsigned char* p, const WavInfo& info) {
    if (info.is_float) {
        if (info.bits_per_sample == 32) {
            return static_cast<double>(std::bit_cast<float>(le32(p)));
        }
        std::uint64_t bits = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
        return std::bit_cast<double>(bits);
    }
    switch (info.bits_per_sample) {
        case 8:
            return (static_cast<double>(p[0]) - 128.0) / 128.0;
        case 16:
            return static_cast<double>(static_cast<std::int16_t>(le16(p))) / 32768.0;
        case 24: {
            std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
            if (v & 0x800000) v -= 0x1000000;
            return static_cast<double>(v) / 8388608.0;
        }
        default:
            return static_cast<double>(static_cast<std::int32_t>(le32(p))) / 2147483648.0;
    }
}

std::int32_t to_int_code(double x, int bits) {
    const double scale = std::ldexp(1.0, bits - 1);
    const double lo = -scale;
    const double hi = scale - 1.0;
    double v = std::nearbyint(x * scale);
    if (!(v >= lo)) v = lo;  // also catches NaN
    if (v > hi) v = hi;
    return static_cast<std::int32_t>(v);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path, std::size_t max_bytes = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes;
    if (max_bytes == 0) {
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
        bytes.resize(max_bytes);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(max_bytes));
        bytes.resize(static_cast<std::size_t>(in.gcount()));
    }
    return bytes;
}

}  // namespace

BitDepth parse_bit_depth(const std::string& text) {
    if (text == "16") return BitDepth::Int16;
    if (text == "24") return BitDepth::Int24;
    if (text == "32f" || text == "32") return BitDepth::Float32;
    throw InvalidArgument("bit depth must be one of 16, 24, 32f (got '" + text + "')");
}

std::string to_string(BitDepth depth) {
    switch (depth) {
        case BitDepth::Int16: return "16";
        case BitDepth::Int24: return "24";
        case BitDepth::Float32: return "32f";
    }
    return "?";
}

double quantize_sample(double x, BitDepth depth) {
    switch (depth) {
        case BitDepth::Int16: return static_cast<double>(to_int_code(x, 16)) / 32768.0;
        case BitDepth::Int24: return static_cast<double>(to_int_code(x, 24)) / 8388608.0;
        case BitDepth::Float32: return static_cast<double>(static_cast<float>(x));
    }
    return x;
}

Waveform decode_wav(std::span<const unsigned char> bytes) {
    const ParsedHeader header = parse_header(bytes, bytes.size());
    const WavInfo& info = header.info;
    const std::size_t width = static_cast<std::size_t>(info.bits_per_sample / 8);
    const std::size_t frame_bytes = width * static_cast<std::size_t>(info.channels);
    if (info.frames == 0) throw MalformedWav("data chunk holds no complete frame");

    std::vector<double> mono(info.frames);
    const unsigned char* base = bytes.data() + header.data_offset;
    const double inv_channels = 1.0 / info.channels;
    for (std::size_t i = 0; i < info.frames; ++i) {
        const unsigned char* frame = base + i * frame_bytes;
        if (info.channels == 1) {
            mono[i] = read_sample(frame, info);
            continue;
        }
        double acc = 0.0;
        for (int c = 0; c < info.channels; ++c) acc += read_sample(frame + c * width, info);
        mono[i] = acc * inv_channels;
    }
    return Waveform(std::move(mono), info.sample_rate_hz);
}

WavInfo read_wav_info(const std::filesystem::path& path) {
    std::error_code ec;
    const auto total = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
    // Headers with large LIST/metadata chunks may exceed the first probe.
    for (std::size_t probe = 4096;; probe *= 16) {
        const auto bytes = read_file(path, std::min<std::size_t>(probe, total));
        try {
            return parse_header(bytes, total).info;
        } catch (const MalformedWav&) {
            if (bytes.size() >= total) throw;
        }
    }
}

Waveform read_wav(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_wav(bytes);
    } catch (const MalformedWav& e) {
        throw MalformedWav(path.string() + ": " + e.what());
    }
}

std::vector<unsigned char> encode_wav(const Waveform& w, BitDepth depth) {
    require_valid(w, "write_wav");
    const int bits = depth == BitDepth::Int16 ? 16 : depth == BitDepth::Int24 ? 24 : 32;
    const std::uint16_t format = depth == BitDepth::Float32 ? kFormatFloat : kFormatPcm;
    const std::size_t width = static_cast<std::size_t>(bits / 8);
    const std::size_t data_bytes = w.size() * width;
    if (data_bytes > 0xFFFFFFFFULL - 64) throw IoError("waveform too long for a RIFF file");

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes + 1);
    put_tag(out, "RIFF");
    put32(out, static_cast<std::uint32_t>(36 + data_bytes + (data_bytes & 1U)));
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, format);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
    put32(out, static_cast<std::uint32_t>(w.sample_rate_hz * width));
    put16(out, static_cast<std::uint16_t>(width));
    put16(out, static_cast<std::uint16_t>(bits));
    put_tag(out, "data");
    put32(out, static_cast<std::uint32_t>(data_bytes));
    for (double x : w.samples) {
        switch (depth) {
            case BitDepth::Int16:
                put16(out, static_cast<std::uint16_t>(to_int_code(x, 16)));
                break;
            case BitDepth::Int24: {
                const auto v = static_cast<std::uint32_t>(to_int_code(x, 24));
                out.push_back(static_cast<unsigned char>(v & 0xFF));
                out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
                out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
                break;
            }
            case BitDepth::Float32:
                put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
                break;
        }
    }
    if (data_bytes & 1U) out.push_back(0);
    return out;
}

void write_wav(const Waveform& w, const std::filesystem::path& path, BitDepth depth) {
    const auto bytes = encode_wav(w, depth);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sidonforge
