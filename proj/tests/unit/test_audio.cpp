// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"
#include "sidonforge/rir.hpp"
#include "sidonforge/rng.hpp"

namespace sf = sidonforge;

namespace {

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

// Hand-assembled canonical RIFF/WAVE file.
std::vector<unsigned char> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                     std::uint16_t bits, const std::vector<unsigned char>& data,
                                     std::uint32_t declared_data_size) {
    std::vector<unsigned char> b{'R', 'I', 'F', 'F'};
    put_u32(b, 36 + static_cast<std::uint32_t>(data.size()));
    for (char c : std::string("WAVEfmt ")) b.push_back(static_cast<unsigned char>(c));
    put_u32(b, 16);
    put_u16(b, format);
    put_u16(b, channels);
    put_u32(b, rate);
    put_u32(b, rate * channels * bits / 8);
    put_u16(b, static_cast<std::uint16_t>(channels * bits / 8));
    put_u16(b, bits);
    for (char c : std::string("data")) b.push_back(static_cast<unsigned char>(c));
    put_u32(b, declared_data_size);
    b.insert(b.end(), data.begin(), data.end());
    return b;
}

std::vector<unsigned char> pcm16(std::initializer_list<std::int16_t> v) {
    std::vector<unsigned char> out;
    for (std::int16_t s : v) put_u16(out, static_cast<std::uint16_t>(s));
    return out;
}

std::vector<unsigned char> f32(std::initializer_list<float> v) {
    std::vector<unsigned char> out;
    for (float f : v) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(out, u);
    }
    return out;
}

sf::Waveform random_wave(sf::Rng& rng, std::size_t n, int rate) {
    sf::Waveform w{std::vector<double>(n), rate};
    for (double& s : w.samples) s = rng.uniform(-1.0, 1.0);
    return w;
}

}  // namespace

TEST(WavRead, Pcm16SampleScalesToHalf) {
    const auto bytes = wav_bytes(1, 1, 48000, 16, pcm16({16384}), 2);
    const sf::Waveform w = sf::decode_wav(bytes);
    ASSERT_EQ(w.samples.size(), 1u);
    EXPECT_EQ(w.samples[0], 0.5);
    EXPECT_EQ(w.sample_rate_hz, 48000);
}

TEST(WavRead, StereoIsAveragedToMono) {
    const auto bytes = wav_bytes(3, 2, 16000, 32, f32({1.0f, 0.0f}), 8);
    const sf::Waveform w = sf::decode_wav(bytes);
    ASSERT_EQ(w.samples.size(), 1u);
    EXPECT_EQ(w.samples[0], 0.5);
}

TEST(WavRead, TruncatedDataChunkIsMalformed) {
    const auto bytes = wav_bytes(1, 1, 16000, 16, pcm16({1, 2}), 400);
    EXPECT_THROW(sf::decode_wav(bytes), sf::MalformedWav);
}

TEST(WavRead, NonPcmEncodingIsRejected) {
    const auto bytes = wav_bytes(0x55, 1, 16000, 16, pcm16({1, 2}), 4);  // MPEG layer 3 tag
    EXPECT_THROW(sf::decode_wav(bytes), sf::UnsupportedEncoding);
}

TEST(WavRead, GarbageIsMalformed) {
    const std::vector<unsigned char> junk{'n', 'o', 't', ' ', 'a', ' ', 'w', 'a', 'v'};
    EXPECT_THROW(sf::decode_wav(junk), sf::MalformedWav);
}

TEST(WavRead, MissingFileIsIoError) {
    EXPECT_THROW(sf::read_wav("/nonexistent/definitely/missing.wav"), sf::IoError);
}

TEST(WavWrite, Float32RoundTripIsExact) {
    const sf::Waveform w{{0.5}, 48000};
    EXPECT_EQ(sf::decode_wav(sf::encode_wav(w, sf::BitDepth::Float32)).samples, w.samples);
}

TEST(WavWrite, Int16RoundTripWithinOneLsb) {
    const sf::Waveform w{{0.5, 0.123456, -0.987654}, 48000};
    const sf::Waveform r = sf::decode_wav(sf::encode_wav(w, sf::BitDepth::Int16));
    for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], std::ldexp(1.0, -15));
}

TEST(WavWrite, Int24RoundTripWithinOneLsb) {
    sf::Rng rng(5);
    const sf::Waveform w = random_wave(rng, 1000, 24000);
    const sf::Waveform r = sf::decode_wav(sf::encode_wav(w, sf::BitDepth::Int24));
    for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], std::ldexp(1.0, -23));
}

TEST(WavWrite, Int16SaturatesAtMaxCode) {
    const sf::Waveform r = sf::decode_wav(sf::encode_wav(sf::Waveform{{1.5, -1.5}, 16000}, sf::BitDepth::Int16));
    EXPECT_EQ(r.samples[0], 32767.0 / 32768.0);
    EXPECT_EQ(r.samples[1], -1.0);
}

TEST(WavWrite, FileRoundTripAndInfo) {
    fixtures::TempDir dir;
    sf::Rng rng(3);
    const sf::Waveform w = random_wave(rng, 4410, 44100);
    sf::write_wav(w, dir / "x.wav", sf::BitDepth::Float32);
    const sf::WavInfo info = sf::read_wav_info(dir / "x.wav");
    EXPECT_EQ(info.frames, 4410u);
    EXPECT_EQ(info.sample_rate_hz, 44100);
    EXPECT_TRUE(info.is_float);
    const sf::Waveform r = sf::read_wav(dir / "x.wav");
    for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_EQ(r.samples[i], static_cast<float>(w.samples[i]));
}

TEST(WavProperty, Float32RoundTripOnThousandSignals) {
    sf::Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        sf::Waveform w = random_wave(rng, 1 + rng.index(64), 16000);
        for (double& s : w.samples) s = static_cast<float>(s);  // representable values
        ASSERT_EQ(sf::decode_wav(sf::encode_wav(w, sf::BitDepth::Float32)).samples, w.samples) << trial;
    }
}

TEST(Resample, IdentityIsBitExact) {
    sf::Rng rng(1);
    const sf::Waveform w = random_wave(rng, 999, 22050);
    EXPECT_EQ(sf::resample(w, 22050), w);
}

TEST(Resample, UnsupportedTargetRate) {
    const sf::Waveform w{std::vector<double>(100, 0.1), 16000};
    EXPECT_THROW(sf::resample(w, 12345), sf::UnsupportedRate);
}

TEST(Resample, OutputLengthIsRounded) {
    const sf::Waveform w{std::vector<double>(1001, 0.0), 48000};
    EXPECT_EQ(sf::resample(w, 16000).samples.size(), 334u);      // 333.67
    EXPECT_EQ(sf::resample(w, 22050).samples.size(), 460u);      // 459.86
    EXPECT_EQ(sf::resample(w, 44100).sample_rate_hz, 44100);
}

TEST(Resample, InBandToneKeepsAmplitude) {
    const sf::Waveform w{oracles::sine(1000.0, 1.0, 48000, 48000), 48000};
    const sf::Waveform r = sf::resample(w, 16000);
    const double amp = oracles::tone_amplitude(r, 1000.0, 2000, r.samples.size() - 2000);
    EXPECT_NEAR(20.0 * std::log10(amp), 0.0, 0.1);
}

TEST(Resample, OutOfBandToneIsRejected) {
    const sf::Waveform w{oracles::sine(10000.0, 1.0, 48000, 48000), 48000};
    const sf::Waveform r = sf::resample(w, 16000);
    // 10 kHz folds to 6 kHz at 16 kHz; whatever leaks shows up as output energy.
    const double level = oracles::naive_rms(std::vector<double>(r.samples.begin() + 2000, r.samples.end() - 2000));
    EXPECT_LE(20.0 * std::log10(level * std::sqrt(2.0)), -60.0);
}

TEST(ResampleProperty, CascadePreservesPassband) {
    for (int mid : {8000, 16000, 22050, 24000, 44100}) {
        const std::vector<double> freqs{300.0, 1100.0, 0.4 * mid};
        sf::Waveform w{std::vector<double>(48000, 0.0), 48000};
        for (double f : freqs) {
            const auto s = oracles::sine(f, 0.2, 48000, w.samples.size(), f);
            for (std::size_t i = 0; i < s.size(); ++i) w.samples[i] += s[i];
        }
        const sf::Waveform back = sf::resample(sf::resample(w, mid), 48000);
        ASSERT_EQ(back.samples.size(), w.samples.size());
        for (double f : freqs) {
            const double a = oracles::tone_amplitude(back, f, 4000, 44000);
            EXPECT_NEAR(20.0 * std::log10(a / 0.2), 0.0, 0.2) << mid << " Hz, tone " << f;
        }
    }
}

TEST(FftConvolve, UnitImpulseKernelIsIdentity) {
    sf::Rng rng(2);
    const sf::Waveform w = random_wave(rng, 777, 16000);
    const sf::Waveform y = sf::fft_convolve(w, sf::Rir{{1.0}, 16000});
    ASSERT_EQ(y.samples.size(), w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(y.samples[i], w.samples[i], 1e-6);
}

TEST(FftConvolve, DeltaResponse) {
    const sf::Waveform y = sf::fft_convolve(sf::Waveform{{1, 0, 0, 0}, 8000}, sf::Rir{{0.5, 0.25}, 8000});
    const std::vector<double> want{0.5, 0.25, 0, 0};
    ASSERT_EQ(y.samples.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y.samples[i], want[i], 1e-12);
}

TEST(FftConvolve, MatchesDirectConvolution) {
    sf::Rng rng(4);
    const sf::Waveform w = random_wave(rng, 1000, 16000);
    const sf::Waveform k = random_wave(rng, 100, 16000);
    const auto want = oracles::direct_convolve(w.samples, k.samples);
    const sf::Waveform y = sf::fft_convolve(w, sf::Rir{k.samples, 16000});
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y.samples[i], want[i], 1e-6);
}

TEST(FftConvolve, RateMismatch) {
    EXPECT_THROW(sf::fft_convolve(sf::Waveform{{1.0}, 16000}, sf::Rir{{1.0}, 48000}), sf::RateMismatch);
}

TEST(FftConvolveProperty, Linearity) {
    sf::Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 100 + rng.index(900);
        const sf::Waveform a = random_wave(rng, n, 16000);
        const sf::Waveform b = random_wave(rng, n, 16000);
        const sf::Rir k{random_wave(rng, 1 + rng.index(300), 16000).samples, 16000};
        sf::Waveform sum = a;
        for (std::size_t i = 0; i < n; ++i) sum.samples[i] += b.samples[i];
        const auto ya = sf::fft_convolve(a, k), yb = sf::fft_convolve(b, k), ys = sf::fft_convolve(sum, k);
        for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(ys.samples[i], ya.samples[i] + yb.samples[i], 1e-5);
    }
}

TEST(Rms, Examples) {
    EXPECT_EQ(sf::rms(sf::Waveform{std::vector<double>(10, 0.0), 16000}), 0.0);
    EXPECT_DOUBLE_EQ(sf::rms(sf::Waveform{std::vector<double>(10, 0.5), 16000}), 0.5);
    const sf::Waveform s{oracles::sine(100.0, 1.0, 16000, 16000), 16000};  // 100 whole periods
    EXPECT_NEAR(sf::rms(s), 0.7071, 1e-4);
}

TEST(RmsProperty, Homogeneity) {
    sf::Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        sf::Waveform w = random_wave(rng, 1 + rng.index(500), 16000);
        const double c = rng.uniform(-10.0, 10.0);
        const double base = sf::rms(w);
        for (double& s : w.samples) s *= c;
        EXPECT_NEAR(sf::rms(w), std::abs(c) * base, 1e-9 * std::abs(c) * base);
    }
}

TEST(WaveformType, DurationAndValidity) {
    const sf::Waveform w{std::vector<double>(24000, 0.0), 48000};
    EXPECT_DOUBLE_EQ(w.duration_seconds(), 0.5);
    EXPECT_THROW(sf::require_valid(sf::Waveform{{}, 16000}, "test"), sf::InvalidArgument);
    EXPECT_THROW(sf::require_valid(sf::Waveform{{1.0}, 0}, "test"), sf::InvalidArgument);
}
