// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

// Stand-in encoder/decoder for codec tests.
//
//   fake_codec copy IN OUT [delay_samples] [gain]   WAV in, WAV out, delayed
//   fake_codec fail IN OUT                          exits 3 with a message
//   fake_codec empty IN OUT                         writes a zero-byte OUT
//   fake_codec noise IN OUT                         unrelated white noise

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "sidonforge/audio.hpp"
#include "sidonforge/rng.hpp"

int main(int argc, char** argv) {
    if (argc < 4) {
        std::fprintf(stderr, "usage: fake_codec copy|fail|empty|noise IN OUT [delay] [gain]\n");
        return 64;
    }
    const std::string mode = argv[1];
    if (mode == "fail") {
        std::fprintf(stderr, "fake_codec: simulated encoder crash\n");
        return 3;
    }
    if (mode == "empty") {
        std::ofstream(argv[3], std::ios::binary | std::ios::trunc);
        return 0;
    }
    try {
        sidonforge::Waveform w = sidonforge::read_wav(argv[2]);
        if (mode == "noise") {
            sidonforge::Rng rng(99);
            for (double& s : w.samples) s = rng.uniform(-0.5, 0.5);
        } else {
            const long delay = argc > 4 ? std::strtol(argv[4], nullptr, 10) : 0;
            const double gain = argc > 5 ? std::strtod(argv[5], nullptr) : 1.0;
            for (double& s : w.samples) s *= gain;
            w.samples.insert(w.samples.begin(), static_cast<std::size_t>(delay), 0.0);
        }
        sidonforge::write_wav(w, argv[3], sidonforge::BitDepth::Int16);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fake_codec: %s\n", e.what());
        return 2;
    }
    return 0;
}
