// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sidonforge {

/// Base class of every error raised by the toolkit. `name()` is the stable
/// error identifier surfaced in reports, exit messages and bindings.
class Error : public std::runtime_error {
public:
    Error(std::string_view name, const std::string& what)
        : std::runtime_error(std::string(name) + ": " + what), name_(name) {}

    std::string_view name() const noexcept { return name_; }

private:
    std::string_view name_;
};

#define SIDONFORGE_DEFINE_ERROR(Name)                                       \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name, what) {}      \
    }

// audio-core
SIDONFORGE_DEFINE_ERROR(MalformedWav);
SIDONFORGE_DEFINE_ERROR(UnsupportedEncoding);
SIDONFORGE_DEFINE_ERROR(IoError);
SIDONFORGE_DEFINE_ERROR(UnsupportedRate);
SIDONFORGE_DEFINE_ERROR(RateMismatch);
SIDONFORGE_DEFINE_ERROR(InvalidArgument);

// rir-sim
SIDONFORGE_DEFINE_ERROR(AbsorptionInfeasible);
SIDONFORGE_DEFINE_ERROR(InvalidGeometry);
SIDONFORGE_DEFINE_ERROR(DecayRangeUnavailable);

// degrade-ops / oracle-metrics
SIDONFORGE_DEFINE_ERROR(SilentSignal);
SIDONFORGE_DEFINE_ERROR(SilentResidual);

// noise-pool
SIDONFORGE_DEFINE_ERROR(EmptyPool);
SIDONFORGE_DEFINE_ERROR(NoiseDecodeFatal);

// codec-backend
SIDONFORGE_DEFINE_ERROR(BackendUnavailable);
SIDONFORGE_DEFINE_ERROR(BackendFailure);
SIDONFORGE_DEFINE_ERROR(AlignmentFailure);

// pipeline / cli
SIDONFORGE_DEFINE_ERROR(FatalConfig);

#undef SIDONFORGE_DEFINE_ERROR

}  // namespace sidonforge
