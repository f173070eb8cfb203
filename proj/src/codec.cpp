// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "sidonforge/codec.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cerrno>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "sidonforge/audio.hpp"
#include "sidonforge/error.hpp"

extern char** environ;

namespace sidonforge {
namespace fs = std::filesystem;

namespace {

constexpr double kAlignmentWindowSeconds = 0.5;
constexpr double kMinAlignmentCorrelation = 0.5;

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += "'";
    return out;
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    const std::string token = "{" + key + "}";
    for (std::size_t pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size())) {
        text.replace(pos, token.size(), value);
    }
    return text;
}

std::string first_word(const std::string& command) {
    std::istringstream in(command);
    std::string word;
    in >> word;
    // Strip simple quoting around the executable.
    if (word.size() >= 2 && (word.front() == '\'' || word.front() == '"') && word.back() == word.front()) {
        word = word.substr(1, word.size() - 2);
    }
    return word;
}

std::string slurp(const fs::path& path, std::size_t limit = 4096) {
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.size() > limit) text = text.substr(text.size() - limit);
    return text;
}

/// Runs `command` under /bin/sh with stdin from /dev/null and stdout/stderr
/// captured into files. Returns the exit status (or 128 + signal).
int run_shell(const std::string& command, const fs::path& stdout_file, const fs::path& stderr_file) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, stdout_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, stderr_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);

    std::string sh = "sh";
    std::string flag = "-c";
    std::string cmd = command;
    char* argv[] = {sh.data(), flag.data(), cmd.data(), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw BackendUnavailable("cannot spawn /bin/sh: " + std::string(std::strerror(rc)));

    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw BackendFailure("waitpid failed: " + std::string(std::strerror(errno)));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

class TempDir {
public:
    explicit TempDir(const fs::path& root) {
        static std::atomic<std::uint64_t> counter{0};
        const fs::path base = root.empty() ? fs::temp_directory_path() : root;
        fs::create_directories(base);
        std::random_device rd;
        for (int attempt = 0; attempt < 100; ++attempt) {
            const fs::path candidate =
                base / ("sidonforge-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)) + "-" +
                        std::to_string(rd()));
            if (fs::create_directory(candidate)) {
                path_ = candidate;
                return;
            }
        }
        throw BackendFailure("cannot create a temporary directory under " + base.string());
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

struct CodecBackend::Shared {
    explicit Shared(int limit) : available(std::max(1, limit)) {}

    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            const std::lock_guard lock(mutex);
            ++available;
        }
        cv.notify_one();
    }

    std::mutex mutex;
    std::condition_variable cv;
    int available;
};

bool command_resolvable(const std::string& command_template) {
    const std::string exe = first_word(command_template);
    if (exe.empty()) return false;
    if (exe.find('/') != std::string::npos) return ::access(exe.c_str(), X_OK) == 0;
    const char* path_env = std::getenv("PATH");
    if (path_env == nullptr) return false;
    std::stringstream dirs(path_env);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) dir = ".";
        const fs::path candidate = fs::path(dir) / exe;
        if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) return true;
    }
    return false;
}

AlignmentEstimate estimate_alignment(const Waveform& reference, const Waveform& decoded) {
    const auto window = static_cast<std::size_t>(
        std::max<double>(1.0, std::min<double>(std::round(kAlignmentWindowSeconds * reference.sample_rate_hz),
                                               static_cast<double>(reference.size()))));
    const std::span<const double> x(reference.samples.data(), window);
    double ex = 0.0;
    for (double v : x) ex += v * v;
    if (!(ex > 0.0) || decoded.empty()) return {};

    // Lags in [-(window-1), max_lag]; out[n + lag] pairs with x[n].
    const std::size_t max_lag = window;
    const std::size_t seg_len = std::min(decoded.size(), window + max_lag);
    const std::span<const double> seg(decoded.samples.data(), seg_len);
    std::vector<double> reversed(x.rbegin(), x.rend());
    const std::vector<double> corr = fft_convolve_full(reversed, seg);

    std::vector<double> prefix(seg_len + 1, 0.0);
    for (std::size_t i = 0; i < seg_len; ++i) prefix[i + 1] = prefix[i] + seg[i] * seg[i];
    const auto w = static_cast<std::int64_t>(window);
    const auto n_seg = static_cast<std::int64_t>(seg_len);

    auto value_at = [&](std::int64_t lag) {
        return corr[static_cast<std::size_t>(lag + w - 1)];
    };
    auto normalized = [&](std::int64_t lag) {
        const std::int64_t lo = std::clamp<std::int64_t>(lag, 0, n_seg);
        const std::int64_t hi = std::clamp<std::int64_t>(lag + w, 0, n_seg);
        const double ey = prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
        if (!(ey > 0.0)) return 0.0;
        return value_at(lag) / std::sqrt(ex * ey);
    };

    // Scan outward from zero so ties resolve to the smallest |lag|.
    std::int64_t best = 0;
    double best_value = value_at(0);
    const std::int64_t lag_hi = std::min<std::int64_t>(static_cast<std::int64_t>(max_lag), n_seg - 1);
    for (std::int64_t k = 1; k <= std::max(w - 1, lag_hi); ++k) {
        for (std::int64_t lag : {k, -k}) {
            if (lag > lag_hi || lag < -(w - 1)) continue;
            const double v = value_at(lag);
            if (v > best_value * (1.0 + 1e-9) + 1e-300) {
                best_value = v;
                best = lag;
            }
        }
    }
    return {best, normalized(best)};
}

CodecBackend::CodecBackend(CodecConfig config)
    : config_(std::move(config)), shared_(std::make_shared<Shared>(config_.max_concurrent)) {}

CodecBackend CodecBackend::identity() {
    CodecConfig cfg;
    cfg.kind = CodecKind::Identity;
    return CodecBackend(std::move(cfg));
}

CodecBackend CodecBackend::external(CodecConfig config) {
    config.kind = CodecKind::External;
    if (config.encode_cmd.empty()) {
        if (const char* env = std::getenv("SIDONFORGE_CODEC_ENCODE")) config.encode_cmd = env;
    }
    if (config.decode_cmd.empty()) {
        if (const char* env = std::getenv("SIDONFORGE_CODEC_DECODE")) config.decode_cmd = env;
    }
    if (config.encode_cmd.empty() || config.decode_cmd.empty()) {
        throw FatalConfig("external codec backend needs both encode and decode command templates");
    }
    for (const char* key : {"{input}", "{output}"}) {
        if (config.encode_cmd.find(key) == std::string::npos || config.decode_cmd.find(key) == std::string::npos) {
            throw FatalConfig(std::string("codec command templates must contain ") + key);
        }
    }
    if (config.max_concurrent < 1) throw FatalConfig("codec max_concurrent must be >= 1");
    for (const std::string* cmd : {&config.encode_cmd, &config.decode_cmd}) {
        if (!command_resolvable(*cmd)) {
            throw BackendUnavailable("executable '" + first_word(*cmd) + "' not found on PATH");
        }
    }
    return CodecBackend(std::move(config));
}

CodecBackend CodecBackend::from_config(const CodecConfig& config) {
    return config.kind == CodecKind::Identity ? identity() : external(config);
}

bool CodecBackend::accepts_rate(int rate_hz) const noexcept {
    const auto& rates = config_.supported_rates;
    return rates.empty() || std::find(rates.begin(), rates.end(), rate_hz) != rates.end();
}

int CodecBackend::nearest_accepted_rate(int rate_hz) const noexcept {
    if (accepts_rate(rate_hz)) return rate_hz;
    int best = config_.supported_rates.front();
    for (int r : config_.supported_rates) {
        if (std::abs(r - rate_hz) < std::abs(best - rate_hz) || (std::abs(r - rate_hz) == std::abs(best - rate_hz) && r > best)) {
            best = r;
        }
    }
    return best;
}

TranscodeResult CodecBackend::transcode(const Waveform& w, double bitrate_kbps) const {
    require_valid(w, "transcode");
    if (config_.kind == CodecKind::Identity) return {w, 0, 1.0};

    struct Slot {
        explicit Slot(Shared& s) : shared(s) { shared.acquire(); }
        ~Slot() { shared.release(); }
        Shared& shared;
    } slot(*shared_);

    const TempDir dir(config_.temp_root);
    const fs::path input = dir.path() / "input.wav";
    const fs::path encoded = dir.path() / ("encoded." + config_.encoded_extension);
    const fs::path decoded = dir.path() / "decoded.wav";
    write_wav(w, input, BitDepth::Int16);

    const std::string bitrate = std::to_string(static_cast<long long>(std::llround(bitrate_kbps)));
    auto run = [&](std::string cmd, const fs::path& in, const fs::path& out, const char* stage) {
        cmd = substitute(cmd, "input", shell_quote(in.string()));
        cmd = substitute(cmd, "output", shell_quote(out.string()));
        cmd = substitute(cmd, "bitrate_kbps", bitrate);
        cmd = substitute(cmd, "bitrate_mode", config_.bitrate_mode);
        const fs::path log_out = dir.path() / (std::string(stage) + ".stdout");
        const fs::path log_err = dir.path() / (std::string(stage) + ".stderr");
        const int status = run_shell(cmd, log_out, log_err);
        if (status == 127) {
            throw BackendUnavailable(std::string(stage) + " command not found: " + slurp(log_err));
        }
        if (status != 0) {
            throw BackendFailure(std::string(stage) + " exited with status " + std::to_string(status) + ": " +
                                 slurp(log_err));
        }
        std::error_code ec;
        if (!fs::exists(out, ec) || fs::file_size(out, ec) == 0) {
            throw BackendFailure(std::string(stage) + " produced no output");
        }
    };
    run(config_.encode_cmd, input, encoded, "encode");
    run(config_.decode_cmd, encoded, decoded, "decode");

    Waveform out;
    try {
        out = read_wav(decoded);
    } catch (const Error& e) {
        throw BackendFailure(std::string("undecodable decoder output: ") + e.what());
    }
    if (out.sample_rate_hz != w.sample_rate_hz) out = convert_rate(out, w.sample_rate_hz);

    const AlignmentEstimate align = estimate_alignment(w, out);
    if (align.correlation < kMinAlignmentCorrelation) {
        throw AlignmentFailure("peak normalized correlation " + std::to_string(align.correlation) + " < 0.5");
    }
    std::vector<double> aligned(w.size(), 0.0);
    for (std::size_t n = 0; n < aligned.size(); ++n) {
        const std::int64_t src = static_cast<std::int64_t>(n) + align.lag;
        if (src >= 0 && src < static_cast<std::int64_t>(out.size())) aligned[n] = out.samples[static_cast<std::size_t>(src)];
    }
    return {Waveform(std::move(aligned), w.sample_rate_hz), align.lag, align.correlation};
}

}  // namespace sidonforge
