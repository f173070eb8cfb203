// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <toml++/toml.hpp>

#include "sidonforge/error.hpp"
#include "sidonforge/pipeline.hpp"

namespace sidonforge {
namespace fs = std::filesystem;

namespace {

void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, node] : t) {
        if (!known.contains(std::string(key.str()))) {
            throw FatalConfig("unknown key '" + std::string(key.str()) + "' in " + where);
        }
    }
}

template <typename T>
void read_scalar(const toml::table& t, const char* key, T& out) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node->value<double>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node->value<std::string>()) {
            out = *v;
            return;
        }
    } else {
        if (auto v = node->value<std::int64_t>()) {
            out = static_cast<T>(*v);
            return;
        }
    }
    throw FatalConfig(std::string("config key '") + key + "' has the wrong type");
}

void read_path(const toml::table& t, const char* key, const fs::path& base, fs::path& out) {
    std::string text;
    read_scalar(t, key, text);
    if (text.empty()) return;
    fs::path p(text);
    out = (p.is_relative() && !base.empty()) ? base / p : p;
}

void read_range(const toml::table& t, const char* key, Range& out) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return;
    const toml::array* arr = node->as_array();
    if (arr == nullptr || arr->size() != 2) throw FatalConfig(std::string("config key '") + key + "' must be [lo, hi]");
    auto lo = (*arr)[0].value<double>();
    auto hi = (*arr)[1].value<double>();
    if (!lo || !hi) throw FatalConfig(std::string("config key '") + key + "' must hold two numbers");
    out = {*lo, *hi};
}

void read_int_list(const toml::table& t, const char* key, std::vector<int>& out) {
    const toml::node* node = t.get(key);
    if (node == nullptr) return;
    const toml::array* arr = node->as_array();
    if (arr == nullptr) throw FatalConfig(std::string("config key '") + key + "' must be an array of integers");
    out.clear();
    for (const auto& item : *arr) {
        auto v = item.value<std::int64_t>();
        if (!v) throw FatalConfig(std::string("config key '") + key + "' must be an array of integers");
        out.push_back(static_cast<int>(*v));
    }
}

const toml::table* sub_table(const toml::table& root, const char* key) {
    const toml::node* node = root.get(key);
    if (node == nullptr) return nullptr;
    const toml::table* t = node->as_table();
    if (t == nullptr) throw FatalConfig(std::string("[") + key + "] must be a table");
    return t;
}

std::string quote(const std::string& s) {
    std::ostringstream out;
    out << toml::value<std::string>(s);
    return out.str();
}

std::string num(double v) {
    std::ostringstream out;
    out << toml::value<double>(v);
    return out.str();
}

std::string range(const Range& r) { return "[" + num(r.lo) + ", " + num(r.hi) + "]"; }

std::string int_list(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
}

}  // namespace

int PipelineConfig::effective_workers() const {
    if (workers > 0) return workers;
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

void PipelineConfig::validate() const {
    if (variants_per_utterance < 1) throw FatalConfig("variants_per_utterance must be >= 1");
    if (workers < 0) throw FatalConfig("workers must be >= 0");
    if (clean_root.empty()) throw FatalConfig("clean_root is required");
    if (out_root.empty()) throw FatalConfig("out_root is required");
    const auto a = fs::weakly_canonical(clean_root);
    const auto b = fs::weakly_canonical(out_root);
    if (a == b) throw FatalConfig("out_root must differ from clean_root");
    if (codec.max_concurrent < 1) throw FatalConfig("codec.max_concurrent must be >= 1");
    degradation.validate();
}

PipelineConfig parse_config(std::string_view toml_text, const fs::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        throw FatalConfig(msg.str());
    }
    reject_unknown(root,
                   {"clean_root", "out_root", "noise_index", "variants_per_utterance", "global_seed", "workers",
                    "output_bit_depth", "degradation", "codec", "corpus"},
                   "top level");

    PipelineConfig cfg;
    read_path(root, "clean_root", base_dir, cfg.clean_root);
    read_path(root, "out_root", base_dir, cfg.out_root);
    read_path(root, "noise_index", base_dir, cfg.noise_index);
    read_scalar(root, "variants_per_utterance", cfg.variants_per_utterance);
    std::int64_t seed = 0;
    read_scalar(root, "global_seed", seed);
    cfg.global_seed = static_cast<std::uint64_t>(seed);
    read_scalar(root, "workers", cfg.workers);
    if (const toml::node* depth = root.get("output_bit_depth")) {
        std::optional<std::string> text = depth->value<std::string>();
        if (auto i = depth->value<std::int64_t>(); !text && i) text = std::to_string(*i);
        try {
            if (!text) throw InvalidArgument("not a string or integer");
            cfg.output_bit_depth = parse_bit_depth(*text);
        } catch (const InvalidArgument&) {
            throw FatalConfig("output_bit_depth must be 16, 24 or \"32f\"");
        }
    }

    if (const toml::table* d = sub_table(root, "degradation")) {
        reject_unknown(*d,
                       {"per_op_probability", "rt60_range_s", "room_dim_range_m", "snr_range_db", "bandlimit_rates_hz",
                        "clip_lo_quantile_range", "clip_hi_quantile_range", "mp3_bitrate_range_kbps",
                        "packet_loss_total_fraction", "packet_segment_range_ms", "placement_margin_m",
                        "min_source_mic_distance_m", "speed_of_sound_mps", "max_order_cap", "sabine_constant",
                        "max_room_draws"},
                       "[degradation]");
        DegradationConfig& g = cfg.degradation;
        read_scalar(*d, "per_op_probability", g.per_op_probability);
        read_range(*d, "rt60_range_s", g.rt60_range_s);
        read_range(*d, "room_dim_range_m", g.room_dim_range_m);
        read_range(*d, "snr_range_db", g.snr_range_db);
        read_int_list(*d, "bandlimit_rates_hz", g.bandlimit_rates_hz);
        read_range(*d, "clip_lo_quantile_range", g.clip_lo_quantile_range);
        read_range(*d, "clip_hi_quantile_range", g.clip_hi_quantile_range);
        read_range(*d, "mp3_bitrate_range_kbps", g.mp3_bitrate_range_kbps);
        read_scalar(*d, "packet_loss_total_fraction", g.packet_loss_total_fraction);
        read_range(*d, "packet_segment_range_ms", g.packet_segment_range_ms);
        read_scalar(*d, "placement_margin_m", g.placement_margin_m);
        read_scalar(*d, "min_source_mic_distance_m", g.min_source_mic_distance_m);
        read_scalar(*d, "speed_of_sound_mps", g.speed_of_sound_mps);
        read_scalar(*d, "max_order_cap", g.max_order_cap);
        read_scalar(*d, "max_room_draws", g.max_room_draws);
        std::string sabine;
        read_scalar(*d, "sabine_constant", sabine);
        if (sabine == "derived") {
            g.sabine = SabineConstant::Derived;
        } else if (sabine.empty() || sabine == "0.161") {
            g.sabine = SabineConstant::Fixed0161;
        } else {
            throw FatalConfig("sabine_constant must be \"0.161\" or \"derived\"");
        }
    }

    if (const toml::table* c = sub_table(root, "codec")) {
        reject_unknown(*c,
                       {"kind", "encode_cmd", "decode_cmd", "encoded_extension", "bitrate_mode", "temp_root",
                        "max_concurrent", "supported_rates"},
                       "[codec]");
        std::string kind = "identity";
        read_scalar(*c, "kind", kind);
        if (kind == "identity") {
            cfg.codec.kind = CodecKind::Identity;
        } else if (kind == "external") {
            cfg.codec.kind = CodecKind::External;
        } else {
            throw FatalConfig("codec.kind must be \"identity\" or \"external\"");
        }
        read_scalar(*c, "encode_cmd", cfg.codec.encode_cmd);
        read_scalar(*c, "decode_cmd", cfg.codec.decode_cmd);
        read_scalar(*c, "encoded_extension", cfg.codec.encoded_extension);
        read_scalar(*c, "bitrate_mode", cfg.codec.bitrate_mode);
        read_path(*c, "temp_root", base_dir, cfg.codec.temp_root);
        read_scalar(*c, "max_concurrent", cfg.codec.max_concurrent);
        read_int_list(*c, "supported_rates", cfg.codec.supported_rates);
    }

    if (const toml::node* corpus = root.get("corpus")) {
        const toml::array* arr = corpus->as_array();
        if (arr == nullptr) throw FatalConfig("[[corpus]] must be an array of tables");
        for (const auto& item : *arr) {
            const toml::table* t = item.as_table();
            if (t == nullptr) throw FatalConfig("[[corpus]] entries must be tables");
            reject_unknown(*t, {"prefix", "name", "language"}, "[[corpus]]");
            CorpusInfo info;
            read_scalar(*t, "prefix", info.prefix);
            read_scalar(*t, "name", info.name);
            read_scalar(*t, "language", info.language);
            cfg.corpora.push_back(std::move(info));
        }
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FatalConfig("cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.parent_path());
}

std::string to_toml(const PipelineConfig& cfg) {
    const DegradationConfig& g = cfg.degradation;
    std::ostringstream out;
    out << "clean_root = " << quote(cfg.clean_root.generic_string()) << "\n"
        << "out_root = " << quote(cfg.out_root.generic_string()) << "\n"
        << "noise_index = " << quote(cfg.noise_index.generic_string()) << "\n"
        << "variants_per_utterance = " << cfg.variants_per_utterance << "\n"
        << "global_seed = " << static_cast<std::int64_t>(cfg.global_seed) << "\n"
        << "workers = " << cfg.workers << "\n"
        << "output_bit_depth = " << quote(to_string(cfg.output_bit_depth)) << "\n\n"
        << "[degradation]\n"
        << "per_op_probability = " << num(g.per_op_probability) << "\n"
        << "rt60_range_s = " << range(g.rt60_range_s) << "\n"
        << "room_dim_range_m = " << range(g.room_dim_range_m) << "\n"
        << "snr_range_db = " << range(g.snr_range_db) << "\n"
        << "bandlimit_rates_hz = " << int_list(g.bandlimit_rates_hz) << "\n"
        << "clip_lo_quantile_range = " << range(g.clip_lo_quantile_range) << "\n"
        << "clip_hi_quantile_range = " << range(g.clip_hi_quantile_range) << "\n"
        << "mp3_bitrate_range_kbps = " << range(g.mp3_bitrate_range_kbps) << "\n"
        << "packet_loss_total_fraction = " << num(g.packet_loss_total_fraction) << "\n"
        << "packet_segment_range_ms = " << range(g.packet_segment_range_ms) << "\n"
        << "placement_margin_m = " << num(g.placement_margin_m) << "\n"
        << "min_source_mic_distance_m = " << num(g.min_source_mic_distance_m) << "\n"
        << "speed_of_sound_mps = " << num(g.speed_of_sound_mps) << "\n"
        << "max_order_cap = " << g.max_order_cap << "\n"
        << "max_room_draws = " << g.max_room_draws << "\n"
        << "sabine_constant = " << quote(g.sabine == SabineConstant::Derived ? "derived" : "0.161") << "\n\n"
        << "[codec]\n"
        << "kind = " << quote(cfg.codec.kind == CodecKind::External ? "external" : "identity") << "\n"
        << "encode_cmd = " << quote(cfg.codec.encode_cmd) << "\n"
        << "decode_cmd = " << quote(cfg.codec.decode_cmd) << "\n"
        << "encoded_extension = " << quote(cfg.codec.encoded_extension) << "\n"
        << "bitrate_mode = " << quote(cfg.codec.bitrate_mode) << "\n"
        << "temp_root = " << quote(cfg.codec.temp_root.generic_string()) << "\n"
        << "max_concurrent = " << cfg.codec.max_concurrent << "\n"
        << "supported_rates = " << int_list(cfg.codec.supported_rates) << "\n";
    for (const CorpusInfo& c : cfg.corpora) {
        out << "\n[[corpus]]\n"
            << "prefix = " << quote(c.prefix) << "\n"
            << "name = " << quote(c.name) << "\n"
            << "language = " << quote(c.language) << "\n";
    }
    return out.str();
}

}  // namespace sidonforge
