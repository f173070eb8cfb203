// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "sidonforge/pipeline.hpp"

namespace sidonforge {

namespace {

constexpr std::size_t kMaxCategories = 12;

nlohmann::json histogram(const std::vector<double>& values, int bins) {
    nlohmann::json h;
    if (values.empty()) return h;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    h["count"] = values.size();
    h["min"] = *mn;
    h["max"] = *mx;

    const bool integral = std::all_of(values.begin(), values.end(), [](double v) { return v == std::floor(v); });
    const std::set<double> distinct(values.begin(), values.end());
    if (integral && distinct.size() <= kMaxCategories) {
        std::map<double, std::size_t> counts;
        for (double v : values) ++counts[v];
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& [v, c] : counts) cats.push_back({{"value", v}, {"count", c}});
        h["categories"] = std::move(cats);
        return h;
    }

    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double width = (*mx - *mn) / bins;
    for (double v : values) {
        auto b = width > 0.0 ? static_cast<std::size_t>((v - *mn) / width) : 0;
        counts[std::min(b, counts.size() - 1)] += 1;
    }
    nlohmann::json edges = nlohmann::json::array();
    for (int i = 0; i <= bins; ++i) edges.push_back(*mn + width * i);
    h["edges"] = std::move(edges);
    h["counts"] = counts;
    return h;
}

}  // namespace

nlohmann::json summarize_manifest(const std::vector<ManifestEntry>& entries, int bins) {
    bins = std::max(bins, 1);
    std::map<std::string, std::size_t> applied;
    std::map<std::string, std::map<std::string, std::vector<double>>> params;
    for (const ManifestEntry& e : entries) {
        if (!e.record.contains("ops")) continue;
        for (const auto& op : e.record["ops"]) {
            const std::string name = op.value("op", "");
            if (!op.value("applied", false)) continue;
            ++applied[name];
            for (const auto& [key, value] : op.items()) {
                if (value.is_number() && key != "selection_seed" && key != "loss_seed") {
                    params[name][key].push_back(value.get<double>());
                }
            }
            if (op.contains("segments_ms")) {
                double lost_ms = 0.0;
                for (const auto& seg : op["segments_ms"]) {
                    params[name]["segment_ms"].push_back(seg[1].get<double>());
                    lost_ms += seg[1].get<double>();
                }
                if (e.duration_s > 0.0) params[name]["zeroed_fraction"].push_back(lost_ms / 1000.0 / e.duration_s);
            }
        }
    }

    nlohmann::json ops = nlohmann::json::object();
    for (Op op : kPipelineOrder) {
        const std::string name(op_name(op));
        const std::size_t n = applied[name];
        nlohmann::json p = nlohmann::json::object();
        for (const auto& [key, values] : params[name]) p[key] = histogram(values, bins);
        ops[name] = {{"applied", n},
                     {"rate", entries.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(entries.size())},
                     {"params", std::move(p)}};
    }
    return {{"entries", entries.size()}, {"ops", std::move(ops)}};
}

}  // namespace sidonforge
