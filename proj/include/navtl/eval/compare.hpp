#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "navtl/core/error.hpp"
#include "navtl/eval/msf.hpp"
#include "navtl/nn/accounting.hpp"
#include "navtl/rl/return_log.hpp"

namespace navtl::eval {

struct ComparisonRow {
    std::string train_type;
    double msf = 0.0;
    double ratio_vs_e2e = 0.0;
    std::uint64_t trainable_weights = 0;
    std::uint64_t trainable_flops = 0;
    std::vector<double> distances;
};

struct ComparisonTable {
    std::string env_name;
    std::vector<ComparisonRow> rows;

    const ComparisonRow* find(const std::string& train_type) const {
        for (const auto& r : rows)
            if (r.train_type == train_type) return &r;
        return nullptr;
    }

    /// One line per (train type, spawn).
    std::string to_csv() const {
        std::string out = "train_type,spawn_id,distance_m,msf_m,ratio_vs_e2e,trainable_weights,trainable_flops\n";
        for (const auto& r : rows)
            for (std::size_t k = 0; k < r.distances.size(); ++k)
                out += r.train_type + "," + std::to_string(k) + "," + rl::format_number(r.distances[k]) + "," +
                       rl::format_number(r.msf) + "," + rl::format_number(r.ratio_vs_e2e) + "," +
                       std::to_string(r.trainable_weights) + "," + std::to_string(r.trainable_flops) + "\n";
        return out;
    }
};

inline void check_same_settings(const EvalReport& a, const EvalReport& b) {
    if (a.env_name != b.env_name) throw ConfigError("reports come from different environments: " + a.env_name +
                                                    " vs " + b.env_name);
    if (a.seed != b.seed || a.cap_m != b.cap_m) throw ConfigError("reports use different spawn seeds or caps");
    if (a.spawns != b.spawns) throw ConfigError("reports were flown from different spawn poses");
}

/// Rows in the given order; the e2e report is required and sets the ratio baseline.
/// A frozen meta-initialized report, when given, is appended as row "meta" with no trainable cost.
inline ComparisonTable compare_train_types(const std::vector<std::pair<nn::TrainType, EvalReport>>& reports,
                                           const nn::NetworkSpec& spec,
                                           const std::optional<EvalReport>& meta = std::nullopt) {
    if (reports.empty()) throw ConfigError("no reports to compare");
    const EvalReport* e2e = nullptr;
    for (const auto& [tt, rep] : reports) {
        check_same_settings(reports.front().second, rep);
        if (tt.is_e2e()) e2e = &rep;
    }
    if (meta) check_same_settings(reports.front().second, *meta);
    if (!e2e) throw ConfigError("comparison needs an e2e report");
    auto ratio = [&](double msf) { return e2e->msf > 0.0 ? msf / e2e->msf : std::nan(""); };

    ComparisonTable t;
    t.env_name = e2e->env_name;
    for (const auto& [tt, rep] : reports)
        t.rows.push_back({tt.name(), rep.msf, ratio(rep.msf), nn::count_trainable_weights(spec, tt),
                          nn::count_flops(spec, tt).trainable_flops, rep.distances});
    if (meta) t.rows.push_back({"meta", meta->msf, ratio(meta->msf), 0, 0, meta->distances});
    return t;
}

}  // namespace navtl::eval
