#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pld/interactions.hpp"
#include "pld/loss.hpp"
#include "pld/model.hpp"
#include "pld/sampler.hpp"

namespace pld {

struct LossEntry {
    int user = 0;
    int item = 0;
    double loss = 0.0;
    Label label = Label::Normal;
};

using LossRecord = std::vector<LossEntry>;

struct Quartiles {
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;
};

// Linear-interpolation quartiles: index h = (n - 1) p on the sorted values,
// interpolating between the floor/ceil neighbors.
inline Quartiles quartiles(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("quartiles of an empty vector");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    auto at = [&](double p) {
        const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
        const auto lo = static_cast<size_t>(std::floor(h));
        const auto hi = static_cast<size_t>(std::ceil(h));
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    return {at(0.25), at(0.5), at(0.75)};
}

// Loss interval where the two label groups are indistinguishable:
// [q1(noisy), q3(normal)], empty when the noisy lower quartile clears the
// normal upper quartile. Membership is inclusive at both ends.
struct OverlapRegion {
    double low = 0.0;
    double high = 0.0;
    bool empty = true;

    bool contains(double x) const { return !empty && x >= low && x <= high; }
};

inline OverlapRegion overlap_region(std::span<const double> normal_losses,
                                    std::span<const double> noisy_losses) {
    OverlapRegion region;
    if (normal_losses.empty() || noisy_losses.empty()) {
        return region;
    }
    region.low = quartiles(noisy_losses).q1;
    region.high = quartiles(normal_losses).q3;
    region.empty = region.low > region.high;
    return region;
}

enum class OverlapScope { Global, Personal };

struct OverlapStats {
    OverlapScope scope = OverlapScope::Global;
    std::int64_t normal_total = 0;
    std::int64_t noise_total = 0;
    std::int64_t normal_in_overlap = 0;
    std::int64_t noise_in_overlap = 0;
    double normal_ratio = 0.0;
    double noise_ratio = 0.0;
    OverlapRegion global_region; // filled for the global scope
};

// Global scope: one region over all entries. Personal scope: a region per
// user; users lacking either label contribute zero.
inline OverlapStats overlap_stats(const LossRecord& record, OverlapScope scope) {
    OverlapStats stats;
    stats.scope = scope;
    for (const auto& e : record) {
        (e.label == Label::Normal ? stats.normal_total : stats.noise_total) += 1;
    }
    auto count_in = [&](std::span<const LossEntry* const> entries, const OverlapRegion& region) {
        for (const auto* e : entries) {
            if (region.contains(e->loss)) {
                (e->label == Label::Normal ? stats.normal_in_overlap
                                           : stats.noise_in_overlap) += 1;
            }
        }
    };
    if (scope == OverlapScope::Global) {
        std::vector<double> normal, noisy;
        std::vector<const LossEntry*> all;
        for (const auto& e : record) {
            (e.label == Label::Normal ? normal : noisy).push_back(e.loss);
            all.push_back(&e);
        }
        stats.global_region = overlap_region(normal, noisy);
        count_in(all, stats.global_region);
    } else {
        int max_user = -1;
        for (const auto& e : record) max_user = std::max(max_user, e.user);
        std::vector<std::vector<const LossEntry*>> by_user(static_cast<size_t>(max_user + 1));
        for (const auto& e : record) by_user[static_cast<size_t>(e.user)].push_back(&e);
        for (const auto& entries : by_user) {
            if (entries.empty()) continue;
            std::vector<double> normal, noisy;
            for (const auto* e : entries) {
                (e->label == Label::Normal ? normal : noisy).push_back(e->loss);
            }
            if (normal.empty() || noisy.empty()) continue;
            count_in(entries, overlap_region(normal, noisy));
        }
    }
    if (stats.normal_total > 0) {
        stats.normal_ratio =
            static_cast<double>(stats.normal_in_overlap) / static_cast<double>(stats.normal_total);
    }
    if (stats.noise_total > 0) {
        stats.noise_ratio =
            static_cast<double>(stats.noise_in_overlap) / static_cast<double>(stats.noise_total);
    }
    return stats;
}

struct UserGap {
    int user = 0;
    double gap = 0.0; // q1(normal losses) - q3(noisy losses); negative is expected
};

struct UserGapReport {
    std::vector<UserGap> gaps;
    std::vector<int> skipped_users; // users missing one of the two labels
};

inline UserGapReport quartile_gap_per_user(const LossRecord& record) {
    UserGapReport report;
    int max_user = -1;
    for (const auto& e : record) max_user = std::max(max_user, e.user);
    std::vector<std::vector<double>> normal(static_cast<size_t>(max_user + 1));
    std::vector<std::vector<double>> noisy(static_cast<size_t>(max_user + 1));
    std::vector<char> seen(static_cast<size_t>(max_user + 1), 0);
    for (const auto& e : record) {
        seen[static_cast<size_t>(e.user)] = 1;
        (e.label == Label::Normal ? normal : noisy)[static_cast<size_t>(e.user)].push_back(
            e.loss);
    }
    for (int u = 0; u <= max_user; ++u) {
        if (!seen[static_cast<size_t>(u)]) continue;
        const auto& a = normal[static_cast<size_t>(u)];
        const auto& b = noisy[static_cast<size_t>(u)];
        if (a.empty() || b.empty()) {
            report.skipped_users.push_back(u);
            continue;
        }
        report.gaps.push_back({u, quartiles(a).q1 - quartiles(b).q3});
    }
    return report;
}

// Computes l_{u,v} for every labeled training interaction. BPR pairs each
// interaction with one fresh uniform negative.
inline LossRecord collect_losses(const ModelState& state, const NoisyTrainSet& data,
                                 LossKind kind, std::int64_t seed) {
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0xC011);
    LossRecord record;
    record.reserve(data.size());
    for (size_t idx = 0; idx < data.all.size(); ++idx) {
        const auto& [u, v] = data.all.interactions[idx];
        TrainingTriple triple{u, v, 0};
        if (kind == LossKind::BPR) {
            triple.neg = sample_negative(u, data.all.items_of(u), data.all.num_items, rng);
        }
        record.push_back({u, v, interaction_loss(state, triple, kind), data.labels[idx]});
    }
    return record;
}

// ---- CSV formats ----

inline std::string format_loss_record_csv(const LossRecord& record) {
    std::string s = "user,item,loss,label\n";
    char buf[128];
    for (const auto& e : record) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%s\n", e.user, e.item, e.loss,
                      label_name(e.label));
        s += buf;
    }
    return s;
}

inline std::string overlap_stats_csv_header() {
    return "scope,normal_count,normal_ratio,noise_count,noise_ratio,region_low,region_high";
}

inline std::string format_overlap_stats_csv(const std::vector<OverlapStats>& rows) {
    std::string s = overlap_stats_csv_header() + "\n";
    char buf[256];
    for (const auto& r : rows) {
        const bool global = r.scope == OverlapScope::Global;
        std::snprintf(buf, sizeof(buf), "%s,%lld,%.9g,%lld,%.9g,%.9g,%.9g\n",
                      global ? "global" : "personal",
                      static_cast<long long>(r.normal_in_overlap), r.normal_ratio,
                      static_cast<long long>(r.noise_in_overlap), r.noise_ratio,
                      global && !r.global_region.empty ? r.global_region.low : std::nan(""),
                      global && !r.global_region.empty ? r.global_region.high : std::nan(""));
        s += buf;
    }
    return s;
}

inline std::string format_user_gaps_csv(const UserGapReport& report) {
    std::string s = "user,gap\n";
    char buf[96];
    for (const auto& g : report.gaps) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", g.user, g.gap);
        s += buf;
    }
    return s;
}

} // namespace pld
