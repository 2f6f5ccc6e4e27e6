#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pld/interactions.hpp"
#include "pld/model.hpp"

namespace pld {

// K highest-scoring items outside `excluded` (sorted), ties broken by lower
// item index. K larger than the candidate count is clamped.
inline std::vector<int> topk(std::span<const double> scores, std::span<const int> excluded,
                             int K) {
    if (K < 1) {
        throw std::invalid_argument("K must be >= 1");
    }
    std::vector<int> candidates;
    candidates.reserve(scores.size());
    for (int v = 0; v < static_cast<int>(scores.size()); ++v) {
        if (!std::binary_search(excluded.begin(), excluded.end(), v)) {
            candidates.push_back(v);
        }
    }
    const auto kk = std::min<size_t>(static_cast<size_t>(K), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(kk),
                      candidates.end(), [&](int a, int b) {
                          const double sa = scores[static_cast<size_t>(a)];
                          const double sb = scores[static_cast<size_t>(b)];
                          if (sa != sb) return sa > sb;
                          return a < b;
                      });
    candidates.resize(kk);
    return candidates;
}

struct MetricReport {
    std::vector<int> k_values;
    std::vector<double> recall; // aligned with k_values
    std::vector<double> ndcg;
    int num_evaluated_users = 0;
};

// Per user, ranks all items outside the user's train set and averages
// Recall@K and NDCG@K (binary gains, 1/log2(rank+1) discount, ideal DCG
// truncated at min(K, |test_u|)). Users with an empty test set, or with no
// training interactions, are skipped.
inline MetricReport evaluate(const ModelState& state, const InteractionSet& train,
                             const InteractionSet& test, const std::vector<int>& k_values) {
    for (int k : k_values) {
        if (k < 1) throw std::invalid_argument("K must be >= 1");
    }
    MetricReport report;
    report.k_values = k_values;
    report.recall.assign(k_values.size(), 0.0);
    report.ndcg.assign(k_values.size(), 0.0);
    const int max_k = k_values.empty() ? 0 : *std::max_element(k_values.begin(), k_values.end());

    for (int u = 0; u < state.num_users; ++u) {
        const auto& test_items = test.items_of(u);
        if (test_items.empty()) continue;
        const auto& train_items = train.items_of(u);
        if (train_items.empty()) continue;

        const auto scores = score_all(state, u);
        const auto ranked = topk(scores, train_items, max_k);
        ++report.num_evaluated_users;

        for (size_t ki = 0; ki < k_values.size(); ++ki) {
            const auto K = static_cast<size_t>(k_values[ki]);
            const auto depth = std::min(K, ranked.size());
            int hits = 0;
            double dcg = 0.0;
            for (size_t r = 0; r < depth; ++r) {
                if (std::binary_search(test_items.begin(), test_items.end(), ranked[r])) {
                    ++hits;
                    dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
                }
            }
            double idcg = 0.0;
            const auto ideal = std::min(K, test_items.size());
            for (size_t r = 0; r < ideal; ++r) {
                idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
            }
            report.recall[ki] += static_cast<double>(hits) / static_cast<double>(test_items.size());
            report.ndcg[ki] += idcg > 0.0 ? dcg / idcg : 0.0;
        }
    }
    if (report.num_evaluated_users > 0) {
        for (size_t ki = 0; ki < k_values.size(); ++ki) {
            report.recall[ki] /= report.num_evaluated_users;
            report.ndcg[ki] /= report.num_evaluated_users;
        }
    }
    return report;
}

inline std::string format_metric_csv(const MetricReport& report) {
    std::string s = "K,recall,ndcg,users\n";
    char buf[128];
    for (size_t i = 0; i < report.k_values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%d\n", report.k_values[i],
                      report.recall[i], report.ndcg[i], report.num_evaluated_users);
        s += buf;
    }
    return s;
}

} // namespace pld
