#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace pld {

// k items drawn from the user's interacted items V_u, with replacement.
struct CandidatePool {
    int user = 0;
    std::vector<int> items;

    int k() const { return static_cast<int>(items.size()); }
};

struct ResampleConfig {
    int k = 5;
    double tau = 0.1;

    void validate() const {
        if (k < 1) throw std::invalid_argument("pool size k must be >= 1");
        if (!(tau > 0.0)) throw std::invalid_argument("temperature tau must be > 0");
    }
};

template <typename Rng>
CandidatePool build_candidate_pool(int user, std::span<const int> per_user_items, int k,
                                   Rng& rng) {
    if (per_user_items.empty()) {
        throw std::invalid_argument("cannot build candidate pool: user has no interactions");
    }
    CandidatePool pool;
    pool.user = user;
    pool.items.reserve(static_cast<size_t>(k));
    std::uniform_int_distribution<size_t> pick(0, per_user_items.size() - 1);
    for (int i = 0; i < k; ++i) {
        pool.items.push_back(per_user_items[pick(rng)]);
    }
    return pool;
}

// P_v = exp(-l_v / tau) / sum_j exp(-l_j / tau), max-subtraction stabilized.
inline std::vector<double> resample_probabilities(std::span<const double> losses, double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("temperature tau must be > 0");
    }
    std::vector<double> probs(losses.size());
    double best = *std::min_element(losses.begin(), losses.end()); // max of -l/tau
    double total = 0.0;
    for (size_t i = 0; i < losses.size(); ++i) {
        probs[i] = std::exp(-(losses[i] - best) / tau);
        total += probs[i];
    }
    for (auto& p : probs) p /= total;
    return probs;
}

template <typename Rng>
int categorical_draw(std::span<const double> probs, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = unit(rng);
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1; // guard against rounding
}

// Draws one pool item from the categorical distribution over negated,
// temperature-scaled losses.
template <typename Rng>
int resample(const CandidatePool& pool, std::span<const double> losses, double tau, Rng& rng) {
    if (losses.size() != pool.items.size()) {
        throw std::invalid_argument("losses must align with pool items");
    }
    auto probs = resample_probabilities(losses, tau);
    return pool.items[static_cast<size_t>(categorical_draw(probs, rng))];
}

// Uniform draw over the items the user has not interacted with.
// per_user_items must be sorted.
template <typename Rng>
int sample_negative(int /*user*/, std::span<const int> per_user_items, int num_items, Rng& rng) {
    if (static_cast<int>(per_user_items.size()) >= num_items) {
        throw std::runtime_error("user has interacted with every item; no negative exists");
    }
    std::uniform_int_distribution<int> pick(0, num_items - 1);
    for (;;) {
        int v = pick(rng);
        if (!std::binary_search(per_user_items.begin(), per_user_items.end(), v)) {
            return v;
        }
    }
}

} // namespace pld
