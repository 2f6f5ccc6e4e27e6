#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pld/io.hpp"
#include "pld/rng.hpp"

namespace pld {

using Interaction = std::pair<int, int>; // (user, item)

// Observed user-item interaction set over dense indices. `per_user_items`
// is the row grouping of `interactions`, kept sorted so membership checks
// are a binary search.
struct InteractionSet {
    int num_users = 0;
    int num_items = 0;
    std::vector<Interaction> interactions;
    std::vector<std::vector<int>> per_user_items;

    bool contains(int user, int item) const {
        if (user < 0 || user >= num_users) return false;
        const auto& row = per_user_items[static_cast<size_t>(user)];
        return std::binary_search(row.begin(), row.end(), item);
    }

    const std::vector<int>& items_of(int user) const {
        return per_user_items[static_cast<size_t>(user)];
    }

    std::size_t size() const { return interactions.size(); }

    // Rebuilds per_user_items from `interactions` and validates index ranges.
    void rebuild_index() {
        per_user_items.assign(static_cast<size_t>(num_users), {});
        for (const auto& [u, v] : interactions) {
            if (u < 0 || u >= num_users || v < 0 || v >= num_items) {
                throw std::invalid_argument("interaction index out of range: (" +
                                            std::to_string(u) + ", " + std::to_string(v) + ")");
            }
            per_user_items[static_cast<size_t>(u)].push_back(v);
        }
        for (auto& row : per_user_items) {
            std::sort(row.begin(), row.end());
            if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
                throw std::invalid_argument("duplicate (user, item) pair");
            }
        }
    }
};

inline InteractionSet make_interaction_set(int num_users, int num_items,
                                           std::vector<Interaction> interactions) {
    InteractionSet set;
    set.num_users = num_users;
    set.num_items = num_items;
    set.interactions = std::move(interactions);
    set.rebuild_index();
    return set;
}

// Dense index -> raw id, for users and items separately.
struct IdMap {
    std::vector<std::string> users;
    std::vector<std::string> items;
};

struct LoadedInteractions {
    InteractionSet set;
    IdMap ids;
};

// Parses a whitespace-separated "user item" pair per line. Raw ids are
// re-indexed densely in first-appearance order; duplicate pairs collapse.
inline LoadedInteractions load_interactions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open interaction file: " + path.string());
    }
    LoadedInteractions out;
    std::unordered_map<std::string, int> user_index;
    std::unordered_map<std::string, int> item_index;
    std::vector<std::vector<int>> seen; // per-user items, for dedup
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string raw_user, raw_item, extra;
        if (!(ss >> raw_user)) {
            continue; // blank line
        }
        if (!(ss >> raw_item) || (ss >> extra)) {
            throw std::runtime_error("malformed line " + std::to_string(line_no) + " in " +
                                     path.string() + ": expected two tokens");
        }
        auto [uit, unew] = user_index.try_emplace(raw_user, static_cast<int>(out.ids.users.size()));
        if (unew) {
            out.ids.users.push_back(raw_user);
            seen.emplace_back();
        }
        auto [iit, inew] = item_index.try_emplace(raw_item, static_cast<int>(out.ids.items.size()));
        if (inew) {
            out.ids.items.push_back(raw_item);
        }
        int u = uit->second;
        int v = iit->second;
        auto& row = seen[static_cast<size_t>(u)];
        if (std::find(row.begin(), row.end(), v) == row.end()) {
            row.push_back(v);
            out.set.interactions.emplace_back(u, v);
        }
    }
    if (out.set.interactions.empty()) {
        throw std::runtime_error("no interactions found in " + path.string());
    }
    out.set.num_users = static_cast<int>(out.ids.users.size());
    out.set.num_items = static_cast<int>(out.ids.items.size());
    out.set.rebuild_index();
    return out;
}

struct FilteredInteractions {
    InteractionSet set;
    // new dense index -> old index, for composing id mappings
    std::vector<int> kept_users;
    std::vector<int> kept_items;
};

// Iteratively removes users and items with degree < min_count until a fixed
// point, then re-indexes densely (old index order preserved).
inline FilteredInteractions filter_min_degree(const InteractionSet& set, int min_count) {
    if (min_count < 1) {
        throw std::invalid_argument("min_count must be >= 1");
    }
    std::vector<Interaction> current = set.interactions;
    for (;;) {
        std::vector<int> user_deg(static_cast<size_t>(set.num_users), 0);
        std::vector<int> item_deg(static_cast<size_t>(set.num_items), 0);
        for (const auto& [u, v] : current) {
            ++user_deg[static_cast<size_t>(u)];
            ++item_deg[static_cast<size_t>(v)];
        }
        std::vector<Interaction> next;
        next.reserve(current.size());
        for (const auto& [u, v] : current) {
            if (user_deg[static_cast<size_t>(u)] >= min_count &&
                item_deg[static_cast<size_t>(v)] >= min_count) {
                next.emplace_back(u, v);
            }
        }
        if (next.size() == current.size()) {
            break;
        }
        current = std::move(next);
    }
    if (current.empty()) {
        throw std::runtime_error("filter eliminated all data (min_count=" +
                                 std::to_string(min_count) + ")");
    }

    FilteredInteractions out;
    std::vector<int> user_map(static_cast<size_t>(set.num_users), -1);
    std::vector<int> item_map(static_cast<size_t>(set.num_items), -1);
    for (const auto& [u, v] : current) {
        if (user_map[static_cast<size_t>(u)] < 0) {
            user_map[static_cast<size_t>(u)] = 0;
        }
        if (item_map[static_cast<size_t>(v)] < 0) {
            item_map[static_cast<size_t>(v)] = 0;
        }
    }
    for (int u = 0; u < set.num_users; ++u) {
        if (user_map[static_cast<size_t>(u)] == 0) {
            user_map[static_cast<size_t>(u)] = static_cast<int>(out.kept_users.size());
            out.kept_users.push_back(u);
        }
    }
    for (int v = 0; v < set.num_items; ++v) {
        if (item_map[static_cast<size_t>(v)] == 0) {
            item_map[static_cast<size_t>(v)] = static_cast<int>(out.kept_items.size());
            out.kept_items.push_back(v);
        }
    }
    out.set.num_users = static_cast<int>(out.kept_users.size());
    out.set.num_items = static_cast<int>(out.kept_items.size());
    out.set.interactions.reserve(current.size());
    for (const auto& [u, v] : current) {
        out.set.interactions.emplace_back(user_map[static_cast<size_t>(u)],
                                          item_map[static_cast<size_t>(v)]);
    }
    out.set.rebuild_index();
    return out;
}

struct SplitDataset {
    InteractionSet train;
    InteractionSet validation;
    InteractionSet test;
    std::int64_t seed = 0;
    // users whose train share rounded to zero; excluded from evaluation
    std::vector<int> users_without_train;
};

// Per user, round(train_frac * |V_u|) interactions go to train (seeded
// shuffle), the remainder to test; then a val_frac_of_train share of the
// pooled train set moves to validation (global shuffle).
inline SplitDataset split(const InteractionSet& set, double train_frac,
                          double val_frac_of_train, std::int64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw std::invalid_argument("train_frac must be in (0, 1)");
    }
    if (!(val_frac_of_train >= 0.0 && val_frac_of_train < 1.0)) {
        throw std::invalid_argument("val_frac_of_train must be in [0, 1)");
    }
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0xB5);

    SplitDataset out;
    out.seed = seed;
    std::vector<Interaction> train_pool;
    std::vector<Interaction> test_pairs;
    for (int u = 0; u < set.num_users; ++u) {
        std::vector<int> items = set.items_of(u);
        if (items.empty()) continue;
        std::shuffle(items.begin(), items.end(), rng);
        auto n_train = static_cast<size_t>(
            round_half_up(train_frac * static_cast<double>(items.size())));
        n_train = std::min(n_train, items.size());
        if (n_train == 0) {
            out.users_without_train.push_back(u);
        }
        for (size_t i = 0; i < items.size(); ++i) {
            (i < n_train ? train_pool : test_pairs).emplace_back(u, items[i]);
        }
    }
    std::shuffle(train_pool.begin(), train_pool.end(), rng);
    auto n_val = static_cast<size_t>(
        round_half_up(val_frac_of_train * static_cast<double>(train_pool.size())));
    n_val = std::min(n_val, train_pool.size());

    std::vector<Interaction> val_pairs(train_pool.end() - static_cast<std::ptrdiff_t>(n_val),
                                       train_pool.end());
    train_pool.resize(train_pool.size() - n_val);

    out.train = make_interaction_set(set.num_users, set.num_items, std::move(train_pool));
    out.validation = make_interaction_set(set.num_users, set.num_items, std::move(val_pairs));
    out.test = make_interaction_set(set.num_users, set.num_items, std::move(test_pairs));
    return out;
}

enum class Label : std::uint8_t { Normal = 0, Noisy = 1 };

inline const char* label_name(Label l) { return l == Label::Normal ? "normal" : "noisy"; }

// Training set with injected noise. `all` is the training view (base plus
// injected); `labels` aligns with `all.interactions` and is ground truth
// for evaluation telemetry only.
struct NoisyTrainSet {
    InteractionSet base;
    std::vector<Interaction> injected;
    InteractionSet all;
    std::vector<Label> labels;
    std::vector<std::pair<int, int>> shortfalls; // (user, missing count), per-user mode
    std::vector<std::vector<int>> injected_by_user; // sorted, for label lookup

    std::size_t size() const { return all.size(); }

    // Ground-truth label of a training pair; telemetry only.
    Label label_of(int user, int item) const {
        if (user < static_cast<int>(injected_by_user.size())) {
            const auto& row = injected_by_user[static_cast<size_t>(user)];
            if (std::binary_search(row.begin(), row.end(), item)) return Label::Noisy;
        }
        return Label::Normal;
    }

    // Same training view with ground-truth labels removed.
    NoisyTrainSet with_labels_erased() const {
        NoisyTrainSet out;
        out.base = all;
        out.all = all;
        out.labels.assign(all.size(), Label::Normal);
        out.injected_by_user.assign(static_cast<size_t>(all.num_users), {});
        return out;
    }
};

inline NoisyTrainSet finish_noisy_set(const InteractionSet& train,
                                      std::vector<Interaction> injected) {
    NoisyTrainSet out;
    out.base = train;
    out.injected = std::move(injected);
    std::vector<Interaction> combined = train.interactions;
    combined.insert(combined.end(), out.injected.begin(), out.injected.end());
    // labels align with all.interactions: base order, then injected order
    out.all = make_interaction_set(train.num_users, train.num_items, std::move(combined));
    out.labels.assign(train.size(), Label::Normal);
    out.labels.insert(out.labels.end(), out.injected.size(), Label::Noisy);
    out.injected_by_user.assign(static_cast<size_t>(train.num_users), {});
    for (const auto& [u, v] : out.injected) {
        out.injected_by_user[static_cast<size_t>(u)].push_back(v);
    }
    for (auto& row : out.injected_by_user) {
        std::sort(row.begin(), row.end());
    }
    return out;
}

namespace detail {

inline std::size_t absent_pair_count(const InteractionSet& train,
                                     const InteractionSet& forbidden) {
    std::size_t present = 0;
    for (int u = 0; u < train.num_users; ++u) {
        const auto& a = train.items_of(u);
        std::size_t overlap = 0;
        if (u < forbidden.num_users) {
            for (int v : forbidden.items_of(u)) {
                if (std::binary_search(a.begin(), a.end(), v)) ++overlap;
            }
            present += a.size() + forbidden.items_of(u).size() - overlap;
        } else {
            present += a.size();
        }
    }
    return static_cast<std::size_t>(train.num_users) *
               static_cast<std::size_t>(train.num_items) - present;
}

} // namespace detail

// Adds round(rho * |train|) uniformly random (user, item) pairs that occur
// neither in `train` nor in `forbidden` (held-out data), labeled noisy.
inline NoisyTrainSet inject_noise_ratio(const InteractionSet& train, double rho,
                                        std::int64_t seed, const InteractionSet& forbidden) {
    if (rho < 0.0) {
        throw std::invalid_argument("rho must be >= 0");
    }
    auto target = static_cast<std::size_t>(
        round_half_up(rho * static_cast<double>(train.size())));
    std::size_t capacity = detail::absent_pair_count(train, forbidden);
    if (target > capacity) {
        throw std::runtime_error("not enough absent (user, item) pairs to inject " +
                                 std::to_string(target) + " noisy interactions");
    }
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0x401);
    std::vector<Interaction> injected;
    injected.reserve(target);
    std::vector<std::vector<int>> taken(static_cast<size_t>(train.num_users));

    auto is_free = [&](int u, int v) {
        if (train.contains(u, v) || forbidden.contains(u, v)) return false;
        const auto& t = taken[static_cast<size_t>(u)];
        return std::find(t.begin(), t.end(), v) == t.end();
    };

    if (target * 2 <= capacity) {
        std::uniform_int_distribution<int> user_dist(0, train.num_users - 1);
        std::uniform_int_distribution<int> item_dist(0, train.num_items - 1);
        while (injected.size() < target) {
            int u = user_dist(rng);
            int v = item_dist(rng);
            if (is_free(u, v)) {
                taken[static_cast<size_t>(u)].push_back(v);
                injected.emplace_back(u, v);
            }
        }
    } else {
        // dense regime: enumerate the absent pairs and sample without replacement
        std::vector<Interaction> absent;
        absent.reserve(capacity);
        for (int u = 0; u < train.num_users; ++u) {
            for (int v = 0; v < train.num_items; ++v) {
                if (!train.contains(u, v) && !forbidden.contains(u, v)) {
                    absent.emplace_back(u, v);
                }
            }
        }
        std::shuffle(absent.begin(), absent.end(), rng);
        injected.assign(absent.begin(), absent.begin() + static_cast<std::ptrdiff_t>(target));
    }
    return finish_noisy_set(train, std::move(injected));
}

// Adds exactly `count` absent items per user, fewer only when the user's
// absent-item pool is exhausted (recorded as a shortfall).
inline NoisyTrainSet inject_noise_per_user(const InteractionSet& train, int count,
                                           std::int64_t seed, const InteractionSet& forbidden) {
    if (count < 0) {
        throw std::invalid_argument("count must be >= 0");
    }
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0x402);
    std::vector<Interaction> injected;
    std::vector<std::pair<int, int>> shortfalls;
    for (int u = 0; u < train.num_users; ++u) {
        std::vector<int> absent;
        for (int v = 0; v < train.num_items; ++v) {
            if (!train.contains(u, v) && !forbidden.contains(u, v)) {
                absent.push_back(v);
            }
        }
        auto take = std::min<std::size_t>(static_cast<std::size_t>(count), absent.size());
        std::shuffle(absent.begin(), absent.end(), rng);
        for (std::size_t i = 0; i < take; ++i) {
            injected.emplace_back(u, absent[i]);
        }
        if (take < static_cast<std::size_t>(count)) {
            shortfalls.emplace_back(u, count - static_cast<int>(take));
        }
    }
    NoisyTrainSet out = finish_noisy_set(train, std::move(injected));
    out.shortfalls = std::move(shortfalls);
    return out;
}

struct SyntheticDataset {
    InteractionSet set;
    // hidden ground-truth latents, row-major (num_users x dim, num_items x dim)
    std::vector<double> user_latents;
    std::vector<double> item_latents;
    int latent_dim = 0;
};

// Draws unit-Gaussian latents and gives each user their top-`per_user`
// items by latent dot product (ties broken by lower item index).
inline SyntheticDataset generate_synthetic(int num_users, int num_items, int latent_dim,
                                           int per_user, std::int64_t seed) {
    if (per_user > num_items) {
        throw std::invalid_argument("per_user must be <= num_items");
    }
    SyntheticDataset out;
    out.latent_dim = latent_dim;
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0x517);
    std::normal_distribution<double> unit(0.0, 1.0);
    out.user_latents.resize(static_cast<size_t>(num_users) * latent_dim);
    out.item_latents.resize(static_cast<size_t>(num_items) * latent_dim);
    for (auto& x : out.user_latents) x = unit(rng);
    for (auto& x : out.item_latents) x = unit(rng);

    std::vector<Interaction> interactions;
    interactions.reserve(static_cast<size_t>(num_users) * per_user);
    std::vector<std::pair<double, int>> scored(static_cast<size_t>(num_items));
    for (int u = 0; u < num_users; ++u) {
        const double* uv = &out.user_latents[static_cast<size_t>(u) * latent_dim];
        for (int v = 0; v < num_items; ++v) {
            const double* iv = &out.item_latents[static_cast<size_t>(v) * latent_dim];
            double s = 0.0;
            for (int d = 0; d < latent_dim; ++d) s += uv[d] * iv[d];
            scored[static_cast<size_t>(v)] = {s, v};
        }
        std::partial_sort(scored.begin(), scored.begin() + per_user, scored.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        for (int i = 0; i < per_user; ++i) {
            interactions.emplace_back(u, scored[static_cast<size_t>(i)].second);
        }
    }
    out.set = make_interaction_set(num_users, num_items, std::move(interactions));
    return out;
}

// ---- file formats ----

inline std::string format_id_map(const std::vector<std::string>& raw_ids) {
    std::string s;
    for (size_t i = 0; i < raw_ids.size(); ++i) {
        s += raw_ids[i];
        s += '\t';
        s += std::to_string(i);
        s += '\n';
    }
    return s;
}

inline void write_id_maps(const std::filesystem::path& dir, const IdMap& ids) {
    write_file_atomic(dir / "users.map.tsv", format_id_map(ids.users));
    write_file_atomic(dir / "items.map.tsv", format_id_map(ids.items));
}

inline std::string format_plain_set(const InteractionSet& set) {
    std::string s;
    for (const auto& [u, v] : set.interactions) {
        s += std::to_string(u);
        s += '\t';
        s += std::to_string(v);
        s += '\n';
    }
    return s;
}

inline std::string format_labeled_set(const NoisyTrainSet& noisy) {
    std::string s;
    for (size_t i = 0; i < noisy.all.size(); ++i) {
        const auto& [u, v] = noisy.all.interactions[i];
        s += std::to_string(u);
        s += '\t';
        s += std::to_string(v);
        s += '\t';
        s += label_name(noisy.labels[i]);
        s += '\n';
    }
    return s;
}

inline NoisyTrainSet read_labeled_set(const std::filesystem::path& path, int num_users,
                                      int num_items) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open labeled set: " + path.string());
    }
    std::vector<Interaction> base_pairs;
    std::vector<Interaction> injected;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        int u = 0, v = 0;
        std::string label;
        if (!(ss >> u)) continue;
        if (!(ss >> v >> label)) {
            throw std::runtime_error("malformed line " + std::to_string(line_no) + " in " +
                                     path.string());
        }
        if (label == "normal") {
            base_pairs.emplace_back(u, v);
        } else if (label == "noisy") {
            injected.emplace_back(u, v);
        } else {
            throw std::runtime_error("unknown label '" + label + "' on line " +
                                     std::to_string(line_no));
        }
    }
    InteractionSet base = make_interaction_set(num_users, num_items, std::move(base_pairs));
    return finish_noisy_set(base, std::move(injected));
}

} // namespace pld
