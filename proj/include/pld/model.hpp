#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pld/interactions.hpp"
#include "pld/rng.hpp"

namespace pld {

// Embedding model: plain matrix factorization when layers == 0, with
// optional parameter-free graph propagation (symmetric-normalized neighbor
// averaging, final embedding = mean over layers 0..L) when layers >= 1.
struct ModelState {
    int num_users = 0;
    int num_items = 0;
    int dim = 0;
    int layers = 0;
    std::int64_t seed = 0;
    std::vector<double> user_emb; // num_users x dim, row-major
    std::vector<double> item_emb; // num_items x dim, row-major

    // propagated embeddings; valid only while no parameter update has
    // happened since propagate()
    bool cache_valid = false;
    std::vector<double> user_prop;
    std::vector<double> item_prop;

    std::span<double> user_row(int u) {
        return {user_emb.data() + static_cast<size_t>(u) * dim, static_cast<size_t>(dim)};
    }
    std::span<double> item_row(int v) {
        return {item_emb.data() + static_cast<size_t>(v) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> user_row(int u) const {
        return {user_emb.data() + static_cast<size_t>(u) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> item_row(int v) const {
        return {item_emb.data() + static_cast<size_t>(v) * dim, static_cast<size_t>(dim)};
    }

    void invalidate_cache() { cache_valid = false; }

    // rows used for scoring: propagated when layers >= 1, base otherwise
    std::span<const double> effective_user_row(int u) const {
        if (layers == 0) return user_row(u);
        require_fresh_cache();
        return {user_prop.data() + static_cast<size_t>(u) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> effective_item_row(int v) const {
        if (layers == 0) return item_row(v);
        require_fresh_cache();
        return {item_prop.data() + static_cast<size_t>(v) * dim, static_cast<size_t>(dim)};
    }

    void require_fresh_cache() const {
        if (!cache_valid) {
            throw std::logic_error("propagation cache is stale; call propagate() first");
        }
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline ModelState init_model(int num_users, int num_items, int dim, int layers,
                             std::int64_t seed) {
    if (dim < 1) {
        throw std::invalid_argument("dim must be >= 1");
    }
    ModelState s;
    s.num_users = num_users;
    s.num_items = num_items;
    s.dim = dim;
    s.layers = layers;
    s.seed = seed;
    auto rng = make_rng(static_cast<std::uint64_t>(seed), 0x3D);
    std::normal_distribution<double> init(0.0, 0.1);
    s.user_emb.resize(static_cast<size_t>(num_users) * dim);
    s.item_emb.resize(static_cast<size_t>(num_items) * dim);
    for (auto& x : s.user_emb) x = init(rng);
    for (auto& x : s.item_emb) x = init(rng);
    return s;
}

// One propagation sweep: layer l+1 user row = sum over interacted items of
// item_l(v) / sqrt(deg(u) deg(v)), symmetrically for items. Final embedding
// is the mean over layers 0..L; isolated nodes keep their layer-0 row.
inline void propagate(ModelState& state, const InteractionSet& train) {
    if (state.layers < 1) {
        throw std::logic_error("propagate requires layers >= 1");
    }
    const int dim = state.dim;
    std::vector<int> user_deg(static_cast<size_t>(state.num_users), 0);
    std::vector<int> item_deg(static_cast<size_t>(state.num_items), 0);
    for (const auto& [u, v] : train.interactions) {
        ++user_deg[static_cast<size_t>(u)];
        ++item_deg[static_cast<size_t>(v)];
    }
    std::vector<double> norm(train.size());
    for (size_t e = 0; e < train.size(); ++e) {
        const auto& [u, v] = train.interactions[e];
        norm[e] = 1.0 / std::sqrt(static_cast<double>(user_deg[static_cast<size_t>(u)]) *
                                  static_cast<double>(item_deg[static_cast<size_t>(v)]));
    }

    std::vector<double> cur_u = state.user_emb;
    std::vector<double> cur_i = state.item_emb;
    std::vector<double> acc_u = state.user_emb;
    std::vector<double> acc_i = state.item_emb;
    std::vector<double> next_u(cur_u.size());
    std::vector<double> next_i(cur_i.size());
    for (int l = 0; l < state.layers; ++l) {
        std::fill(next_u.begin(), next_u.end(), 0.0);
        std::fill(next_i.begin(), next_i.end(), 0.0);
        for (size_t e = 0; e < train.size(); ++e) {
            const auto& [u, v] = train.interactions[e];
            const double w = norm[e];
            double* nu = &next_u[static_cast<size_t>(u) * dim];
            double* ni = &next_i[static_cast<size_t>(v) * dim];
            const double* cu = &cur_u[static_cast<size_t>(u) * dim];
            const double* ci = &cur_i[static_cast<size_t>(v) * dim];
            for (int d = 0; d < dim; ++d) {
                nu[d] += w * ci[d];
                ni[d] += w * cu[d];
            }
        }
        cur_u.swap(next_u);
        cur_i.swap(next_i);
        for (size_t i = 0; i < acc_u.size(); ++i) acc_u[i] += cur_u[i];
        for (size_t i = 0; i < acc_i.size(); ++i) acc_i[i] += cur_i[i];
    }
    const double inv = 1.0 / (state.layers + 1);
    for (auto& x : acc_u) x *= inv;
    for (auto& x : acc_i) x *= inv;
    // isolated nodes keep their base embedding
    for (int u = 0; u < state.num_users; ++u) {
        if (user_deg[static_cast<size_t>(u)] == 0) {
            std::copy_n(state.user_emb.begin() + static_cast<std::ptrdiff_t>(u) * dim, dim,
                        acc_u.begin() + static_cast<std::ptrdiff_t>(u) * dim);
        }
    }
    for (int v = 0; v < state.num_items; ++v) {
        if (item_deg[static_cast<size_t>(v)] == 0) {
            std::copy_n(state.item_emb.begin() + static_cast<std::ptrdiff_t>(v) * dim, dim,
                        acc_i.begin() + static_cast<std::ptrdiff_t>(v) * dim);
        }
    }
    state.user_prop = std::move(acc_u);
    state.item_prop = std::move(acc_i);
    state.cache_valid = true;
}

inline double score(const ModelState& state, int u, int v) {
    return dot(state.effective_user_row(u), state.effective_item_row(v));
}

inline std::vector<double> score_all(const ModelState& state, int u) {
    std::vector<double> out(static_cast<size_t>(state.num_items));
    auto ur = state.effective_user_row(u);
    for (int v = 0; v < state.num_items; ++v) {
        out[static_cast<size_t>(v)] = dot(ur, state.effective_item_row(v));
    }
    return out;
}

// ---- checkpoints ----

inline constexpr char kCheckpointMagic[8] = {'P', 'L', 'D', 'C', 'K', 'P', 'T', '1'};

inline void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
    ensure_dir(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write checkpoint: " + tmp.string());
        }
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        std::int64_t header[5] = {state.num_users, state.num_items, state.dim, state.layers,
                                  state.seed};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        out.write(reinterpret_cast<const char*>(state.user_emb.data()),
                  static_cast<std::streamsize>(state.user_emb.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(state.item_emb.data()),
                  static_cast<std::streamsize>(state.item_emb.size() * sizeof(double)));
        if (!out) {
            throw std::runtime_error("checkpoint write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline ModelState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    std::int64_t header[5];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) {
        throw std::runtime_error("truncated checkpoint header: " + path.string());
    }
    ModelState s;
    s.num_users = static_cast<int>(header[0]);
    s.num_items = static_cast<int>(header[1]);
    s.dim = static_cast<int>(header[2]);
    s.layers = static_cast<int>(header[3]);
    s.seed = header[4];
    s.user_emb.resize(static_cast<size_t>(s.num_users) * s.dim);
    s.item_emb.resize(static_cast<size_t>(s.num_items) * s.dim);
    in.read(reinterpret_cast<char*>(s.user_emb.data()),
            static_cast<std::streamsize>(s.user_emb.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.item_emb.data()),
            static_cast<std::streamsize>(s.item_emb.size() * sizeof(double)));
    if (!in) {
        throw std::runtime_error("truncated checkpoint data: " + path.string());
    }
    return s;
}

} // namespace pld
