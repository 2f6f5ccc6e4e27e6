#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pld/denoise.hpp"
#include "pld/evaluation.hpp"
#include "pld/interactions.hpp"
#include "pld/loss.hpp"
#include "pld/model.hpp"
#include "pld/sampler.hpp"

namespace pld {

enum class Denoiser { None, PLD, RCE, TCE };

inline const char* denoiser_name(Denoiser d) {
    switch (d) {
        case Denoiser::None: return "none";
        case Denoiser::PLD: return "pld";
        case Denoiser::RCE: return "rce";
        case Denoiser::TCE: return "tce";
    }
    return "?";
}

struct TrainConfig {
    LossKind loss_kind = LossKind::BPR;
    Denoiser denoiser = Denoiser::None;
    ResampleConfig resample{};
    double learning_rate = 0.05;
    double weight_decay = 1e-5;
    int batch_size = 1024;
    int max_epochs = 200;
    int patience = 10; // <= 0 disables early stopping
    std::int64_t seed = 0;
    double rce_beta = 1.0;
    TruncateSchedule tce{};

    void validate() const {
        if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
        if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
        resample.validate();
        tce.validate();
    }
};

struct EpochStats {
    int epoch = 0;
    double mean_train_loss = 0.0;
    std::int64_t sampled_normal = 0;
    std::int64_t sampled_noisy = 0;
    double val_metric = std::numeric_limits<double>::quiet_NaN();
    double wall_clock_s = 0.0;
};

inline std::string epoch_csv_header() {
    return "epoch,mean_train_loss,sampled_normal,sampled_noisy,val_metric,wall_clock_s";
}

inline std::string format_epoch_csv_row(const EpochStats& s) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%lld,%lld,%.9g,%.6g", s.epoch, s.mean_train_loss,
                  static_cast<long long>(s.sampled_normal),
                  static_cast<long long>(s.sampled_noisy), s.val_metric, s.wall_clock_s);
    return buf;
}

namespace detail {

// Scoring view for one epoch. With layers == 0 it reads the live base
// embeddings (which only change at batch boundaries, so scores within a
// batch are consistent). With layers >= 1 it holds the propagated
// embeddings computed at epoch start; gradients treat them as fixed
// features of the touched rows.
struct EpochView {
    const ModelState* state = nullptr;
    bool use_prop = false;
    std::vector<double> prop_u;
    std::vector<double> prop_i;

    static EpochView make(ModelState& state, const InteractionSet& train) {
        EpochView view;
        view.state = &state;
        view.use_prop = state.layers >= 1;
        if (view.use_prop) {
            propagate(state, train);
            view.prop_u = state.user_prop;
            view.prop_i = state.item_prop;
        }
        return view;
    }

    std::span<const double> user_vec(int u) const {
        if (use_prop) {
            return {prop_u.data() + static_cast<size_t>(u) * state->dim,
                    static_cast<size_t>(state->dim)};
        }
        return state->user_row(u);
    }
    std::span<const double> item_vec(int v) const {
        if (use_prop) {
            return {prop_i.data() + static_cast<size_t>(v) * state->dim,
                    static_cast<size_t>(state->dim)};
        }
        return state->item_row(v);
    }
    double score(int u, int v) const { return dot(user_vec(u), item_vec(v)); }

    double interaction_loss(const TrainingTriple& t, LossKind kind) const {
        if (kind == LossKind::BPR) {
            return bpr_loss(score(t.user, t.pos), score(t.user, t.neg));
        }
        return bce_loss(score(t.user, t.pos), 1);
    }
    double triple_loss(const TrainingTriple& t, LossKind kind) const {
        if (kind == LossKind::BPR) {
            return bpr_loss(score(t.user, t.pos), score(t.user, t.neg));
        }
        return bce_loss(score(t.user, t.pos), 1) + bce_loss(score(t.user, t.neg), 0);
    }
};

struct PendingUpdate {
    bool is_item = false;
    int row = 0;
    size_t offset = 0; // into the flat gradient buffer
};

} // namespace detail

// One full pass of the resampling training loop: iterates the training
// interactions in seeded shuffled batches; per enumerated interaction draws
// the candidate pool (PLD), a shared negative, evaluates pool losses
// against the pre-update scores, resamples the optimized positive, and
// applies the accumulated gradient once per batch. Ground-truth labels are
// read only to count how many optimized positives were noisy.
inline EpochStats train_epoch(ModelState& state, const NoisyTrainSet& data,
                              const TrainConfig& cfg, std::mt19937_64& rng, int epoch = 1) {
    cfg.validate();
    if (state.num_users != data.all.num_users || state.num_items != data.all.num_items) {
        throw std::invalid_argument("model dimensions do not match training data");
    }
    const auto t_start = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;

    auto view = detail::EpochView::make(state, data.all);
    const int dim = state.dim;

    std::vector<size_t> order(data.all.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<TrainingTriple> triples;
    std::vector<double> weights;
    std::vector<double> orig_losses; // TCE: losses of the enumerated positives
    std::vector<double> pool_losses;
    std::vector<detail::PendingUpdate> pending;
    std::vector<double> grad_buf;
    TripleGradient grad;

    double loss_sum = 0.0;
    std::int64_t optimized = 0;

    const size_t total = order.size();
    for (size_t begin = 0; begin < total; begin += static_cast<size_t>(cfg.batch_size)) {
        const size_t end = std::min(total, begin + static_cast<size_t>(cfg.batch_size));
        triples.clear();
        weights.clear();
        orig_losses.clear();

        for (size_t idx = begin; idx < end; ++idx) {
            const auto& [u, v_orig] = data.all.interactions[order[idx]];
            const auto& user_items = data.all.items_of(u);
            TrainingTriple t{u, v_orig, 0};
            double weight = 1.0;
            if (cfg.denoiser == Denoiser::PLD) {
                auto pool =
                    build_candidate_pool(u, user_items, cfg.resample.k, rng);
                t.neg = sample_negative(u, user_items, data.all.num_items, rng);
                pool_losses.resize(pool.items.size());
                for (size_t c = 0; c < pool.items.size(); ++c) {
                    pool_losses[c] =
                        view.interaction_loss({u, pool.items[c], t.neg}, cfg.loss_kind);
                }
                t.pos = resample(pool, pool_losses, cfg.resample.tau, rng);
            } else {
                t.neg = sample_negative(u, user_items, data.all.num_items, rng);
                if (cfg.denoiser == Denoiser::RCE) {
                    weight = rce_weight(view.interaction_loss(t, cfg.loss_kind), cfg.rce_beta);
                } else if (cfg.denoiser == Denoiser::TCE) {
                    orig_losses.push_back(view.interaction_loss(t, cfg.loss_kind));
                }
            }
            triples.push_back(t);
            weights.push_back(weight);
        }

        std::vector<char> keep;
        if (cfg.denoiser == Denoiser::TCE) {
            keep = tce_mask(orig_losses, epoch, cfg.tce);
        }

        pending.clear();
        grad_buf.clear();
        for (size_t b = 0; b < triples.size(); ++b) {
            if (!keep.empty() && !keep[b]) continue;
            const auto& t = triples[b];

            const double l = view.triple_loss(t, cfg.loss_kind);
            if (!std::isfinite(l)) {
                throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                         ", triple (" + std::to_string(t.user) + ", " +
                                         std::to_string(t.pos) + ", " + std::to_string(t.neg) +
                                         ")");
            }
            loss_sum += l;
            ++optimized;
            Label lab = data.label_of(t.user, t.pos);
            (lab == Label::Normal ? stats.sampled_normal : stats.sampled_noisy) += 1;

            detail::triple_gradient_spans(view.user_vec(t.user), view.item_vec(t.pos),
                                          view.item_vec(t.neg), state.user_row(t.user),
                                          state.item_row(t.pos), state.item_row(t.neg),
                                          cfg.loss_kind, weights[b], cfg.weight_decay, grad);
            const size_t off = grad_buf.size();
            grad_buf.insert(grad_buf.end(), grad.user.begin(), grad.user.end());
            grad_buf.insert(grad_buf.end(), grad.pos.begin(), grad.pos.end());
            grad_buf.insert(grad_buf.end(), grad.neg.begin(), grad.neg.end());
            pending.push_back({false, t.user, off});
            pending.push_back({true, t.pos, off + static_cast<size_t>(dim)});
            pending.push_back({true, t.neg, off + 2 * static_cast<size_t>(dim)});
        }

        // apply the batch once, in triple order
        for (const auto& upd : pending) {
            auto row = upd.is_item ? state.item_row(upd.row) : state.user_row(upd.row);
            const double* g = grad_buf.data() + upd.offset;
            for (int d = 0; d < dim; ++d) {
                row[static_cast<size_t>(d)] -= cfg.learning_rate * g[d];
            }
        }
        if (!pending.empty()) {
            state.invalidate_cache();
        }
    }

    stats.mean_train_loss = optimized > 0 ? loss_sum / static_cast<double>(optimized) : 0.0;
    stats.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                       t_start)
                             .count();
    return stats;
}

struct TrainResult {
    ModelState best_state;
    std::vector<EpochStats> history;
    int best_epoch = 0; // 0 when no validation-based selection happened
};

// Epoch orchestration with early stopping on validation Recall@20: trains
// until max_epochs or `patience` epochs without improvement, returning the
// best-validation checkpoint (the final state when validation is empty).
inline TrainResult run_training(ModelState state, const NoisyTrainSet& data,
                                const InteractionSet& validation, const TrainConfig& cfg) {
    cfg.validate();
    auto rng = make_rng(static_cast<std::uint64_t>(cfg.seed), 0x7EA1);
    const bool has_val = !validation.interactions.empty();

    TrainResult result;
    result.best_state = state;
    double best_metric = -1.0;
    int epochs_since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        EpochStats stats = train_epoch(state, data, cfg, rng, epoch);
        if (has_val) {
            if (state.layers >= 1) {
                propagate(state, data.all);
            }
            const auto report = evaluate(state, data.all, validation, {20});
            stats.val_metric = report.recall.empty() ? 0.0 : report.recall[0];
            if (stats.val_metric > best_metric) {
                best_metric = stats.val_metric;
                result.best_state = state;
                result.best_epoch = epoch;
                epochs_since_best = 0;
            } else {
                ++epochs_since_best;
            }
        }
        result.history.push_back(stats);
        if (has_val && cfg.patience > 0 && epochs_since_best >= cfg.patience) {
            break;
        }
    }
    if (!has_val) {
        result.best_state = state;
        result.best_epoch = static_cast<int>(result.history.size());
    }
    result.best_state.invalidate_cache();
    return result;
}

} // namespace pld
