#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pld/model.hpp"

namespace pld {

enum class LossKind { BPR, BCE };

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow
inline double softplus(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

// -ln sigmoid(s_pos - s_neg)
inline double bpr_loss(double s_pos, double s_neg) {
    return softplus(-(s_pos - s_neg));
}

// -[label ln sigmoid(s) + (1 - label) ln(1 - sigmoid(s))]
inline double bce_loss(double s, int label) {
    return label ? softplus(-s) : softplus(s);
}

// (u, i, j): positive item i in V_u, negative item j outside V_u. The
// negative is shared between the pool-loss computation and the update.
struct TrainingTriple {
    int user = 0;
    int pos = 0;
    int neg = 0;
};

// The per-interaction loss l consumed by resampling and analytics:
// BPR pairs the positive with the triple's negative; BCE scores the
// positive alone against label 1.
inline double interaction_loss(const ModelState& state, const TrainingTriple& t,
                               LossKind kind) {
    const double s_pos = score(state, t.user, t.pos);
    if (kind == LossKind::BPR) {
        return bpr_loss(s_pos, score(state, t.user, t.neg));
    }
    return bce_loss(s_pos, 1);
}

// The objective optimized per triple. For BCE the positive is paired with
// the sampled negative at label 0 (1:1 negative sampling), so the negative
// row receives gradient under both losses.
inline double triple_loss(const ModelState& state, const TrainingTriple& t, LossKind kind) {
    const double s_pos = score(state, t.user, t.pos);
    const double s_neg = score(state, t.user, t.neg);
    if (kind == LossKind::BPR) {
        return bpr_loss(s_pos, s_neg);
    }
    return bce_loss(s_pos, 1) + bce_loss(s_neg, 0);
}

struct TripleGradient {
    std::vector<double> user;
    std::vector<double> pos;
    std::vector<double> neg;
};

namespace detail {

// Gradient of weight * triple objective with respect to the three touched
// rows, plus lambda * base row decay. Feature rows are the vectors that
// produced the scores (propagated embeddings when layers >= 1); decay
// applies to the underlying parameter rows.
inline void triple_gradient_spans(std::span<const double> feat_u, std::span<const double> feat_i,
                                  std::span<const double> feat_j, std::span<const double> base_u,
                                  std::span<const double> base_i, std::span<const double> base_j,
                                  LossKind kind, double weight, double lambda,
                                  TripleGradient& out) {
    const size_t dim = feat_u.size();
    out.user.assign(dim, 0.0);
    out.pos.assign(dim, 0.0);
    out.neg.assign(dim, 0.0);
    if (kind == LossKind::BPR) {
        const double margin = dot(feat_u, feat_i) - dot(feat_u, feat_j);
        const double g = -weight * sigmoid(-margin); // d softplus(-m) / dm
        for (size_t d = 0; d < dim; ++d) {
            out.user[d] = g * (feat_i[d] - feat_j[d]);
            out.pos[d] = g * feat_u[d];
            out.neg[d] = -g * feat_u[d];
        }
    } else {
        const double gp = weight * (sigmoid(dot(feat_u, feat_i)) - 1.0);
        const double gn = weight * sigmoid(dot(feat_u, feat_j));
        for (size_t d = 0; d < dim; ++d) {
            out.user[d] = gp * feat_i[d] + gn * feat_j[d];
            out.pos[d] = gp * feat_u[d];
            out.neg[d] = gn * feat_u[d];
        }
    }
    if (lambda != 0.0) {
        for (size_t d = 0; d < dim; ++d) {
            out.user[d] += lambda * base_u[d];
            out.pos[d] += lambda * base_i[d];
            out.neg[d] += lambda * base_j[d];
        }
    }
}

} // namespace detail

inline TripleGradient gradients(const ModelState& state, const TrainingTriple& t, LossKind kind,
                                double weight, double lambda) {
    if (weight < 0.0) {
        throw std::invalid_argument("gradient weight must be >= 0");
    }
    TripleGradient out;
    detail::triple_gradient_spans(state.effective_user_row(t.user),
                                  state.effective_item_row(t.pos),
                                  state.effective_item_row(t.neg), state.user_row(t.user),
                                  state.item_row(t.pos), state.item_row(t.neg), kind, weight,
                                  lambda, out);
    return out;
}

} // namespace pld
