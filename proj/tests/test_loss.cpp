#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pld/loss.hpp"

using namespace pld;

namespace {

constexpr double kLn2 = 0.6931471805599453;

// objective whose gradient `gradients()` claims to return
double fd_objective(const ModelState& m, const TrainingTriple& t, LossKind kind, double weight,
                    double lambda) {
    double reg = 0.0;
    for (int d = 0; d < m.dim; ++d) {
        const double u = m.user_emb[t.user * m.dim + d];
        const double i = m.item_emb[t.pos * m.dim + d];
        const double j = m.item_emb[t.neg * m.dim + d];
        reg += u * u + i * i + j * j;
    }
    return weight * triple_loss(m, t, kind) + 0.5 * lambda * reg;
}

} // namespace

TEST_CASE("bpr_loss values") {
    CHECK(bpr_loss(1.0, 1.0) == Catch::Approx(kLn2).epsilon(1e-12));
    CHECK(bpr_loss(2.0, 1.0) == Catch::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
    CHECK(bpr_loss(2.0, 1.0) == Catch::Approx(0.313262).margin(1e-6));

    SECTION("monotone decreasing in the margin, limit 0") {
        double prev = bpr_loss(0.0, 0.0);
        for (double margin = 0.5; margin <= 30.0; margin += 0.5) {
            double cur = bpr_loss(margin, 0.0);
            CHECK(cur < prev);
            prev = cur;
        }
        CHECK(bpr_loss(30.0, 0.0) < 1e-12);
    }
}

TEST_CASE("bce_loss values") {
    CHECK(bce_loss(0.0, 1) == Catch::Approx(kLn2).epsilon(1e-12));
    CHECK(bce_loss(0.0, 0) == Catch::Approx(kLn2).epsilon(1e-12));
    CHECK(bce_loss(2.0, 1) == Catch::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-12));
    CHECK(bce_loss(2.0, 1) == Catch::Approx(0.126928).margin(1e-6));

    SECTION("label-1 loss strictly decreasing in the score") {
        double prev = bce_loss(-5.0, 1);
        for (double s = -4.5; s <= 5.0; s += 0.5) {
            double cur = bce_loss(s, 1);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("losses stay finite and tight at extreme margins") {
    CHECK(bpr_loss(50.0, 0.0) < 1e-20);
    CHECK(bpr_loss(0.0, 50.0) > 49.9);
    CHECK(bpr_loss(0.0, 50.0) < 50.1);
    CHECK(std::isfinite(bpr_loss(-700.0, 700.0)));
    CHECK(std::isfinite(bce_loss(-745.0, 1)));
    CHECK(bce_loss(50.0, 1) < 1e-20);
    CHECK(bce_loss(-50.0, 1) > 49.9);
    CHECK(bce_loss(-50.0, 1) < 50.1);
}

TEST_CASE("interaction_loss composes score and loss") {
    auto m = init_model(3, 5, 8, 0, 4);
    SECTION("identical pos and neg scores give ln 2 under BPR") {
        TrainingTriple t{0, 2, 2};
        CHECK(interaction_loss(m, t, LossKind::BPR) == Catch::Approx(kLn2));
    }
    SECTION("BCE at score zero gives ln 2") {
        auto z = m;
        std::fill(z.user_emb.begin(), z.user_emb.end(), 0.0);
        CHECK(interaction_loss(z, {0, 1, 2}, LossKind::BCE) == Catch::Approx(kLn2));
    }
    SECTION("matches composing score and bpr_loss") {
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<int> user(0, 2), item(0, 4);
        for (int reps = 0; reps < 50; ++reps) {
            TrainingTriple t{user(rng), item(rng), item(rng)};
            const double expect = bpr_loss(score(m, t.user, t.pos), score(m, t.user, t.neg));
            CHECK(interaction_loss(m, t, LossKind::BPR) == Catch::Approx(expect).margin(1e-14));
        }
    }
}

TEST_CASE("gradient special cases") {
    auto m = init_model(2, 4, 6, 0, 10);
    TrainingTriple t{1, 0, 3};

    SECTION("weight=0 leaves pure regularization") {
        const double lambda = 0.01;
        auto g = gradients(m, t, LossKind::BPR, 0.0, lambda);
        for (int d = 0; d < 6; ++d) {
            CHECK(g.user[d] == Catch::Approx(lambda * m.user_emb[1 * 6 + d]));
            CHECK(g.pos[d] == Catch::Approx(lambda * m.item_emb[0 * 6 + d]));
            CHECK(g.neg[d] == Catch::Approx(lambda * m.item_emb[3 * 6 + d]));
        }
    }
    SECTION("zero margin BPR: d/du = -0.5 (e_i - e_j)") {
        auto z = m;
        // make pos and neg rows identical so the margin is exactly zero
        for (int d = 0; d < 6; ++d) z.item_emb[3 * 6 + d] = z.item_emb[0 * 6 + d];
        auto g = gradients(z, t, LossKind::BPR, 1.0, 0.0);
        for (int d = 0; d < 6; ++d) {
            const double ei = z.item_emb[0 * 6 + d];
            const double ej = z.item_emb[3 * 6 + d];
            CHECK(g.user[d] == Catch::Approx(-0.5 * (ei - ej)).margin(1e-12));
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> wdist(0.0, 2.0);
    const double h = 1e-4;
    for (int rep = 0; rep < 100; ++rep) {
        const LossKind kind = (rep % 2 == 0) ? LossKind::BPR : LossKind::BCE;
        auto m = init_model(3, 6, 5, 0, 1000 + rep);
        TrainingTriple t{static_cast<int>(rng() % 3), static_cast<int>(rng() % 6), 0};
        do {
            t.neg = static_cast<int>(rng() % 6);
        } while (t.neg == t.pos);
        const double weight = wdist(rng);
        const double lambda = (rep % 3 == 0) ? 0.0 : 0.05;

        auto g = gradients(m, t, kind, weight, lambda);
        auto check_block = [&](std::vector<double>& storage, int row,
                               const std::vector<double>& analytic) {
            for (int d = 0; d < m.dim; ++d) {
                const double orig = storage[row * m.dim + d];
                storage[row * m.dim + d] = orig + h;
                const double up = fd_objective(m, t, kind, weight, lambda);
                storage[row * m.dim + d] = orig - h;
                const double down = fd_objective(m, t, kind, weight, lambda);
                storage[row * m.dim + d] = orig;
                const double numeric = (up - down) / (2.0 * h);
                const double scale = std::max({std::abs(numeric), std::abs(analytic[d]), 1e-8});
                CHECK(std::abs(numeric - analytic[d]) / scale < 1e-4);
            }
        };
        check_block(m.user_emb, t.user, g.user);
        check_block(m.item_emb, t.pos, g.pos);
        check_block(m.item_emb, t.neg, g.neg);
    }
}

TEST_CASE("losses are nonnegative and finite on random scores") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> score(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = score(rng), b = score(rng);
        const double l1 = bpr_loss(a, b);
        const double l2 = bce_loss(a, 1);
        const double l3 = bce_loss(b, 0);
        CHECK(l1 >= 0.0);
        CHECK(l2 >= 0.0);
        CHECK(l3 >= 0.0);
        CHECK(std::isfinite(l1));
        CHECK(std::isfinite(l2));
        CHECK(std::isfinite(l3));
    }
}
