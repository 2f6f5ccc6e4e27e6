#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "pld/rng.hpp"
#include "pld/sampler.hpp"

using namespace pld;

TEST_CASE("build_candidate_pool degenerate cases") {
    auto rng = make_rng(1);
    SECTION("single-item V_u fills the pool with copies") {
        std::vector<int> items{42};
        auto pool = build_candidate_pool(0, items, 7, rng);
        REQUIRE(pool.items.size() == 7);
        for (int v : pool.items) CHECK(v == 42);
    }
    SECTION("k=1 draws one item from V_u") {
        std::vector<int> items{3, 5, 9};
        auto pool = build_candidate_pool(0, items, 1, rng);
        REQUIRE(pool.items.size() == 1);
        CHECK((pool.items[0] == 3 || pool.items[0] == 5 || pool.items[0] == 9));
    }
    SECTION("empty V_u is an error") {
        std::vector<int> none;
        CHECK_THROWS(build_candidate_pool(0, none, 3, rng));
    }
}

TEST_CASE("pool inclusion frequency matches the binomial model") {
    auto rng = make_rng(99);
    std::vector<int> items(10);
    std::iota(items.begin(), items.end(), 0);
    const int k = 5, pools = 100000;
    std::vector<int> appearances(10, 0);
    for (int p = 0; p < pools; ++p) {
        auto pool = build_candidate_pool(0, items, k, rng);
        for (int v : pool.items) appearances[v]++;
    }
    // each slot is uniform over 10 items: per-item draw count ~ Binomial(k*pools, 1/10)
    const double trials = static_cast<double>(k) * pools;
    const double expect = trials / 10.0;
    const double se = std::sqrt(trials * 0.1 * 0.9);
    for (int v = 0; v < 10; ++v) {
        CHECK(std::abs(appearances[v] - expect) < 4.0 * se);
    }
}

TEST_CASE("resample_probabilities closed cases") {
    SECTION("equal losses are uniform for any tau") {
        for (double tau : {0.01, 1.0, 50.0}) {
            std::vector<double> losses{2.5, 2.5, 2.5, 2.5};
            auto p = resample_probabilities(losses, tau);
            for (double x : p) CHECK(x == Catch::Approx(0.25).margin(1e-12));
        }
    }
    SECTION("losses [0, ln 2] at tau=1 give [2/3, 1/3]") {
        std::vector<double> losses{0.0, std::log(2.0)};
        auto p = resample_probabilities(losses, 1.0);
        CHECK(p[0] == Catch::Approx(2.0 / 3.0).margin(1e-12));
        CHECK(p[1] == Catch::Approx(1.0 / 3.0).margin(1e-12));
    }
    SECTION("losses [0, ln 2] at tau=0.5 give [0.8, 0.2]") {
        std::vector<double> losses{0.0, std::log(2.0)};
        auto p = resample_probabilities(losses, 0.5);
        CHECK(p[0] == Catch::Approx(0.8).margin(1e-12));
        CHECK(p[1] == Catch::Approx(0.2).margin(1e-12));
    }
}

TEST_CASE("resample_probabilities distribution properties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> loss(0.0, 10.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> losses(5);
        for (auto& l : losses) l = loss(rng);
        const double tau = 0.05 + 2.0 * loss(rng) / 10.0;
        auto p = resample_probabilities(losses, tau);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);

        // shift invariance
        auto shifted = losses;
        for (auto& l : shifted) l += 3.7;
        auto p2 = resample_probabilities(shifted, tau);
        for (size_t i = 0; i < p.size(); ++i) {
            CHECK(p2[i] == Catch::Approx(p[i]).margin(1e-12));
        }
    }

    SECTION("argmin mass non-increasing in tau; uniform limit") {
        std::vector<double> losses{0.3, 1.1, 2.0, 0.9, 5.0};
        const size_t argmin = 0;
        double prev = 1.0;
        for (double tau : {0.01, 0.05, 0.1, 0.5, 1.0, 10.0, 1e3, 1e6}) {
            auto p = resample_probabilities(losses, tau);
            CHECK(p[argmin] <= prev + 1e-15);
            prev = p[argmin];
        }
        auto p = resample_probabilities(losses, 1e6);
        for (double x : p) CHECK(std::abs(x - 0.2) < 1e-6);
    }
}

TEST_CASE("resample draws from the categorical distribution") {
    SECTION("k=1 always returns the sole item") {
        auto rng = make_rng(3);
        CandidatePool pool{7, {19}};
        std::vector<double> losses{4.2};
        for (int i = 0; i < 100; ++i) CHECK(resample(pool, losses, 1.0, rng) == 19);
    }
    SECTION("tiny tau concentrates on the argmin-loss item") {
        auto rng = make_rng(4);
        CandidatePool pool{0, {10, 11, 12, 13, 14}};
        std::vector<double> losses{0.5, 0.1, 0.9, 0.3, 0.7};
        int hits = 0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            if (resample(pool, losses, 1e-6, rng) == 11) ++hits;
        }
        CHECK(static_cast<double>(hits) / draws >= 0.999);
    }
    SECTION("frequencies match [2/3, 1/3] within 4 standard errors") {
        auto rng = make_rng(6);
        CandidatePool pool{0, {1, 2}};
        std::vector<double> losses{0.0, std::log(2.0)};
        const int draws = 100000;
        int first = 0;
        for (int i = 0; i < draws; ++i) {
            if (resample(pool, losses, 1.0, rng) == 1) ++first;
        }
        const double p = 2.0 / 3.0;
        const double se = std::sqrt(p * (1 - p) * draws);
        CHECK(std::abs(first - p * draws) < 4.0 * se);
    }
}

TEST_CASE("sample_negative avoids interacted items") {
    SECTION("user missing exactly one item always gets it") {
        auto rng = make_rng(8);
        std::vector<int> items{0, 1, 2, 4}; // item 3 absent
        for (int i = 0; i < 50; ++i) CHECK(sample_negative(0, items, 5, rng) == 3);
    }
    SECTION("never lands in V_u") {
        auto rng = make_rng(9);
        std::vector<int> items{1, 3, 5, 7, 9, 11};
        for (int i = 0; i < 10000; ++i) {
            int v = sample_negative(0, items, 20, rng);
            CHECK(!std::binary_search(items.begin(), items.end(), v));
        }
    }
    SECTION("uniform over the absent items") {
        auto rng = make_rng(10);
        std::vector<int> items(90);
        std::iota(items.begin(), items.end(), 0); // 90 interacted, absent 90..99
        std::map<int, int> counts;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) counts[sample_negative(0, items, 100, rng)]++;
        REQUIRE(counts.size() == 10);
        const double expect = draws / 10.0;
        const double se = std::sqrt(draws * 0.1 * 0.9);
        for (auto& [v, c] : counts) {
            CHECK(v >= 90);
            CHECK(std::abs(c - expect) < 4.0 * se);
        }
    }
    SECTION("all items interacted is an error") {
        auto rng = make_rng(11);
        std::vector<int> items{0, 1, 2};
        CHECK_THROWS(sample_negative(0, items, 3, rng));
    }
}

TEST_CASE("k=1 end-to-end selection is uniform over V_u") {
    // pool of one uniform draw + resample over a single candidate
    auto rng = make_rng(12);
    std::vector<int> items{2, 4, 6, 8};
    std::map<int, int> counts;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) {
        auto pool = build_candidate_pool(0, items, 1, rng);
        std::vector<double> losses{1.23};
        counts[resample(pool, losses, 0.1, rng)]++;
    }
    const double expect = draws / 4.0;
    const double se = std::sqrt(draws * 0.25 * 0.75);
    for (int v : items) {
        CHECK(std::abs(counts[v] - expect) < 4.0 * se);
    }
}
