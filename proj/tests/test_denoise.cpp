#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pld/denoise.hpp"

using namespace pld;

TEST_CASE("rce_weight values") {
    CHECK(rce_weight(0.0, 1.0) == 1.0);
    CHECK(rce_weight(std::log(2.0), 1.0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(rce_weight(1.0, 2.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(rce_weight(1.0, 2.0) == Catch::Approx(0.135335).margin(1e-6));

    SECTION("in (0, 1], strictly decreasing") {
        double prev = rce_weight(0.0, 1.5);
        CHECK(prev == 1.0);
        for (double l = 0.25; l < 20.0; l += 0.25) {
            double w = rce_weight(l, 1.5);
            CHECK(w > 0.0);
            CHECK(w < prev);
            prev = w;
        }
    }
    SECTION("rejects bad inputs") {
        CHECK_THROWS(rce_weight(-0.1, 1.0));
        CHECK_THROWS(rce_weight(1.0, 0.0));
    }
}

TEST_CASE("tce_drop_rate ramps linearly") {
    TruncateSchedule sched{0.4, 10};
    CHECK(tce_drop_rate(0, sched) == 0.0);
    CHECK(tce_drop_rate(5, sched) == Catch::Approx(0.2));
    CHECK(tce_drop_rate(10, sched) == Catch::Approx(0.4));
    CHECK(tce_drop_rate(25, sched) == Catch::Approx(0.4)); // capped at max
}

TEST_CASE("tce_mask closed cases") {
    SECTION("max_drop_rate=0 keeps everything") {
        TruncateSchedule sched{0.0, 1};
        std::vector<double> losses{5.0, 1.0, 3.0};
        auto keep = tce_mask(losses, 100, sched);
        CHECK(std::count(keep.begin(), keep.end(), 1) == 3);
    }
    SECTION("losses [1,3,2,4] at rate 0.5 keep the two smallest") {
        TruncateSchedule sched{0.5, 1};
        std::vector<double> losses{1.0, 3.0, 2.0, 4.0};
        auto keep = tce_mask(losses, 1, sched); // epoch >= ramp -> full rate
        CHECK(keep == std::vector<char>{1, 0, 1, 0});
    }
    SECTION("ties keep the lower index first") {
        TruncateSchedule sched{0.5, 1};
        std::vector<double> losses{2.0, 2.0, 2.0, 2.0};
        auto keep = tce_mask(losses, 1, sched);
        CHECK(keep == std::vector<char>{1, 1, 0, 0});
    }
    SECTION("empty batch is an error") {
        TruncateSchedule sched{0.1, 1};
        std::vector<double> none;
        CHECK_THROWS(tce_mask(none, 1, sched));
    }
}

TEST_CASE("tce_mask matches a full-sort oracle on a random batch") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> loss(0.0, 100.0);
    std::vector<double> losses(1000);
    for (auto& l : losses) l = loss(rng);

    TruncateSchedule sched{0.1, 1};
    auto keep = tce_mask(losses, 1, sched);

    std::vector<size_t> order(losses.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (losses[a] != losses[b]) return losses[a] > losses[b];
        return a > b;
    });
    std::vector<char> expect(losses.size(), 1);
    for (size_t i = 0; i < 100; ++i) expect[order[i]] = 0; // ceil(0.1 * 1000)
    CHECK(keep == expect);
}

TEST_CASE("tce_mask keeps exactly B - ceil(rB), kept <= dropped") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> loss(0.0, 10.0);
    TruncateSchedule sched{0.3, 4};
    for (int rep = 0; rep < 30; ++rep) {
        const size_t B = 1 + rng() % 200;
        std::vector<double> losses(B);
        for (auto& l : losses) l = loss(rng);
        const int epoch = 1 + static_cast<int>(rng() % 8);
        auto keep = tce_mask(losses, epoch, sched);
        const double r = tce_drop_rate(epoch, sched);
        const auto dropped = static_cast<size_t>(std::ceil(r * static_cast<double>(B)));
        CHECK(static_cast<size_t>(std::count(keep.begin(), keep.end(), 0)) == dropped);

        double max_kept = -1e300, min_dropped = 1e300;
        for (size_t i = 0; i < B; ++i) {
            if (keep[i]) max_kept = std::max(max_kept, losses[i]);
            else min_dropped = std::min(min_dropped, losses[i]);
        }
        if (dropped > 0 && dropped < B) {
            CHECK(max_kept <= min_dropped);
        }
    }
}
