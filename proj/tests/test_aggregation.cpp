#include <doctest.h>

#include <cmath>

#include "advfl/aggregation.hpp"
#include "helpers.hpp"

using namespace advfl;

using testutil::grid_median;
using testutil::update_from_delta;

TEST_SUITE("aggregation") {

TEST_CASE("amplified mean") {
    const ModelVector theta{1.0, 2.0};
    const ModelVector delta{0.5, -0.25};
    const std::vector<double> w{0.25, 0.25, 0.5};
    std::vector<LocalUpdate> all;
    for (int i = 0; i < 3; ++i) all.push_back(update_from_delta(i, theta, delta));
    CHECK(amplified_mean(theta, all, w, 1.0) == theta + delta);

    std::vector<LocalUpdate> zeros;
    for (int i = 0; i < 3; ++i) zeros.push_back(update_from_delta(i, theta, ModelVector(2, 0.0)));
    CHECK(amplified_mean(theta, zeros, w, 7.5) == theta);

    // no renormalization over S_t
    const std::vector<LocalUpdate> one{update_from_delta(2, theta, delta)};
    const ModelVector got = amplified_mean(theta, one, w, 2.0);
    CHECK(got[0] == doctest::Approx(1.0 + 2.0 * 0.5 * 0.5));
    CHECK(got[1] == doctest::Approx(2.0 - 2.0 * 0.5 * 0.25));

    CHECK_THROWS(amplified_mean(theta, std::vector<LocalUpdate>{}, w, 1.0));
    std::vector<LocalUpdate> unordered{update_from_delta(1, theta, delta), update_from_delta(0, theta, delta)};
    CHECK_THROWS(amplified_mean(theta, unordered, w, 1.0));
}

TEST_CASE("amplified mean is linear in the deltas") {
    Rng rng(1);
    const ModelVector theta = testutil::randn(rng, 5);
    const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
    std::vector<LocalUpdate> base, scaled;
    for (int i = 0; i < 4; ++i) {
        const ModelVector d = testutil::randn(rng, 5);
        base.push_back(update_from_delta(i, theta, d));
        scaled.push_back(update_from_delta(i, theta, 3.0 * d));
    }
    const ModelVector a = amplified_mean(theta, base, w, 2.5);
    const ModelVector b = amplified_mean(theta, scaled, w, 2.5);
    const ModelVector expect = theta + 3.0 * (a - theta);
    for (int j = 0; j < 5; ++j) CHECK(b[j] == doctest::Approx(expect[j]).epsilon(1e-13));
}

TEST_CASE("MIFA cache replay over a scripted availability pattern") {
    const int M = 6, T = 100;
    const double eta = 0.05;
    const std::vector<double> w{0.1, 0.1, 0.2, 0.2, 0.15, 0.25};
    Rng rng(2);
    UpdateCache cache(M, 3);
    std::vector<ModelVector> last(M);  // oracle: most recent direction per client
    ModelVector theta(3, 0.0);
    for (int t = 0; t < T; ++t) {
        std::vector<LocalUpdate> active;
        for (int i = 0; i < M; ++i) {
            // everyone at t = 0, then client i shows up when (t * (i + 2)) % 7 < 3
            if (t == 0 || (t * (i + 2)) % 7 < 3) {
                const ModelVector d = testutil::randn(rng, 3);
                active.push_back(update_from_delta(i, theta, d));
                last[i] = (-1.0 / eta) * d;
            }
        }
        ModelVector expect = theta;
        for (int i = 0; i < M; ++i) axpy(-eta * w[i], last[i], expect);
        const ModelVector next = mifa_update(theta, cache, active, eta, w);
        for (int i = 0; i < M; ++i) REQUIRE(cache.read(i) == last[i]);
        for (int j = 0; j < 3; ++j) CHECK(next[j] == doctest::Approx(expect[j]).epsilon(1e-12));
        theta = next;
    }
}

TEST_CASE("MIFA semantics") {
    const std::vector<double> w{0.5, 0.5};
    const ModelVector theta{1.0, 1.0};
    UpdateCache fresh(2, 2);
    CHECK_THROWS_AS(mifa_update(theta, fresh, std::vector<LocalUpdate>{update_from_delta(0, theta, ModelVector{1.0, 0.0})}, 0.1, w),
                    std::logic_error);

    // full participation equals the averaged step
    UpdateCache cache(2, 2);
    std::vector<LocalUpdate> both{update_from_delta(0, theta, ModelVector{-0.1, 0.0}), update_from_delta(1, theta, ModelVector{0.0, -0.3})};
    const ModelVector full = mifa_update(theta, cache, both, 0.1, w);
    CHECK(full[0] == doctest::Approx(0.95));
    CHECK(full[1] == doctest::Approx(0.85));

    // stale slot is reused bit for bit
    const ModelVector before = cache.read(1);
    mifa_update(theta, cache, std::vector<LocalUpdate>{update_from_delta(0, theta, ModelVector{0.2, 0.2})}, 0.1, w);
    CHECK(cache.read(1) == before);

    UpdateCache zero(2, 2);
    std::vector<LocalUpdate> still{update_from_delta(0, theta, ModelVector(2, 0.0)), update_from_delta(1, theta, ModelVector(2, 0.0))};
    CHECK(mifa_update(theta, zero, still, 0.1, w) == theta);
}

TEST_CASE("cclip") {
    Rng rng(3);
    std::vector<ModelVector> pts;
    const std::vector<double> w{0.2, 0.3, 0.5};
    for (int i = 0; i < 3; ++i) pts.push_back(testutil::randn(rng, 4));
    const ModelVector v0 = testutil::randn(rng, 4);
    ModelVector mean(4, 0.0);
    for (int i = 0; i < 3; ++i) axpy(w[i], pts[i], mean);
    const ModelVector got = cclip(pts, w, v0, 1e6, 1);
    CHECK(norm(got - mean) <= 1e-12);

    const std::vector<ModelVector> single{ModelVector{3.0, -1.0}};
    const std::vector<double> w1{1.0};
    CHECK(norm(cclip(single, w1, ModelVector{0.0, 0.0}, 100.0, 1) - single[0]) <= 1e-15);

    // clipped terms are bounded by tau
    const std::vector<ModelVector> far{ModelVector{1e200, 0.0}, ModelVector{0.0, -1e200}};
    const std::vector<double> w2{0.5, 0.5};
    const ModelVector clipped = cclip(far, w2, ModelVector{0.0, 0.0}, 100.0, 5);
    CHECK(clipped.all_finite());
    CHECK(norm(cclip(far, w2, ModelVector{0.0, 0.0}, 100.0, 1)) <= 100.0 + 1e-9);

    // zero distance: factor 1, no division
    const std::vector<ModelVector> same{ModelVector{1.0, 1.0}};
    CHECK(cclip(same, w1, ModelVector{1.0, 1.0}, 100.0, 3) == ModelVector{1.0, 1.0});
    CHECK(CClipConfig{}.tau == doctest::Approx(100.0));
}

TEST_CASE("geometric median") {
    const std::vector<double> w3{1.0, 1.0, 1.0};
    const std::vector<ModelVector> line{ModelVector{0.0}, ModelVector{1.0}, ModelVector{2.0}};
    CHECK(geometric_median(line, w3, 1e-6, 1e-12, 5000).point[0] == doctest::Approx(1.0).epsilon(1e-6));

    const std::vector<ModelVector> same{ModelVector{0.3, 0.4}, ModelVector{0.3, 0.4}, ModelVector{0.3, 0.4}};
    const auto s = geometric_median(same, w3, 1e-6, 1e-10, 100);
    CHECK(s.iterations == 1);
    CHECK(s.converged);
    CHECK(norm(s.point - same[0]) <= 1e-15);

    const std::vector<ModelVector> tri{ModelVector{0.0, 0.0}, ModelVector{1.0, 0.0}, ModelVector{0.0, 1.0}};
    const auto gm = geometric_median(tri, w3, 1e-6, 1e-10, 1000);
    const ModelVector oracle = grid_median(tri, w3, 400);
    CHECK(std::abs(gm.point[0] - oracle[0]) <= 5e-3);
    CHECK(std::abs(gm.point[1] - oracle[1]) <= 5e-3);
    CHECK(weighted_distance_sum(tri, w3, gm.point) <= weighted_distance_sum(tri, w3, oracle) + 1e-9);

    const auto capped = geometric_median(tri, w3, 1e-6, 0.0, 3);
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 3);
}

TEST_CASE("geometric median objective vs grid on random small instances") {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        std::uniform_int_distribution<int> count(2, 5);
        const int n = count(rng);
        std::vector<ModelVector> pts;
        std::vector<double> w;
        for (int i = 0; i < n; ++i) {
            pts.push_back(ModelVector{uniform01(rng), uniform01(rng)});
            w.push_back(0.5 + uniform01(rng));
        }
        const auto gm = geometric_median(pts, w, 1e-6, 1e-10, 2000);
        const ModelVector oracle = grid_median(pts, w, 400);
        // the grid is a 1/399 lattice; its optimum is within half a cell diagonal
        CHECK(weighted_distance_sum(pts, w, gm.point) <= weighted_distance_sum(pts, w, oracle) + 1e-9);
    }
}

TEST_CASE("bucketize") {
    Rng rng(5);
    std::vector<ModelVector> pts;
    std::vector<double> w{0.1, 0.4, 0.2, 0.3, 0.5};
    for (int i = 0; i < 5; ++i) pts.push_back(testutil::randn(rng, 3));

    Rng r1(6);
    const auto one = bucketize(pts, w, 1, r1);
    REQUIRE(one.means.size() == 1);
    ModelVector mean(3, 0.0);
    for (int i = 0; i < 5; ++i) axpy(w[i] / 1.5, pts[i], mean);
    CHECK(norm(one.means[0] - mean) <= 1e-12);
    CHECK(one.weights[0] == doctest::Approx(1.5));

    Rng r2(7);
    const auto each = bucketize(pts, w, 5, r2);
    for (int b = 0; b < 5; ++b) {
        bool found = false;
        for (int i = 0; i < 5; ++i) found = found || (norm(each.means[b] - pts[i]) <= 1e-15 && each.weights[b] == w[i]);
        CHECK(found);
    }

    Rng r3(8);
    const auto two = bucketize(pts, w, 2, r3);
    CHECK(two.weights[0] + two.weights[1] == doctest::Approx(1.5));
    Rng r4(9);
    CHECK_THROWS(bucketize(pts, w, 6, r4));
}

}
