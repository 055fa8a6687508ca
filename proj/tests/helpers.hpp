#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "advfl/aggregation.hpp"
#include "advfl/client.hpp"
#include "advfl/datagen.hpp"
#include "advfl/objectives.hpp"
#include "advfl/rng.hpp"

namespace testutil {

inline advfl::RoundLoss quad_loss(double L, advfl::ModelVector center, int client = 0, int round = 0) {
    advfl::RoundLoss loss;
    loss.client_id = client;
    loss.round = round;
    loss.realization = advfl::QuadraticRealized{L, std::move(center)};
    return loss;
}

inline advfl::ModelVector randn(advfl::Rng& rng, std::size_t d, double scale = 1.0) {
    advfl::ModelVector v(d);
    for (double& x : v) x = scale * advfl::std_normal(rng);
    return v;
}

inline advfl::SoftmaxRegression random_model(advfl::Rng& rng) {
    advfl::SoftmaxRegression m;
    m.weights = randn(rng, advfl::kClasses * advfl::kFeatures).coords();
    m.bias = randn(rng, advfl::kClasses).coords();
    m.feature_mean = randn(rng, advfl::kFeatures).coords();
    return m;
}

inline advfl::RoundLoss softmax_loss(advfl::Rng& rng, int n) {
    advfl::RoundLoss loss;
    loss.realization = advfl::draw_softmax_batch(random_model(rng), n, rng());
    return loss;
}

inline advfl::FederationInstance balanced_quadratic(int M, double G, double sigma, std::uint64_t seed, int d = 20) {
    advfl::Rng rng(seed);
    return advfl::quadratic_family(M, 1.0, G, sigma, {}, rng, d);
}

inline advfl::LocalUpdate update_from_delta(int id, const advfl::ModelVector& theta, const advfl::ModelVector& delta) {
    advfl::LocalUpdate u;
    u.client_id = id;
    u.delta = delta;
    u.new_model = theta + delta;
    return u;
}

// brute force over an n x n grid on [0,1]^2
inline advfl::ModelVector grid_median(std::span<const advfl::ModelVector> pts, std::span<const double> w, int n) {
    double best = std::numeric_limits<double>::infinity();
    advfl::ModelVector arg{0.0, 0.0};
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const advfl::ModelVector v{a / double(n - 1), b / double(n - 1)};
            const double f = advfl::weighted_distance_sum(pts, w, v);
            if (f < best) {
                best = f;
                arg = v;
            }
        }
    return arg;
}

}  // namespace testutil
