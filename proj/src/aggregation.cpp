#include "advfl/aggregation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace advfl {

namespace {

void check_points(std::span<const ModelVector> points, std::span<const double> weights, const char* who) {
    if (points.empty()) throw std::invalid_argument(std::string(who) + ": no points");
    if (points.size() != weights.size()) throw std::invalid_argument(std::string(who) + ": points/weights size mismatch");
    for (const auto& p : points) require_same_dim(p, points.front(), who);
}

}  // namespace

ModelVector amplified_mean(const ModelVector& theta_t, std::span<const LocalUpdate> updates,
                           std::span<const double> weights, double beta) {
    if (updates.empty()) throw std::invalid_argument("amplified_mean: empty participating set");
    if (!(beta > 0.0)) throw std::invalid_argument("amplified_mean: beta must be > 0");
    ModelVector sum(theta_t.size(), 0.0);
    int prev = -1;
    for (const auto& up : updates) {
        if (up.client_id <= prev) throw std::invalid_argument("amplified_mean: updates not in ascending client order");
        prev = up.client_id;
        axpy(weights[up.client_id], up.delta, sum);
    }
    ModelVector next = theta_t;
    axpy(beta, sum, next);
    return next;
}

UpdateCache::UpdateCache(int clients, std::size_t dim)
    : slots_(clients, ModelVector(dim, 0.0)), initialized_(clients, false) {}

void UpdateCache::write(int client, ModelVector direction) {
    slots_.at(client) = std::move(direction);
    initialized_.at(client) = true;
}

const ModelVector& UpdateCache::read(int client) const {
    if (!initialized_.at(client))
        throw std::logic_error("update cache: slot of client " + std::to_string(client) + " read before first write");
    return slots_[client];
}

bool UpdateCache::all_initialized() const {
    return std::all_of(initialized_.begin(), initialized_.end(), [](bool b) { return b; });
}

ModelVector mifa_update(const ModelVector& theta_t, UpdateCache& cache, std::span<const LocalUpdate> active, double eta_t,
                        std::span<const double> weights) {
    if (!(eta_t > 0.0)) throw std::invalid_argument("mifa_update: eta must be > 0");
    for (const auto& up : active) cache.write(up.client_id, (-1.0 / eta_t) * up.delta);
    ModelVector sum(theta_t.size(), 0.0);
    for (int i = 0; i < cache.size(); ++i) axpy(weights[i], cache.read(i), sum);
    ModelVector next = theta_t;
    axpy(-eta_t, sum, next);
    return next;
}

ModelVector cclip(std::span<const ModelVector> points, std::span<const double> weights, const ModelVector& v0, double tau,
                  int iters) {
    check_points(points, weights, "cclip");
    if (iters < 1) throw std::invalid_argument("cclip: iters must be >= 1");
    if (!(tau > 0.0)) throw std::invalid_argument("cclip: tau must be > 0");
    require_same_dim(points.front(), v0, "cclip");
    ModelVector v = v0;
    ModelVector step(v.size());
    for (int l = 0; l < iters; ++l) {
        std::fill(step.begin(), step.end(), 0.0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dist = std::sqrt(dist_sq(points[i], v));
            const double factor = dist > tau ? tau / dist : 1.0;
            const double c = weights[i] * factor;
            for (std::size_t k = 0; k < v.size(); ++k) step[k] += c * (points[i][k] - v[k]);
        }
        v += step;
    }
    return v;
}

double weighted_distance_sum(std::span<const ModelVector> points, std::span<const double> weights, const ModelVector& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * std::sqrt(dist_sq(points[i], v));
    return s;
}

GeoMedianResult geometric_median(std::span<const ModelVector> points, std::span<const double> weights, double smoothing,
                                 double tol, int max_iter) {
    check_points(points, weights, "geometric_median");
    if (!(smoothing > 0.0)) throw std::invalid_argument("geometric_median: smoothing must be > 0");
    if (max_iter < 1) throw std::invalid_argument("geometric_median: max_iter must be >= 1");

    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    GeoMedianResult res;
    res.point = ModelVector(points.front().size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) axpy(weights[i] / wsum, points[i], res.point);

    ModelVector next(res.point.size());
    for (int it = 1; it <= max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        double denom = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double beta = weights[i] / std::max(std::sqrt(dist_sq(points[i], res.point)), smoothing);
            axpy(beta, points[i], next);
            denom += beta;
        }
        next *= 1.0 / denom;
        const double moved = std::sqrt(dist_sq(next, res.point));
        std::swap(res.point, next);
        res.iterations = it;
        if (moved <= tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

Buckets bucketize(std::span<const ModelVector> points, std::span<const double> weights, int num_buckets, Rng& rng) {
    check_points(points, weights, "bucketize");
    const int n = static_cast<int>(points.size());
    if (num_buckets < 1 || num_buckets > n)
        throw std::invalid_argument("bucketize: need 1 <= buckets <= points (got " + std::to_string(num_buckets) + " for " +
                                    std::to_string(n) + " points)");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Buckets out;
    const int base = n / num_buckets;
    const int extra = n % num_buckets;
    int pos = 0;
    for (int b = 0; b < num_buckets; ++b) {
        const int len = base + (b < extra ? 1 : 0);
        double w = 0.0;
        ModelVector mean(points.front().size(), 0.0);
        for (int k = pos; k < pos + len; ++k) {
            w += weights[order[k]];
            axpy(weights[order[k]], points[order[k]], mean);
        }
        if (w > 0.0) mean *= 1.0 / w;
        out.means.push_back(std::move(mean));
        out.weights.push_back(w);
        pos += len;
    }
    return out;
}

}  // namespace advfl
