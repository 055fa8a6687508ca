#pragma once

#include <span>
#include <vector>

#include "advfl/client.hpp"
#include "advfl/model_vector.hpp"
#include "advfl/rng.hpp"

namespace advfl {

/// theta_t + beta * sum_{i in S_t} w_i delta_i. `weights` is indexed by client
/// id and holds the global w_i; nothing is renormalized over S_t.
/// `updates` must be non-empty and sorted by ascending client id.
ModelVector amplified_mean(const ModelVector& theta_t, std::span<const LocalUpdate> updates,
                           std::span<const double> weights, double beta);

/// Per-client store of the most recent update direction.
class UpdateCache {
public:
    UpdateCache() = default;
    UpdateCache(int clients, std::size_t dim);

    void write(int client, ModelVector direction);
    /// Throws std::logic_error if the slot was never written.
    const ModelVector& read(int client) const;
    bool initialized(int client) const { return initialized_.at(client); }
    bool all_initialized() const;
    int size() const { return static_cast<int>(slots_.size()); }

private:
    std::vector<ModelVector> slots_;
    std::vector<bool> initialized_;
};

/// MIFA step: active clients refresh their slot with G^i = -delta_i / eta_t,
/// then theta_{t+1} = theta_t - eta_t sum_{i=1}^M w_i G^i over every slot.
ModelVector mifa_update(const ModelVector& theta_t, UpdateCache& cache, std::span<const LocalUpdate> active, double eta_t,
                        std::span<const double> weights);

struct CClipConfig {
    double tau = 100.0;  // 10 / (1 - beta0) with beta0 = 0.9
    int iters = 1;
};

/// v_{l+1} = v_l + sum_i w_i (x_i - v_l) min(1, tau / ||x_i - v_l||), iterated `iters` times.
ModelVector cclip(std::span<const ModelVector> points, std::span<const double> weights, const ModelVector& v0, double tau,
                  int iters);

struct GeoMedianConfig {
    double smoothing = 1e-6;
    double tol = 1e-10;
    int max_iter = 1000;
};

struct GeoMedianResult {
    ModelVector point;
    int iterations = 0;
    bool converged = false;
};

/// Smoothed Weiszfeld iteration started at the weighted mean; distances are
/// floored at `smoothing`.
GeoMedianResult geometric_median(std::span<const ModelVector> points, std::span<const double> weights, double smoothing,
                                 double tol, int max_iter);

/// Weighted objective sum_i w_i ||x_i - v||.
double weighted_distance_sum(std::span<const ModelVector> points, std::span<const double> weights, const ModelVector& v);

struct Buckets {
    std::vector<ModelVector> means;
    std::vector<double> weights;
};

/// Random permutation split into `num_buckets` contiguous groups; each bucket is
/// its weight-normalized mean carrying the group's total weight.
Buckets bucketize(std::span<const ModelVector> points, std::span<const double> weights, int num_buckets, Rng& rng);

}  // namespace advfl
