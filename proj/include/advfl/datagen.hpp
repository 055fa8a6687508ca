#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advfl/model_vector.hpp"
#include "advfl/objectives.hpp"
#include "advfl/rng.hpp"

namespace advfl {

struct FederationInstance {
    std::vector<ClientSpec> clients;
    int M = 0;
    long N = 0;
    int dim = 0;
    HeterogeneityProfile profile;
    std::optional<ModelVector> optimum;
    /// Seed of the fixed per-client evaluation batches (softmax instances only).
    std::uint64_t eval_seed = 0;

    /// Recomputes N and w_i = n_i / N from the client volumes.
    void normalize_weights();
    void validate() const;
    bool analytic() const;
};

/// grad F(theta) = sum_i w_i grad F_i(theta). Analytic instances only.
ModelVector global_gradient(const FederationInstance& inst, const ModelVector& theta);

/// Synthetic(alpha, beta) federated softmax dataset. Volumes n_i = ceil(x),
/// x ~ Pareto(shape, scale), clipped to [min_n, max_n].
struct VolumeLaw {
    double shape = 1.5;
    double scale = 10.0;
    long min_n = 10;
    long max_n = 1000;
};
FederationInstance synthetic_ab(double alpha, double beta, int M, Rng& rng, const VolumeLaw& law = {});

/// Isotropic quadratics with common curvature L whose centers have weighted
/// variance G^2 / L^2 about their weighted mean, so (B, G) = (1, G) holds
/// with equality everywhere. `volumes` are the n_i (empty: all equal).
FederationInstance quadratic_family(int M, double L, double G, double sigma, std::span<const long> volumes, Rng& rng,
                                    int dim = 20, double center_scale = 1.0);

enum class LowerBoundVariant { StaticHetero, RandomNoisy };

struct LowerBoundPair {
    FederationInstance homogeneous;
    FederationInstance heterogeneous;
    std::vector<int> hidden_set;  // StaticHetero: clients using f every round
    int keep = 0;                 // floor((1 - eps) M)
    LowerBoundVariant variant = LowerBoundVariant::StaticHetero;
    ModelVector u;
    double L = 1.0;
    double eps = 0.0;
};

LowerBoundPair lower_bound_pair(LowerBoundVariant variant, int M, double eps, double G, double sigma, double L,
                                int dim = 20);

/// floor((1 - eps) * M), robust to representation error in eps.
int keep_count(double eps, int M);

nlohmann::json instance_to_json(const FederationInstance& inst);
FederationInstance instance_from_json(const nlohmann::json& j);

std::string variant_name(LowerBoundVariant v);
LowerBoundVariant parse_variant(const std::string& s);

}  // namespace advfl
