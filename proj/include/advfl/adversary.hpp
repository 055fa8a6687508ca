#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advfl/datagen.hpp"
#include "advfl/model_vector.hpp"
#include "advfl/objectives.hpp"
#include "advfl/rng.hpp"

namespace advfl {

/// Per-round cap on silenced data volume: sum_{dropped} n_i <= eps K N / M.
struct DropoutBudget {
    double eps = 0.0;
    int K = 1;
    int M = 1;
    long N = 1;
    double threshold = 0.0;

    static DropoutBudget make(double eps, int K, int M, long N);
    /// Comparison carries a 1e-9 absolute slack for eps values such as 0.7
    /// whose products are not exactly representable.
    bool allows(double dropped_volume) const;
    /// eps_t = dropped volume / (K N / M).
    double realized(double dropped_volume) const;
};

enum class AdversaryKind { None, Static, Random, Shadow, Oracle };

std::string adversary_name(AdversaryKind k);
AdversaryKind parse_adversary(const std::string& s);

struct ShadowCandidates {
    std::vector<int> C1;
    std::vector<int> C2;
    int T1 = 5;
    int T2 = 150;

    bool contains(int client) const;
    std::vector<int> all() const;
};

struct AdversaryConfig {
    AdversaryKind kind = AdversaryKind::None;
    double eps = 0.0;
    std::vector<int> keep_set;  // Static: clients never silenced (ascending)
    ShadowCandidates candidates;
};

/// Everything the adversary observes in round t.
struct AdversaryContext {
    const FederationInstance* instance = nullptr;
    int round = 0;
    std::span<const int> sampled;               // S~_t, ascending
    std::span<const ModelVector> gradients;     // grad l_{i,t}(theta_t), aligned with `sampled`
    NoiseSource noise;                          // realizations of the round's data
};

/// Returns S_t (ascending). The result always satisfies the budget and |S_t| >= 1.
std::vector<int> select_dropouts(const AdversaryConfig& cfg, const DropoutBudget& budget, const AdversaryContext& ctx,
                                 Rng& rng);

/// Silences, in the given order, every listed client whose removal keeps the
/// dropped volume within budget, never emptying the set.
std::vector<int> drop_in_order(std::span<const int> sampled, std::span<const int> drop_order,
                               const FederationInstance& inst, const DropoutBudget& budget);

/// Random scan of S~_t silencing members of C while the budget allows;
/// stops once a single client would remain.
std::vector<int> shadow_select(std::span<const int> sampled, const ShadowCandidates& candidates,
                               const FederationInstance& inst, const DropoutBudget& budget, Rng& rng);

/// Exhaustive worst drop-set: maximizes ||sum_{i in D} w_i g_i|| over budget-
/// feasible D that leave at least one client. Needs |S~_t| <= 20.
std::vector<int> worst_case_subset(std::span<const int> sampled, std::span<const ModelVector> gradients,
                                   const FederationInstance& inst, const DropoutBudget& budget);

/// Clients with the largest ||c_i - theta*|| among quadratic clients, `count` of them,
/// returned as the complementary keep set (ascending).
std::vector<int> farthest_center_keep_set(const FederationInstance& inst, int drop_count);

struct ShadowConfig {
    int T1 = 5;
    int T2 = 150;
    int K1 = 25;
    int K2 = 10;
    std::uint64_t seed_a = 0;
    std::uint64_t seed_b = 0;
    int horizon = 0;  // shadow run length; 0 means T2 + 1
};

struct RunConfig;

/// Runs the FedAvg and cclip shadow experiments (full participation, their own
/// seeds) and ranks clients by the change of their round signal between T1 and T2.
ShadowCandidates build_shadow_candidates(const FederationInstance& inst, const RunConfig& base, const ShadowConfig& cfg);

/// Indices of the `k` largest scores, ties by ascending id, restricted to `eligible`.
std::vector<int> top_k(std::span<const double> scores, int k, std::span<const int> eligible);

}  // namespace advfl
