#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advfl/adversary.hpp"
#include "advfl/aggregation.hpp"
#include "advfl/client.hpp"
#include "advfl/datagen.hpp"
#include "advfl/parallel.hpp"
#include "advfl/rng.hpp"

namespace advfl {

enum class Algorithm { FedAvg, FedProx, Mifa, CClip, GM, CClipBucket, GMBucket };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& s);
/// cclip, gm and their bucketing variants run momentum workers with s = 1.
bool uses_momentum(Algorithm a);

struct Schedule {
    enum class Kind { Constant, InvSqrt, InvLinear };
    Kind kind = Kind::Constant;
    double eta0 = 0.01;    // Constant, InvSqrt
    double theta0 = 1.0;   // InvLinear numerator
    double gamma = 1.0;    // InvLinear offset

    void validate() const;
};

double learning_rate(const Schedule& sched, int t);

/// Step-size cap for FedAvg under (B, G): 1/(10 beta s L B^2) min 1/(beta sqrt(p L T)(G + sigma)).
/// T = 0 selects the horizon-free form used with eta0 / sqrt(t + 1).
double corollary_eta0(const HeterogeneityProfile& profile, double beta, int s, double p, int T = 0);

struct AdversarySettings {
    AdversaryKind kind = AdversaryKind::None;
    double eps = 0.0;
    /// Static keep set: "prefix" keeps clients 0..floor((1-eps)M)-1, "farthest"
    /// silences the clients whose centers are farthest from theta*, "explicit" uses keep_set.
    std::string static_set = "prefix";
    std::vector<int> keep_set;
    ShadowConfig shadow;
    /// Prebuilt candidates; built from `shadow` on demand when absent.
    std::optional<ShadowCandidates> candidates;
};

struct RunConfig {
    Algorithm algorithm = Algorithm::FedAvg;
    double beta = 1.0;
    int s = 1;
    Schedule schedule;
    int T = 100;
    int K = 1;
    AdversarySettings adversary;
    std::uint64_t master_seed = 0;

    InnerSolverConfig prox_inner;
    double momentum_beta0 = kDefaultMomentum;
    CClipConfig cclip;
    GeoMedianConfig gm;
    int buckets = 2;
    ExecPolicy exec = ExecPolicy::Parallel;
    std::optional<ModelVector> theta0;

    /// Checks invariants against the instance; throws std::invalid_argument.
    void validate(const FederationInstance& inst) const;
    /// s actually used by local workers (forced to 1 for prox and momentum workers).
    int effective_s() const;
};

struct RoundLog {
    int t = 0;
    double grad_norm_sq = 0.0;
    std::optional<double> dist_sq;
    double eps_realized = 0.0;
    std::vector<int> sampled;
    std::vector<int> participating;
    double train_loss = 0.0;
    double eta = 0.0;
};

nlohmann::json round_log_to_json(const RoundLog& log);

struct RunResult {
    std::vector<RoundLog> trajectory;
    ModelVector theta_final;
    ModelVector theta_R;
    int R = 0;
    bool mifa_round0_exempt = false;
    double max_prox_residual = 0.0;
    int gm_nonconverged = 0;
};

/// What a client produced in one round.
struct ClientRoundResult {
    LocalUpdate update;
    ModelVector first_gradient;  // grad l_{i,t}(theta_t)
    RoundLoss loss;
};

struct RoundObservation {
    int t = 0;
    double eta = 0.0;
    const ModelVector* theta = nullptr;
    std::span<const int> sampled;
    std::span<const int> participating;
    std::span<const ClientRoundResult> results;  // aligned with `sampled`
};

using RoundObserver = std::function<void(const RoundObservation&)>;

/// Population quantities at theta: analytic gradients for quadratic kinds,
/// a full pass over fixed evaluation batches for softmax instances.
class PopulationEvaluator {
public:
    explicit PopulationEvaluator(const FederationInstance& inst);

    struct Metrics {
        double grad_norm_sq = 0.0;
        std::optional<double> dist_sq;
        double train_loss = 0.0;
    };
    Metrics operator()(const ModelVector& theta) const;
    ModelVector gradient(const ModelVector& theta) const;

private:
    const FederationInstance* inst_;
    std::vector<RoundLoss> eval_;
};

PopulationEvaluator::Metrics population_metrics(const FederationInstance& inst, const ModelVector& theta);

/// Uniform K-subset of [0, M), ascending.
std::vector<int> sample_clients(int M, int K, Rng& rng);

/// R in {0..T} with P[R = k] proportional to eta_k.
int random_stop(const Schedule& sched, int T, Rng& rng);

/// Local computation of every sampled client (parallel or serial reference).
std::vector<ClientRoundResult> compute_local_round(const FederationInstance& inst, const RunConfig& cfg,
                                                   std::span<const int> sampled, int t, double eta,
                                                   const ModelVector& theta, std::span<const ModelVector> momenta,
                                                   ExecPolicy policy);

RunResult run(const FederationInstance& inst, const RunConfig& cfg, const RoundObserver& observer = {});

/// Mean of `metric` over the last `fraction` of rounds.
double tail_mean(std::span<const RoundLog> traj, double fraction, bool use_dist);

}  // namespace advfl
