#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "advfl/model_vector.hpp"

namespace advfl {

/// Softmax regression shape used by the Synthetic(alpha, beta) family.
inline constexpr int kClasses = 10;
inline constexpr int kFeatures = 60;
/// Model layout: W (kClasses x kFeatures, row-major) followed by b (kClasses).
inline constexpr int kSoftmaxDim = kClasses * kFeatures + kClasses;

struct HeterogeneityProfile {
    double B = 1.0;
    double G = 0.0;
    double sigma = 0.0;
    double L = 1.0;
    double mu = 0.0;
    double L_minus = 0.0;

    void validate() const;
};

// ---- client objective kinds -------------------------------------------------

/// F_i(theta) = (L/2) ||theta - center||^2
struct IsotropicQuadratic {
    double curvature = 1.0;
    ModelVector center;
};

/// g(theta) = (L/2) ||theta + shift/L||^2, i.e. grad g = L theta + shift.
struct ShiftedQuadratic {
    double curvature = 1.0;
    ModelVector shift;
};

/// Lower-bound noisy instance: every round a uniformly random subset of
/// `keep` of the `clients` clients uses f(theta) = (L/2)||theta||^2, the rest use g.
/// The subset is shared by all clients in the round (see round_keep_set).
struct SwitchedQuadratic {
    double curvature = 1.0;
    ModelVector shift;
    int keep = 0;
    int clients = 0;
};

/// Generative model of one Synthetic client. Labels are argmax(W x + b),
/// features x ~ N(feature_mean, diag(j^-1.2)).
struct SoftmaxRegression {
    std::vector<double> weights;       // kClasses * kFeatures
    std::vector<double> bias;          // kClasses
    std::vector<double> feature_mean;  // kFeatures
};

using ObjectiveKind = std::variant<IsotropicQuadratic, ShiftedQuadratic, SwitchedQuadratic, SoftmaxRegression>;

struct ClientObjective {
    ObjectiveKind kind;
    double sigma = 0.0;  // per-round gradient noise level sigma_i
};

struct ClientSpec {
    int id = 0;
    long n = 1;          // data points drawn per round
    double weight = 0;   // n / N
    ClientObjective objective;
};

/// Diagonal of the Synthetic feature covariance, Sigma_jj = j^-1.2 (1-based j).
double feature_variance(int j_one_based);

// ---- per-round realizations -------------------------------------------------

struct QuadraticRealized {
    double curvature = 1.0;
    ModelVector center;  // effective center, noise already folded in
};

struct EmpiricalBatch {
    int n = 0;
    std::vector<double> features;  // n * kFeatures, row-major
    std::vector<int> labels;       // n entries in [0, kClasses)
};

/// The realized local loss l_{i,t}; drawn once per round and then only read.
struct RoundLoss {
    int client_id = 0;
    int round = 0;
    std::variant<QuadraticRealized, EmpiricalBatch> realization;

    std::size_t dim() const;
    bool is_quadratic() const { return std::holds_alternative<QuadraticRealized>(realization); }
};

double value(const RoundLoss& loss, const ModelVector& theta);
ModelVector gradient(const RoundLoss& loss, const ModelVector& theta);
void gradient_into(const RoundLoss& loss, const ModelVector& theta, ModelVector& out);

/// Upper bound on the Lipschitz constant of grad l. Exact for quadratics; for
/// softmax batches it is 0.5 * lambda_max(mean x~ x~^T) with x~ = (x, 1).
double smoothness(const RoundLoss& loss);

/// Stream of all noise for a run. The client-and-round generator is derived
/// from (seed, client, round); shared per-round draws use a reserved key.
struct NoiseSource {
    std::uint64_t seed = 0;
};

/// Draws l_{i,t}. Quadratic kinds shift the center by zeta / L with
/// zeta ~ N(0, sigma_i^2 / d I); Softmax draws n_i fresh samples.
RoundLoss draw_round_loss(const ClientSpec& client, int round, NoiseSource noise);

/// Draws `n` samples from a Synthetic client's generative model.
EmpiricalBatch draw_softmax_batch(const SoftmaxRegression& model, int n, std::uint64_t seed);

/// Ascending ids of the clients using f in round `round` of a switched instance.
std::vector<int> round_keep_set(NoiseSource noise, int round, int clients, int keep);

struct InnerSolverConfig {
    int steps = 100;
    double lr = 0.01;
    double momentum = 0.9;
    double tol = 0.0;  // stop once ||grad of prox objective|| <= tol (0 disables)
};

struct ProxResult {
    ModelVector point;
    double residual = 0.0;  // ||grad l(z) + (z - theta)/eta|| at the returned point
    int iterations = 0;
};

/// argmin_z l(z) + ||z - theta||^2 / (2 eta). Closed form for quadratics,
/// heavy-ball inner loop otherwise (inexact; residual reported).
ProxResult prox(const RoundLoss& loss, const ModelVector& theta, double eta, const InnerSolverConfig& inner);

// ---- population quantities --------------------------------------------------

/// grad F_i(theta); throws for kinds without an analytic population gradient.
ModelVector population_gradient(const ClientObjective& obj, const ModelVector& theta);
double population_value(const ClientObjective& obj, const ModelVector& theta);
bool has_analytic_population(const ClientObjective& obj);

struct BGEstimate {
    double B = 1.0;
    double G = 0.0;
};

/// Least G with B pinned to 1 such that sum_i w_i ||grad F_i||^2 <= ||grad F||^2 + G^2
/// at every probe.
BGEstimate measure_BG(std::span<const ClientSpec> clients, std::span<const ModelVector> probes);

}  // namespace advfl
