#pragma once

#include <optional>

#include "advfl/model_vector.hpp"
#include "advfl/objectives.hpp"

namespace advfl {

struct LocalUpdate {
    int client_id = 0;
    ModelVector new_model;                // theta_{i,t+1}
    ModelVector delta;                    // theta_{i,t+1} - theta_t
    std::optional<ModelVector> momentum;  // baseline workers only
    double prox_residual = 0.0;           // inexact prox solves only
};

/// Raised when a local iterate stops being finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int round, int client, const std::string& what);
    int round;
    int client;
};

/// s gradient steps on the same round loss, starting from theta_t.
LocalUpdate fedavg_local(const RoundLoss& loss, const ModelVector& theta_t, double eta, int s);

/// Proximal step; `L_minus` is the lower curvature bound of the loss (0 if convex).
LocalUpdate fedprox_local(const RoundLoss& loss, const ModelVector& theta_t, double eta, const InnerSolverConfig& inner,
                          double L_minus = 0.0);

/// One momentum-SGD step: m = beta0 m_prev + (1 - beta0) grad, theta - eta m.
LocalUpdate momentum_step(const RoundLoss& loss, const ModelVector& theta_t, const ModelVector& m_prev, double beta0,
                          double eta);

inline constexpr double kDefaultMomentum = 0.9;

/// ((1 + x)^s - 1 - s x) / (C(s,2) x^2) with x = eta L; 0 for s = 1.
double kappa(int s, double eta, double L);

/// The deviation bound kappa eta^2 C(s,2) L, without the gradient norm factor.
/// Evaluated as ((1 + x)^s - 1 - s x) / L, which stays accurate for small x.
double s_step_bound_factor(int s, double eta, double L);

}  // namespace advfl
