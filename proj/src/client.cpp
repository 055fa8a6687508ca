#include "advfl/client.hpp"

#include <stdexcept>
#include <string>

namespace advfl {

namespace {

void guard_finite(const ModelVector& v, const RoundLoss& loss, const char* stage) {
    if (!v.all_finite()) throw DivergenceError(loss.round, loss.client_id, stage);
}

LocalUpdate make_update(const RoundLoss& loss, const ModelVector& theta_t, ModelVector next) {
    LocalUpdate up;
    up.client_id = loss.client_id;
    up.delta = next - theta_t;
    up.new_model = std::move(next);
    return up;
}

// sum_{k=2}^{s} C(s,k) x^k
double binomial_tail(int s, double x) {
    double sum = 0.0;
    double coef = 1.0;  // C(s, k)
    double pw = 1.0;    // x^k
    for (int k = 1; k <= s; ++k) {
        coef = coef * (s - k + 1) / k;
        pw *= x;
        if (k >= 2) sum += coef * pw;
    }
    return sum;
}

}  // namespace

DivergenceError::DivergenceError(int round_, int client_, const std::string& what)
    : std::runtime_error("non-finite iterate in round " + std::to_string(round_) + ", client " + std::to_string(client_) +
                         " (" + what + ")"),
      round(round_),
      client(client_) {}

LocalUpdate fedavg_local(const RoundLoss& loss, const ModelVector& theta_t, double eta, int s) {
    if (s < 1) throw std::invalid_argument("fedavg_local: s must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("fedavg_local: eta must be > 0");
    ModelVector theta = theta_t;
    ModelVector g;
    for (int step = 0; step < s; ++step) {
        gradient_into(loss, theta, g);
        axpy(-eta, g, theta);
        guard_finite(theta, loss, "local gradient step");
    }
    return make_update(loss, theta_t, std::move(theta));
}

LocalUpdate fedprox_local(const RoundLoss& loss, const ModelVector& theta_t, double eta, const InnerSolverConfig& inner,
                          double L_minus) {
    if (!(eta > 0.0)) throw std::invalid_argument("fedprox_local: eta must be > 0");
    if (eta * L_minus >= 1.0)
        throw std::invalid_argument("fedprox_local: eta * L_minus >= 1, proximal objective is not strongly convex");
    ProxResult pr = prox(loss, theta_t, eta, inner);
    guard_finite(pr.point, loss, "proximal step");
    LocalUpdate up = make_update(loss, theta_t, std::move(pr.point));
    up.prox_residual = pr.residual;
    return up;
}

LocalUpdate momentum_step(const RoundLoss& loss, const ModelVector& theta_t, const ModelVector& m_prev, double beta0,
                          double eta) {
    if (!(beta0 >= 0.0 && beta0 < 1.0)) throw std::invalid_argument("momentum_step: beta0 must lie in [0, 1)");
    ModelVector g = gradient(loss, theta_t);
    require_same_dim(g, m_prev, "momentum_step");
    ModelVector m(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) m[i] = beta0 * m_prev[i] + (1.0 - beta0) * g[i];
    ModelVector next = theta_t;
    axpy(-eta, m, next);
    guard_finite(next, loss, "momentum step");
    LocalUpdate up = make_update(loss, theta_t, std::move(next));
    up.momentum = std::move(m);
    return up;
}

double kappa(int s, double eta, double L) {
    if (s < 1) throw std::invalid_argument("kappa: s must be >= 1");
    if (s == 1) return 0.0;
    const double x = eta * L;
    const double pairs = 0.5 * s * (s - 1);
    // sum_{k>=2} C(s,k) x^{k-2} / C(s,2), evaluated without cancellation
    double sum = 0.0;
    double coef = 1.0;
    double pw = 1.0;
    for (int k = 1; k <= s; ++k) {
        coef = coef * (s - k + 1) / k;
        if (k >= 2) {
            sum += coef * pw;
            pw *= x;
        }
    }
    return sum / pairs;
}

double s_step_bound_factor(int s, double eta, double L) {
    if (s < 1) throw std::invalid_argument("s_step_bound_factor: s must be >= 1");
    return binomial_tail(s, eta * L) / L;
}

}  // namespace advfl
