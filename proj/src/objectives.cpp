#include "advfl/objectives.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "advfl/rng.hpp"

namespace advfl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_batch_dim(const ModelVector& theta) {
    if (theta.size() != static_cast<std::size_t>(kSoftmaxDim))
        throw std::invalid_argument("softmax loss: model has dimension " + std::to_string(theta.size()) +
                                    ", expected " + std::to_string(kSoftmaxDim));
}

// logits = W x + b for one sample.
void logits_of(const ModelVector& theta, const double* x, double* out) {
    const double* w = theta.data();
    const double* b = theta.data() + kClasses * kFeatures;
    for (int k = 0; k < kClasses; ++k) {
        double z = b[k];
        const double* row = w + k * kFeatures;
        for (int j = 0; j < kFeatures; ++j) z += row[j] * x[j];
        out[k] = z;
    }
}

double log_sum_exp(const double* z, int n) {
    const double m = *std::max_element(z, z + n);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::exp(z[k] - m);
    return m + std::log(s);
}

double batch_value(const EmpiricalBatch& batch, const ModelVector& theta) {
    check_batch_dim(theta);
    double total = 0.0;
    double z[kClasses];
    for (int r = 0; r < batch.n; ++r) {
        logits_of(theta, batch.features.data() + r * kFeatures, z);
        total += log_sum_exp(z, kClasses) - z[batch.labels[r]];
    }
    return total / batch.n;
}

void batch_gradient(const EmpiricalBatch& batch, const ModelVector& theta, ModelVector& out) {
    check_batch_dim(theta);
    out = ModelVector(kSoftmaxDim, 0.0);
    double z[kClasses];
    const double inv_n = 1.0 / batch.n;
    double* gw = out.data();
    double* gb = out.data() + kClasses * kFeatures;
    for (int r = 0; r < batch.n; ++r) {
        const double* x = batch.features.data() + r * kFeatures;
        logits_of(theta, x, z);
        const double lse = log_sum_exp(z, kClasses);
        for (int k = 0; k < kClasses; ++k) {
            double coef = std::exp(z[k] - lse);
            if (k == batch.labels[r]) coef -= 1.0;
            coef *= inv_n;
            gb[k] += coef;
            double* row = gw + k * kFeatures;
            for (int j = 0; j < kFeatures; ++j) row[j] += coef * x[j];
        }
    }
}

double batch_smoothness(const EmpiricalBatch& batch) {
    constexpr int m = kFeatures + 1;
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd xt(m);
    for (int r = 0; r < batch.n; ++r) {
        for (int j = 0; j < kFeatures; ++j) xt(j) = batch.features[r * kFeatures + j];
        xt(kFeatures) = 1.0;
        second.noalias() += xt * xt.transpose();
    }
    second /= batch.n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second, Eigen::EigenvaluesOnly);
    return 0.5 * eig.eigenvalues().maxCoeff();
}

}  // namespace

void HeterogeneityProfile::validate() const {
    if (!(B >= 1.0)) throw std::invalid_argument("profile: B must be >= 1");
    if (!(G >= 0.0)) throw std::invalid_argument("profile: G must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("profile: sigma must be >= 0");
    if (!(L > 0.0)) throw std::invalid_argument("profile: L must be > 0");
    if (!(mu <= L)) throw std::invalid_argument("profile: mu must be <= L");
    if (!(L_minus >= 0.0)) throw std::invalid_argument("profile: L_minus must be >= 0");
}

double feature_variance(int j_one_based) { return std::pow(static_cast<double>(j_one_based), -1.2); }

std::size_t RoundLoss::dim() const {
    return std::visit(overloaded{[](const QuadraticRealized& q) { return q.center.size(); },
                                 [](const EmpiricalBatch&) { return static_cast<std::size_t>(kSoftmaxDim); }},
                      realization);
}

double value(const RoundLoss& loss, const ModelVector& theta) {
    return std::visit(overloaded{[&](const QuadraticRealized& q) {
                                     require_same_dim(q.center, theta, "value");
                                     return 0.5 * q.curvature * dist_sq(theta, q.center);
                                 },
                                 [&](const EmpiricalBatch& b) { return batch_value(b, theta); }},
                      loss.realization);
}

void gradient_into(const RoundLoss& loss, const ModelVector& theta, ModelVector& out) {
    std::visit(overloaded{[&](const QuadraticRealized& q) {
                              require_same_dim(q.center, theta, "gradient");
                              out = theta;
                              for (std::size_t i = 0; i < out.size(); ++i)
                                  out[i] = q.curvature * (theta[i] - q.center[i]);
                          },
                          [&](const EmpiricalBatch& b) { batch_gradient(b, theta, out); }},
               loss.realization);
}

ModelVector gradient(const RoundLoss& loss, const ModelVector& theta) {
    ModelVector g;
    gradient_into(loss, theta, g);
    return g;
}

double smoothness(const RoundLoss& loss) {
    return std::visit(overloaded{[](const QuadraticRealized& q) { return q.curvature; },
                                 [](const EmpiricalBatch& b) { return batch_smoothness(b); }},
                      loss.realization);
}

EmpiricalBatch draw_softmax_batch(const SoftmaxRegression& model, int n, std::uint64_t seed) {
    Rng rng(seed);
    EmpiricalBatch batch;
    batch.n = n;
    batch.features.resize(static_cast<std::size_t>(n) * kFeatures);
    batch.labels.resize(n);
    double z[kClasses];
    for (int r = 0; r < n; ++r) {
        double* x = batch.features.data() + static_cast<std::size_t>(r) * kFeatures;
        for (int j = 0; j < kFeatures; ++j)
            x[j] = model.feature_mean[j] + std::sqrt(feature_variance(j + 1)) * std_normal(rng);
        for (int k = 0; k < kClasses; ++k) {
            double s = model.bias[k];
            for (int j = 0; j < kFeatures; ++j) s += model.weights[k * kFeatures + j] * x[j];
            z[k] = s;
        }
        batch.labels[r] = static_cast<int>(std::max_element(z, z + kClasses) - z);
    }
    return batch;
}

std::vector<int> round_keep_set(NoiseSource noise, int round, int clients, int keep) {
    if (keep < 0 || keep > clients) throw std::invalid_argument("round_keep_set: keep out of range");
    Rng rng = make_rng(noise.seed, Stream::DataNoise, static_cast<std::uint64_t>(round),
                       std::numeric_limits<std::uint64_t>::max());
    std::vector<int> ids(clients);
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < keep; ++k) {
        std::uniform_int_distribution<int> pick(k, clients - 1);
        std::swap(ids[k], ids[pick(rng)]);
    }
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
    return ids;
}

RoundLoss draw_round_loss(const ClientSpec& client, int round, NoiseSource noise) {
    RoundLoss loss;
    loss.client_id = client.id;
    loss.round = round;
    const std::uint64_t seed =
        derive_seed(noise.seed, Stream::DataNoise, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(client.id));
    const double sigma = client.objective.sigma;

    auto noisy_quadratic = [&](double curvature, ModelVector center) {
        if (sigma > 0.0) {
            Rng rng(seed);
            const double sd = sigma / std::sqrt(static_cast<double>(center.size()));
            for (double& c : center) c += sd * std_normal(rng) / curvature;
        }
        loss.realization = QuadraticRealized{curvature, std::move(center)};
    };

    std::visit(overloaded{[&](const IsotropicQuadratic& q) { noisy_quadratic(q.curvature, q.center); },
                          [&](const ShiftedQuadratic& q) { noisy_quadratic(q.curvature, (-1.0 / q.curvature) * q.shift); },
                          [&](const SwitchedQuadratic& q) {
                              const auto keep = round_keep_set(noise, round, q.clients, q.keep);
                              const bool uses_f = std::binary_search(keep.begin(), keep.end(), client.id);
                              ModelVector center = uses_f ? ModelVector(q.shift.size(), 0.0)
                                                          : (-1.0 / q.curvature) * q.shift;
                              noisy_quadratic(q.curvature, std::move(center));
                          },
                          [&](const SoftmaxRegression& s) {
                              loss.realization = draw_softmax_batch(s, static_cast<int>(client.n), seed);
                          }},
               client.objective.kind);
    return loss;
}

ProxResult prox(const RoundLoss& loss, const ModelVector& theta, double eta, const InnerSolverConfig& inner) {
    if (!(eta > 0.0)) throw std::invalid_argument("prox: eta must be > 0");
    ProxResult res;
    if (const auto* q = std::get_if<QuadraticRealized>(&loss.realization)) {
        require_same_dim(q->center, theta, "prox");
        const double a = eta * q->curvature;
        res.point = theta;
        for (std::size_t i = 0; i < theta.size(); ++i) res.point[i] = (theta[i] + a * q->center[i]) / (1.0 + a);
        double r2 = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = q->curvature * (res.point[i] - q->center[i]) + (res.point[i] - theta[i]) / eta;
            r2 += g * g;
        }
        res.residual = std::sqrt(r2);
        return res;
    }

    ModelVector z = theta;
    ModelVector vel(theta.size(), 0.0);
    ModelVector g;
    auto prox_grad = [&](const ModelVector& at) {
        gradient_into(loss, at, g);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += (at[i] - theta[i]) / eta;
    };
    int it = 0;
    for (; it < inner.steps; ++it) {
        prox_grad(z);
        if (inner.tol > 0.0 && norm(g) <= inner.tol) break;
        for (std::size_t i = 0; i < z.size(); ++i) {
            vel[i] = inner.momentum * vel[i] + g[i];
            z[i] -= inner.lr * vel[i];
        }
    }
    prox_grad(z);
    res.residual = norm(g);
    res.point = std::move(z);
    res.iterations = it;
    return res;
}

bool has_analytic_population(const ClientObjective& obj) {
    return !std::holds_alternative<SoftmaxRegression>(obj.kind);
}

ModelVector population_gradient(const ClientObjective& obj, const ModelVector& theta) {
    return std::visit(
        overloaded{[&](const IsotropicQuadratic& q) {
                       require_same_dim(q.center, theta, "population_gradient");
                       return q.curvature * (theta - q.center);
                   },
                   [&](const ShiftedQuadratic& q) {
                       require_same_dim(q.shift, theta, "population_gradient");
                       return q.curvature * theta + q.shift;
                   },
                   [&](const SwitchedQuadratic& q) {
                       require_same_dim(q.shift, theta, "population_gradient");
                       const double g_frac = 1.0 - static_cast<double>(q.keep) / q.clients;
                       return q.curvature * theta + g_frac * q.shift;
                   },
                   [&](const SoftmaxRegression&) -> ModelVector {
                       throw std::invalid_argument("population_gradient: softmax objective has no analytic form");
                   }},
        obj.kind);
}

double population_value(const ClientObjective& obj, const ModelVector& theta) {
    const double noise_floor = [&] {
        return std::visit(overloaded{[&](const SoftmaxRegression&) { return 0.0; },
                                     [&](const auto& q) { return obj.sigma * obj.sigma / (2.0 * q.curvature); }},
                          obj.kind);
    }();
    return noise_floor +
           std::visit(overloaded{[&](const IsotropicQuadratic& q) { return 0.5 * q.curvature * dist_sq(theta, q.center); },
                                 [&](const ShiftedQuadratic& q) {
                                     return 0.5 * q.curvature * norm_sq(theta + (1.0 / q.curvature) * q.shift);
                                 },
                                 [&](const SwitchedQuadratic& q) {
                                     const double f_frac = static_cast<double>(q.keep) / q.clients;
                                     return 0.5 * q.curvature *
                                            (f_frac * norm_sq(theta) +
                                             (1.0 - f_frac) * norm_sq(theta + (1.0 / q.curvature) * q.shift));
                                 },
                                 [&](const SoftmaxRegression&) -> double {
                                     throw std::invalid_argument("population_value: softmax objective has no analytic form");
                                 }},
                      obj.kind);
}

BGEstimate measure_BG(std::span<const ClientSpec> clients, std::span<const ModelVector> probes) {
    if (probes.empty()) throw std::invalid_argument("measure_BG: empty probe list");
    if (clients.empty()) throw std::invalid_argument("measure_BG: no clients");
    double g2 = 0.0;
    for (const auto& theta : probes) {
        ModelVector full(theta.size(), 0.0);
        double weighted = 0.0;
        for (const auto& c : clients) {
            const ModelVector gi = population_gradient(c.objective, theta);
            axpy(c.weight, gi, full);
            weighted += c.weight * norm_sq(gi);
        }
        g2 = std::max(g2, weighted - norm_sq(full));
    }
    return {1.0, std::sqrt(std::max(0.0, g2))};
}

}  // namespace advfl
