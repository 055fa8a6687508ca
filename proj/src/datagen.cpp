#include "advfl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advfl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> normal_vec(Rng& rng, std::size_t n, double mean, double sd) {
    std::vector<double> v(n);
    for (double& x : v) x = mean + sd * std_normal(rng);
    return v;
}

nlohmann::json objective_to_json(const ClientObjective& obj) {
    nlohmann::json j = std::visit(
        overloaded{[](const IsotropicQuadratic& q) {
                       return nlohmann::json{{"kind", "isotropic_quadratic"}, {"curvature", q.curvature},
                                             {"center", q.center.coords()}};
                   },
                   [](const ShiftedQuadratic& q) {
                       return nlohmann::json{{"kind", "shifted_quadratic"}, {"curvature", q.curvature},
                                             {"shift", q.shift.coords()}};
                   },
                   [](const SwitchedQuadratic& q) {
                       return nlohmann::json{{"kind", "switched_quadratic"}, {"curvature", q.curvature},
                                             {"shift", q.shift.coords()}, {"keep", q.keep}, {"clients", q.clients}};
                   },
                   [](const SoftmaxRegression& s) {
                       return nlohmann::json{{"kind", "softmax"}, {"weights", s.weights}, {"bias", s.bias},
                                             {"feature_mean", s.feature_mean}};
                   }},
        obj.kind);
    return j;
}

ClientObjective objective_from_json(const nlohmann::json& j, double sigma) {
    const std::string kind = j.at("kind").get<std::string>();
    ClientObjective obj;
    obj.sigma = sigma;
    if (kind == "isotropic_quadratic") {
        obj.kind = IsotropicQuadratic{j.at("curvature").get<double>(), ModelVector(j.at("center").get<std::vector<double>>())};
    } else if (kind == "shifted_quadratic") {
        obj.kind = ShiftedQuadratic{j.at("curvature").get<double>(), ModelVector(j.at("shift").get<std::vector<double>>())};
    } else if (kind == "switched_quadratic") {
        obj.kind = SwitchedQuadratic{j.at("curvature").get<double>(), ModelVector(j.at("shift").get<std::vector<double>>()),
                                     j.at("keep").get<int>(), j.at("clients").get<int>()};
    } else if (kind == "softmax") {
        obj.kind = SoftmaxRegression{j.at("weights").get<std::vector<double>>(), j.at("bias").get<std::vector<double>>(),
                                     j.at("feature_mean").get<std::vector<double>>()};
    } else {
        throw std::invalid_argument("instance: unknown objective kind '" + kind + "'");
    }
    return obj;
}

FederationInstance uniform_instance(int M, int dim, const ClientObjective& obj) {
    FederationInstance inst;
    inst.M = M;
    inst.dim = dim;
    for (int i = 0; i < M; ++i) inst.clients.push_back(ClientSpec{i, 1, 0.0, obj});
    inst.normalize_weights();
    return inst;
}

}  // namespace

void FederationInstance::normalize_weights() {
    N = 0;
    for (const auto& c : clients) N += c.n;
    for (auto& c : clients) c.weight = static_cast<double>(c.n) / static_cast<double>(N);
}

void FederationInstance::validate() const {
    if (M < 1 || static_cast<int>(clients.size()) != M) throw std::invalid_argument("instance: client count != M");
    if (dim < 1) throw std::invalid_argument("instance: dimension must be positive");
    double wsum = 0.0;
    for (int i = 0; i < M; ++i) {
        if (clients[i].id != i) throw std::invalid_argument("instance: client ids must be 0..M-1 in order");
        if (clients[i].n < 1) throw std::invalid_argument("instance: client volume n_i must be >= 1");
        wsum += clients[i].weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("instance: weights do not sum to 1");
    profile.validate();
    if (optimum && optimum->size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("instance: optimum has wrong dimension");
}

bool FederationInstance::analytic() const {
    for (const auto& c : clients)
        if (!has_analytic_population(c.objective)) return false;
    return true;
}

ModelVector global_gradient(const FederationInstance& inst, const ModelVector& theta) {
    ModelVector g(theta.size(), 0.0);
    for (const auto& c : inst.clients) axpy(c.weight, population_gradient(c.objective, theta), g);
    return g;
}

FederationInstance synthetic_ab(double alpha, double beta, int M, Rng& rng, const VolumeLaw& law) {
    if (M < 1) throw std::invalid_argument("synthetic_ab: M must be >= 1");
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("synthetic_ab: alpha and beta must be >= 0");
    FederationInstance inst;
    inst.M = M;
    inst.dim = kSoftmaxDim;
    for (int i = 0; i < M; ++i) {
        const double u = std::sqrt(alpha) * std_normal(rng);
        const double b_mean = std::sqrt(beta) * std_normal(rng);
        SoftmaxRegression model;
        model.weights = normal_vec(rng, kClasses * kFeatures, u, 1.0);
        model.bias = normal_vec(rng, kClasses, u, 1.0);
        model.feature_mean = normal_vec(rng, kFeatures, b_mean, 1.0);
        // Pareto(shape, scale) by inversion
        const double x = law.scale * std::pow(1.0 - uniform01(rng), -1.0 / law.shape);
        long n = static_cast<long>(std::ceil(x));
        n = std::clamp(n, law.min_n, law.max_n);
        inst.clients.push_back(ClientSpec{i, n, 0.0, ClientObjective{std::move(model), 0.0}});
    }
    inst.eval_seed = rng();
    inst.normalize_weights();
    inst.profile = HeterogeneityProfile{};
    return inst;
}

FederationInstance quadratic_family(int M, double L, double G, double sigma, std::span<const long> volumes, Rng& rng,
                                    int dim, double center_scale) {
    if (M < 1) throw std::invalid_argument("quadratic_family: M must be >= 1");
    if (!(L > 0.0) || !(G >= 0.0) || !(sigma >= 0.0)) throw std::invalid_argument("quadratic_family: need L > 0, G >= 0, sigma >= 0");
    if (!volumes.empty() && static_cast<int>(volumes.size()) != M)
        throw std::invalid_argument("quadratic_family: volumes must have M entries");
    if (dim < 1) throw std::invalid_argument("quadratic_family: dim must be >= 1");

    FederationInstance inst;
    inst.M = M;
    inst.dim = dim;
    for (int i = 0; i < M; ++i) {
        const long n = volumes.empty() ? 1 : volumes[i];
        if (n < 1) throw std::invalid_argument("quadratic_family: infeasible weights (non-positive volume)");
        inst.clients.push_back(ClientSpec{i, n, 0.0, {}});
    }
    inst.normalize_weights();

    ModelVector mean(dim);
    for (double& x : mean) x = center_scale * std_normal(rng);

    std::vector<ModelVector> offsets(M, ModelVector(dim, 0.0));
    if (G > 0.0) {
        if (M < 2) throw std::invalid_argument("quadratic_family: G > 0 needs at least two clients");
        ModelVector avg(dim, 0.0);
        for (int i = 0; i < M; ++i) {
            for (double& x : offsets[i]) x = std_normal(rng);
            axpy(inst.clients[i].weight, offsets[i], avg);
        }
        double var = 0.0;
        for (int i = 0; i < M; ++i) {
            offsets[i] -= avg;
            var += inst.clients[i].weight * norm_sq(offsets[i]);
        }
        if (!(var > 0.0)) throw std::invalid_argument("quadratic_family: degenerate center placement");
        const double scale = (G / L) / std::sqrt(var);
        for (auto& o : offsets) o *= scale;
    }

    for (int i = 0; i < M; ++i) inst.clients[i].objective = ClientObjective{IsotropicQuadratic{L, mean + offsets[i]}, sigma};

    // theta* is the weighted mean of the centers
    ModelVector opt(dim, 0.0);
    for (const auto& c : inst.clients) axpy(c.weight, std::get<IsotropicQuadratic>(c.objective.kind).center, opt);
    inst.optimum = opt;
    inst.profile = HeterogeneityProfile{1.0, G, sigma, L, L, 0.0};
    return inst;
}

int keep_count(double eps, int M) { return static_cast<int>(std::floor((1.0 - eps) * M + 1e-9)); }

LowerBoundPair lower_bound_pair(LowerBoundVariant variant, int M, double eps, double G, double sigma, double L, int dim) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("lower_bound_pair: eps must lie in (0, 1)");
    if (M < 1 || dim < 1 || !(L > 0.0)) throw std::invalid_argument("lower_bound_pair: need M >= 1, dim >= 1, L > 0");
    LowerBoundPair pair;
    pair.variant = variant;
    pair.L = L;
    pair.eps = eps;
    pair.keep = keep_count(eps, M);

    double u_sq = 0.0;
    if (variant == LowerBoundVariant::StaticHetero) {
        if (!(G > 0.0)) throw std::invalid_argument("lower_bound_pair: StaticHetero requires G > 0");
        u_sq = G * G / (eps - eps * eps);
    } else {
        if (!(sigma > 0.0)) throw std::invalid_argument("lower_bound_pair: RandomNoisy requires sigma > 0");
        u_sq = sigma * sigma / (eps * (1.0 - eps));
    }
    pair.u = ModelVector(dim, 0.0);
    pair.u[0] = std::sqrt(u_sq);

    const ClientObjective f{IsotropicQuadratic{L, ModelVector(dim, 0.0)}, 0.0};
    pair.homogeneous = uniform_instance(M, dim, f);
    pair.homogeneous.optimum = ModelVector(dim, 0.0);
    pair.homogeneous.profile = HeterogeneityProfile{1.0, 0.0, 0.0, L, L, 0.0};

    const double g_frac = 1.0 - static_cast<double>(pair.keep) / M;
    if (variant == LowerBoundVariant::StaticHetero) {
        pair.heterogeneous = uniform_instance(M, dim, f);
        for (int i = 0; i < M; ++i) {
            if (i < pair.keep)
                pair.hidden_set.push_back(i);
            else
                pair.heterogeneous.clients[i].objective = ClientObjective{ShiftedQuadratic{L, pair.u}, 0.0};
        }
        pair.heterogeneous.profile = HeterogeneityProfile{1.0, G, 0.0, L, L, 0.0};
    } else {
        pair.heterogeneous = uniform_instance(M, dim, ClientObjective{SwitchedQuadratic{L, pair.u, pair.keep, M}, 0.0});
        pair.heterogeneous.profile = HeterogeneityProfile{1.0, 0.0, sigma, L, L, 0.0};
    }
    pair.heterogeneous.optimum = (-g_frac / L) * pair.u;
    return pair;
}

nlohmann::json instance_to_json(const FederationInstance& inst) {
    nlohmann::json clients = nlohmann::json::array();
    for (const auto& c : inst.clients)
        clients.push_back({{"id", c.id}, {"n", c.n}, {"sigma", c.objective.sigma}, {"objective", objective_to_json(c.objective)}});
    const auto& p = inst.profile;
    nlohmann::json j{{"version", 1},
                     {"M", inst.M},
                     {"d", inst.dim},
                     {"eval_seed", inst.eval_seed},
                     {"profile", {{"B", p.B}, {"G", p.G}, {"sigma", p.sigma}, {"L", p.L}, {"mu", p.mu}, {"L_minus", p.L_minus}}},
                     {"clients", std::move(clients)}};
    j["optimum"] = inst.optimum ? nlohmann::json(inst.optimum->coords()) : nlohmann::json(nullptr);
    return j;
}

FederationInstance instance_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("instance: unsupported version");
    FederationInstance inst;
    inst.M = j.at("M").get<int>();
    inst.dim = j.at("d").get<int>();
    inst.eval_seed = j.value("eval_seed", std::uint64_t{0});
    if (j.contains("profile")) {
        const auto& p = j["profile"];
        inst.profile = HeterogeneityProfile{p.at("B").get<double>(), p.at("G").get<double>(), p.at("sigma").get<double>(),
                                            p.at("L").get<double>(), p.at("mu").get<double>(), p.at("L_minus").get<double>()};
    }
    for (const auto& c : j.at("clients"))
        inst.clients.push_back(ClientSpec{c.at("id").get<int>(), c.at("n").get<long>(), 0.0,
                                          objective_from_json(c.at("objective"), c.value("sigma", 0.0))});
    if (j.contains("optimum") && !j["optimum"].is_null())
        inst.optimum = ModelVector(j["optimum"].get<std::vector<double>>());
    inst.normalize_weights();
    inst.validate();
    return inst;
}

std::string variant_name(LowerBoundVariant v) {
    return v == LowerBoundVariant::StaticHetero ? "static" : "random";
}

LowerBoundVariant parse_variant(const std::string& s) {
    if (s == "static" || s == "StaticHetero") return LowerBoundVariant::StaticHetero;
    if (s == "random" || s == "RandomNoisy") return LowerBoundVariant::RandomNoisy;
    throw std::invalid_argument("unknown lower-bound variant '" + s + "'");
}

}  // namespace advfl
