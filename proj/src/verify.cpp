#include "advfl/verify.hpp"

#include "advfl/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace advfl {

namespace {

constexpr double kRelTol = 1e-9;

double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
}

ModelVector gaussian_vector(Rng& rng, std::size_t d, double scale) {
    ModelVector v(d, 0.0);
    for (double& x : v) x = scale * std_normal(rng);
    return v;
}

RoundLoss random_quadratic(Rng& rng, int d) {
    RoundLoss loss;
    loss.realization = QuadraticRealized{log_uniform(rng, 0.1, 10.0), gaussian_vector(rng, d, 1.0)};
    return loss;
}

RoundLoss random_softmax(Rng& rng) {
    SoftmaxRegression model;
    model.weights = gaussian_vector(rng, kClasses * kFeatures, 1.0).coords();
    model.bias = gaussian_vector(rng, kClasses, 1.0).coords();
    model.feature_mean = gaussian_vector(rng, kFeatures, 1.0).coords();
    std::uniform_int_distribution<int> n_dist(10, 30);
    const int n = n_dist(rng);
    RoundLoss loss;
    loss.realization = draw_softmax_batch(model, n, rng());
    return loss;
}

struct LemmaTrial {
    int kind = 0;
    int s = 1;
    double eta = 0.0;
    double L = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool violated = false;
};

const char* kind_label(const std::string& suite, int kind) {
    if (suite == "s-step") return kind == 0 ? "quadratic" : "softmax";
    return kind == 0 ? "quadratic" : kind == 1 ? "indefinite-quadratic" : "softmax";
}

Report merge_trials(const std::string& suite, const std::vector<LemmaTrial>& trials, int kinds) {
    Report r;
    r.suite = suite;
    r.trials = static_cast<int>(trials.size());
    std::vector<int> count(kinds, 0);
    std::vector<double> worst(kinds, 0.0);
    for (const auto& t : trials) {
        const double ratio = t.rhs > 0.0 ? t.lhs / t.rhs : 0.0;
        r.max_ratio = std::max(r.max_ratio, ratio);
        ++count[t.kind];
        worst[t.kind] = std::max(worst[t.kind], ratio);
        if (t.violated) {
            ++r.violations;
            if (r.violations <= 20)
                r.details.push_back({{"violation", true}, {"kind", kind_label(suite, t.kind)}, {"s", t.s}, {"eta", t.eta},
                                     {"L", t.L}, {"lhs", t.lhs}, {"rhs", t.rhs}});
        }
    }
    for (int k = 0; k < kinds; ++k)
        r.details.push_back({{"kind", kind_label(suite, k)}, {"trials", count[k]}, {"maxRatio", worst[k]}});
    return r;
}

bool exceeds(double lhs, double rhs, double scale) { return lhs > rhs * (1.0 + kRelTol) + 1e-13 * scale; }

}  // namespace

nlohmann::json report_to_json(const Report& r) {
    return {{"suite", r.suite},
            {"trials", r.trials},
            {"violations", r.violations},
            {"maxRatio", r.max_ratio},
            {"pass", r.passed()},
            {"details", r.details}};
}

Report check_s_step_lemma(int trials, std::uint64_t seed, ExecPolicy policy) {
    if (trials < 1) throw std::invalid_argument("check_s_step_lemma: trials must be >= 1");
    std::vector<LemmaTrial> out(trials);
    for_each_index(policy, trials, [&](int k) {
        Rng rng = make_rng(seed, Stream::Instance, static_cast<std::uint64_t>(k), 1);
        LemmaTrial& tr = out[k];
        tr.kind = k % 2;
        const RoundLoss loss = tr.kind == 0 ? random_quadratic(rng, 10) : random_softmax(rng);
        const ModelVector theta = gaussian_vector(rng, loss.dim(), log_uniform(rng, 1e-2, 10.0));
        tr.L = smoothness(loss);
        std::uniform_int_distribution<int> s_dist(1, 8);
        tr.s = s_dist(rng);
        tr.eta = (1.0 - uniform01(rng)) * 0.1 / (tr.s * tr.L);

        // deviation accumulated from gradient differences along the GD path
        const ModelVector g0 = gradient(loss, theta);
        ModelVector z = theta;
        ModelVector acc(theta.size(), 0.0);
        for (int step = 0; step < tr.s; ++step) {
            const ModelVector g = gradient(loss, z);
            if (step > 0) acc += g - g0;
            axpy(-tr.eta, g, z);
        }
        tr.lhs = tr.eta * norm(acc);
        tr.rhs = s_step_bound_factor(tr.s, tr.eta, tr.L) * norm(g0);

        // the client implementation has to land on the same point
        const LocalUpdate up = fedavg_local(loss, theta, tr.eta, tr.s);
        const double mismatch = norm(up.new_model - z);
        tr.violated = exceeds(tr.lhs, tr.rhs, norm(theta)) || mismatch > 1e-12 * (1.0 + norm(theta));
    });
    return merge_trials("s-step", out, 2);
}

Report check_prox_lemma(int trials, std::uint64_t seed, ExecPolicy policy) {
    if (trials < 1) throw std::invalid_argument("check_prox_lemma: trials must be >= 1");
    std::vector<LemmaTrial> out(trials);
    for_each_index(policy, trials, [&](int k) {
        Rng rng = make_rng(seed, Stream::Instance, static_cast<std::uint64_t>(k), 2);
        LemmaTrial& tr = out[k];
        tr.kind = k % 3;
        if (tr.kind == 0) {
            const RoundLoss loss = random_quadratic(rng, 10);
            const ModelVector theta = gaussian_vector(rng, 10, log_uniform(rng, 1e-2, 10.0));
            tr.L = smoothness(loss);
            tr.eta = log_uniform(rng, 1e-4, 10.0) / tr.L;
            const ModelVector g = gradient(loss, theta);
            const LocalUpdate up = fedprox_local(loss, theta, tr.eta, InnerSolverConfig{});
            ModelVector dev = theta - up.new_model;
            axpy(-tr.eta, g, dev);
            tr.lhs = norm(dev);
            tr.rhs = tr.eta * tr.eta * tr.L * norm(g);
            tr.violated = exceeds(tr.lhs, tr.rhs, norm(theta) + tr.eta * norm(g));
        } else if (tr.kind == 1) {
            // l(z) = 1/2 sum_j lambda_j (z_j - c_j)^2 with lambda_j in [-L_minus, L]
            constexpr int d = 10;
            tr.L = log_uniform(rng, 0.1, 10.0);
            const double L_minus = uniform01(rng) * tr.L;
            std::vector<double> lambda(d);
            for (int j = 0; j < d; ++j) lambda[j] = -L_minus + uniform01(rng) * (tr.L + L_minus);
            lambda[0] = tr.L;
            lambda[1] = -L_minus;
            const ModelVector c = gaussian_vector(rng, d, 1.0);
            const ModelVector theta = gaussian_vector(rng, d, log_uniform(rng, 1e-2, 10.0));
            const double cap = L_minus > 0.0 ? 1.0 / L_minus : 10.0 / tr.L;
            tr.eta = (1.0 - uniform01(rng)) * 0.999 * cap;
            ModelVector g(d, 0.0), dev(d, 0.0);
            for (int j = 0; j < d; ++j) {
                g[j] = lambda[j] * (theta[j] - c[j]);
                const double p = (theta[j] + tr.eta * lambda[j] * c[j]) / (1.0 + tr.eta * lambda[j]);
                dev[j] = theta[j] - p - tr.eta * g[j];
            }
            tr.lhs = norm(dev);
            tr.rhs = tr.eta * tr.eta / (1.0 - tr.eta * L_minus) * tr.L * norm(g);
            tr.violated = exceeds(tr.lhs, tr.rhs, norm(theta) + tr.eta * norm(g));
        } else {
            const RoundLoss loss = random_softmax(rng);
            const ModelVector theta = gaussian_vector(rng, kSoftmaxDim, log_uniform(rng, 1e-2, 1.0));
            tr.L = smoothness(loss);
            tr.eta = (1.0 - uniform01(rng)) / tr.L;
            InnerSolverConfig inner;
            inner.steps = 200;
            inner.lr = 1.0 / (tr.L + 1.0 / tr.eta);
            inner.momentum = 0.0;
            inner.tol = 1e-10;
            const ModelVector g = gradient(loss, theta);
            const LocalUpdate up = fedprox_local(loss, theta, tr.eta, inner);
            ModelVector dev = theta - up.new_model;
            axpy(-tr.eta, g, dev);
            tr.lhs = norm(dev);
            tr.rhs = tr.eta * tr.eta * tr.L * norm(g);
            // inexact solve: ||z - P|| <= eta * residual by 1/eta-strong convexity
            tr.violated = exceeds(tr.lhs, tr.rhs + tr.eta * up.prox_residual, norm(theta) + tr.eta * norm(g));
        }
    });
    return merge_trials("prox", out, 3);
}

Report check_unbiased_sampling(const FederationInstance& inst, int K, const ModelVector& theta, int draws,
                               std::uint64_t seed, double band, ExecPolicy policy) {
    if (!inst.analytic()) throw std::invalid_argument("check_unbiased_sampling: needs an analytic population gradient");
    if (draws < 2) throw std::invalid_argument("check_unbiased_sampling: draws must be >= 2");
    const std::size_t d = static_cast<std::size_t>(inst.dim);
    const double p = static_cast<double>(K) / inst.M;
    const NoiseSource noise{seed};

    std::vector<ModelVector> sums(draws);
    for_each_index(policy, draws, [&](int k) {
        Rng rng = make_rng(seed, Stream::Sampling, static_cast<std::uint64_t>(k));
        ModelVector acc(d, 0.0);
        for (int id : sample_clients(inst.M, K, rng)) {
            const auto& c = inst.clients[id];
            axpy(c.weight, gradient(draw_round_loss(c, k, noise), theta), acc);
        }
        sums[k] = std::move(acc);
    });

    ModelVector mean(d, 0.0), m2(d, 0.0);
    for (int k = 0; k < draws; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            const double delta = sums[k][j] - mean[j];
            mean[j] += delta / (k + 1);
            m2[j] += delta * (sums[k][j] - mean[j]);
        }
    }
    const ModelVector target = p * global_gradient(inst, theta);

    Report r;
    r.suite = "unbiased";
    r.trials = draws;
    nlohmann::json z_all = nlohmann::json::array();
    double max_abs_z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double se = std::sqrt(m2[j] / (draws - 1) / draws);
        const double diff = mean[j] - target[j];
        double z = 0.0;
        if (se > 0.0)
            z = diff / se;
        else if (std::abs(diff) > 1e-12 * (1.0 + std::abs(target[j])))
            z = std::copysign(INFINITY, diff);
        z_all.push_back(std::isfinite(z) ? nlohmann::json(z) : nlohmann::json("inf"));
        max_abs_z = std::max(max_abs_z, std::abs(z));
        if (!(std::abs(z) <= band)) ++r.violations;
    }
    r.max_ratio = max_abs_z / band;
    r.details.push_back({{"p", p},
                         {"band", band},
                         {"maxAbsZ", std::isfinite(max_abs_z) ? nlohmann::json(max_abs_z) : nlohmann::json("inf")},
                         {"meanNorm", norm(mean)},
                         {"targetNorm", norm(target)},
                         {"z", z_all}});
    return r;
}

std::vector<ModelVector> selection_bias_probes(const FederationInstance& inst, int count, std::uint64_t seed) {
    const ModelVector center = inst.optimum ? *inst.optimum : ModelVector(inst.dim, 0.0);
    std::vector<ModelVector> probes;
    for (int k = 0; k < count; ++k) {
        Rng rng = make_rng(seed, Stream::Instance, static_cast<std::uint64_t>(k), 3);
        ModelVector dir = gaussian_vector(rng, center.size(), 1.0);
        dir *= 0.1 * std::pow(2.0, k) / std::max(norm(dir), 1e-300);
        probes.push_back(center + dir);
    }
    return probes;
}

Report check_selection_bias(const FederationInstance& inst, int K, double eps, std::span<const ModelVector> probes,
                            int draws, std::uint64_t seed, double band, ExecPolicy policy) {
    if (K > 20) throw std::invalid_argument("check_selection_bias: exhaustive oracle needs K <= 20");
    if (!inst.analytic()) throw std::invalid_argument("check_selection_bias: needs an analytic population gradient");
    if (draws < 2 || probes.empty()) throw std::invalid_argument("check_selection_bias: need draws >= 2 and probes");
    const DropoutBudget budget = DropoutBudget::make(eps, K, inst.M, inst.N);
    const double p = static_cast<double>(K) / inst.M;
    const auto& prof = inst.profile;

    Report r;
    r.suite = "selection-bias";
    r.trials = draws * static_cast<int>(probes.size());
    for (std::size_t q = 0; q < probes.size(); ++q) {
        const ModelVector& theta = probes[q];
        const NoiseSource noise{derive_seed(seed, Stream::DataNoise, q)};
        std::vector<double> lhs(draws);
        for_each_index(policy, draws, [&](int k) {
            Rng rng = make_rng(seed, Stream::Sampling, static_cast<std::uint64_t>(k), q);
            const auto sampled = sample_clients(inst.M, K, rng);
            std::vector<ModelVector> grads;
            grads.reserve(sampled.size());
            for (int id : sampled) grads.push_back(gradient(draw_round_loss(inst.clients[id], k, noise), theta));
            const auto drop = worst_case_subset(sampled, grads, inst, budget);
            ModelVector acc(theta.size(), 0.0);
            for (std::size_t i = 0; i < sampled.size(); ++i)
                if (std::binary_search(drop.begin(), drop.end(), sampled[i])) axpy(inst.clients[sampled[i]].weight, grads[i], acc);
            lhs[k] = norm(acc);
        });
        double mean = 0.0, m2 = 0.0;
        for (int k = 0; k < draws; ++k) {
            const double delta = lhs[k] - mean;
            mean += delta / (k + 1);
            m2 += delta * (lhs[k] - mean);
        }
        const double se = std::sqrt(m2 / (draws - 1) / draws);
        const double grad_norm = norm(global_gradient(inst, theta));
        const double bound = p * std::sqrt(eps) * (prof.B * grad_norm + prof.G + prof.sigma);
        const bool ok = mean <= bound + band * se;
        if (!ok) ++r.violations;
        if (bound > 0.0) r.max_ratio = std::max(r.max_ratio, mean / bound);
        r.details.push_back(
            {{"probe", q}, {"gradNorm", grad_norm}, {"mean", mean}, {"se", se}, {"bound", bound}, {"pass", ok}});
    }
    return r;
}

double minimax_gap(double eps, double G, double sigma) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("minimax_gap: eps must lie in [0, 1)");
    return eps / (8.0 * (1.0 - eps)) * (G * G + sigma * sigma);
}

namespace {

// everything the server sees in one round, flattened
struct ObservedRound {
    std::vector<int> sampled;
    std::vector<int> participating;
    std::vector<double> payload;
};

std::vector<ObservedRound> observe(const FederationInstance& inst, const RunConfig& cfg, RunResult& result) {
    std::vector<ObservedRound> stream;
    result = run(inst, cfg, [&](const RoundObservation& obs) {
        ObservedRound r;
        r.sampled.assign(obs.sampled.begin(), obs.sampled.end());
        r.participating.assign(obs.participating.begin(), obs.participating.end());
        for (std::size_t k = 0; k < obs.sampled.size(); ++k) {
            if (!std::binary_search(r.participating.begin(), r.participating.end(), obs.sampled[k])) continue;
            const auto& up = obs.results[k].update;
            r.payload.insert(r.payload.end(), up.delta.begin(), up.delta.end());
            r.payload.insert(r.payload.end(), obs.results[k].first_gradient.begin(), obs.results[k].first_gradient.end());
        }
        stream.push_back(std::move(r));
    });
    return stream;
}

bool bit_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

HarnessResult indistinguishability_harness(const LowerBoundPair& pair, RunConfig cfg) {
    const auto& homo = pair.homogeneous;
    const auto& hetero = pair.heterogeneous;
    cfg.K = homo.M;
    cfg.adversary.eps = pair.eps;
    cfg.adversary.candidates.reset();
    if (pair.variant == LowerBoundVariant::StaticHetero) {
        cfg.adversary.kind = AdversaryKind::Static;
        cfg.adversary.static_set = "explicit";
        cfg.adversary.keep_set = pair.hidden_set;
    } else {
        cfg.adversary.kind = AdversaryKind::Random;
    }

    RunResult r1, r2;
    const auto s1 = observe(homo, cfg, r1);
    const auto s2 = observe(hetero, cfg, r2);

    HarnessResult h;
    h.rounds = static_cast<int>(s1.size());
    h.streams_identical = s1.size() == s2.size();
    for (std::size_t t = 0; h.streams_identical && t < s1.size(); ++t)
        h.streams_identical = s1[t].sampled == s2[t].sampled && s1[t].participating == s2[t].participating &&
                              bit_equal(s1[t].payload, s2[t].payload);
    h.outputs_identical = bit_equal(r1.theta_final.span(), r2.theta_final.span()) &&
                          bit_equal(r1.theta_R.span(), r2.theta_R.span()) && r1.R == r2.R;

    const ModelVector& theta_hat = r1.theta_R;
    h.err1 = norm(global_gradient(homo, theta_hat));
    h.err2 = norm(global_gradient(hetero, theta_hat));
    h.eps_u = pair.eps * norm(pair.u);
    h.triangle_ok = h.err1 + h.err2 >= h.eps_u * (1.0 - kRelTol);
    const double G = pair.variant == LowerBoundVariant::StaticHetero ? hetero.profile.G : 0.0;
    const double sigma = pair.variant == LowerBoundVariant::RandomNoisy ? hetero.profile.sigma : 0.0;
    h.gap = minimax_gap(pair.eps, G, sigma);
    h.minimax_ok = std::max(h.err1 * h.err1, h.err2 * h.err2) >= h.gap * (1.0 - kRelTol);
    return h;
}

nlohmann::json harness_to_json(const HarnessResult& h) {
    return {{"streamsIdentical", h.streams_identical},
            {"outputsIdentical", h.outputs_identical},
            {"err1", h.err1},
            {"err2", h.err2},
            {"epsNormU", h.eps_u},
            {"triangle", h.triangle_ok},
            {"minimaxGap", h.gap},
            {"minimax", h.minimax_ok},
            {"rounds", h.rounds},
            {"pass", h.passed()}};
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 aligned points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double convergence_slope(std::span<const RoundLog> traj, bool use_dist, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("convergence_slope: bad tail fraction");
    const std::size_t n = static_cast<std::size_t>(std::ceil(tail_fraction * traj.size()));
    std::vector<double> x, y;
    for (std::size_t k = traj.size() - std::min(n, traj.size()); k < traj.size(); ++k) {
        if (traj[k].t < 1) continue;
        if (use_dist && !traj[k].dist_sq) throw std::invalid_argument("convergence_slope: dist_sq unavailable");
        x.push_back(traj[k].t);
        y.push_back(use_dist ? *traj[k].dist_sq : traj[k].grad_norm_sq);
    }
    if (x.size() < 20) throw std::invalid_argument("convergence_slope: tail needs at least 20 points");
    return loglog_slope(x, y);
}

}  // namespace advfl

namespace advfl {

namespace {

FederationInstance reference_quadratic(int M, std::uint64_t seed) {
    // imbalanced volumes so the weights matter
    std::vector<long> volumes(M);
    for (int i = 0; i < M; ++i) volumes[i] = 1 + i % 4;
    Rng rng = make_rng(seed, Stream::Instance, 0xfeed);
    return quadratic_family(M, 1.0, 1.0, 0.5, volumes, rng, 20);
}

std::string format_eps(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", eps);
    return buf;
}

std::string pass_word(bool ok) { return ok ? "PASS" : "FAIL"; }

SuiteOutcome from_report(const Report& r, std::string line) {
    SuiteOutcome o;
    o.report = report_to_json(r);
    o.passed = r.passed();
    o.lines.push_back(std::move(line) + " " + pass_word(o.passed));
    return o;
}

}  // namespace

SuiteOutcome run_suite(const std::string& name, const SuiteOptions& opt) {
    if (name == "all") {
        SuiteOutcome all;
        all.passed = true;
        all.report = nlohmann::json::array();
        for (const auto& n : suite_names()) {
            auto o = run_suite(n, opt);
            all.passed = all.passed && o.passed;
            all.report.push_back(o.report);
            all.lines.insert(all.lines.end(), o.lines.begin(), o.lines.end());
        }
        return all;
    }
    if (name == "s-step") {
        const auto r = check_s_step_lemma(opt.trials, opt.seed, opt.exec);
        return from_report(r, "s-step: trials=" + std::to_string(r.trials) + " violations=" + std::to_string(r.violations) +
                                  " maxRatio=" + std::to_string(r.max_ratio));
    }
    if (name == "prox") {
        const auto r = check_prox_lemma(opt.trials, opt.seed, opt.exec);
        return from_report(r, "prox: trials=" + std::to_string(r.trials) + " violations=" + std::to_string(r.violations) +
                                  " maxRatio=" + std::to_string(r.max_ratio));
    }
    if (name == "unbiased") {
        const auto inst = reference_quadratic(20, opt.seed);
        Rng rng = make_rng(opt.seed, Stream::Instance, 0xbeef);
        ModelVector theta = *inst.optimum;
        for (double& x : theta) x += std_normal(rng);
        const auto r = check_unbiased_sampling(inst, 5, theta, opt.draws > 0 ? opt.draws : 100000, opt.seed, opt.band, opt.exec);
        return from_report(r, "unbiased: M=20 K=5 draws=" + std::to_string(r.trials) +
                                  " max|z|=" + std::to_string(r.max_ratio * opt.band));
    }
    if (name == "selection-bias") {
        const double eps = opt.eps.value_or(0.4);
        const auto inst = reference_quadratic(20, opt.seed);
        const auto probes = selection_bias_probes(inst, 10, opt.seed);
        const auto r = check_selection_bias(inst, 10, eps, probes, opt.draws > 0 ? opt.draws : 10000, opt.seed, opt.band,
                                            opt.exec);
        return from_report(r, "selection-bias: M=20 K=10 eps=" + format_eps(eps) + " probes=10 maxRatio=" +
                                  std::to_string(r.max_ratio));
    }
    if (name == "lower-bound") {
        std::vector<double> eps_list = opt.eps ? std::vector<double>{*opt.eps} : std::vector<double>{0.25, 0.5};
        SuiteOutcome o;
        o.passed = true;
        nlohmann::json cases = nlohmann::json::array();
        for (double eps : eps_list) {
            const double gap = minimax_gap(eps, 1.0, 1.0);
            o.lines.push_back("minimax_gap = " + format_double(gap) + " (eps=" + format_eps(eps) + ", G=1, sigma=1)");
            for (auto variant : {LowerBoundVariant::StaticHetero, LowerBoundVariant::RandomNoisy}) {
                const auto pair = lower_bound_pair(variant, 20, eps, 1.0, 1.0, 1.0, 20);
                RunConfig cfg;
                cfg.algorithm = Algorithm::FedAvg;
                cfg.s = 5;
                cfg.T = 50;
                cfg.schedule.eta0 = 0.05;
                cfg.master_seed = opt.seed;
                cfg.exec = opt.exec;
                const auto h = indistinguishability_harness(pair, cfg);
                o.passed = o.passed && h.passed();
                auto j = harness_to_json(h);
                j["eps"] = eps;
                j["variant"] = variant_name(variant);
                cases.push_back(j);
                o.lines.push_back("indistinguishability " + variant_name(variant) + " eps=" + format_eps(eps) + " " +
                                  pass_word(h.passed()));
            }
        }
        o.report = {{"suite", "lower-bound"}, {"trials", cases.size()}, {"violations", o.passed ? 0 : 1},
                    {"maxRatio", 0.0}, {"pass", o.passed}, {"details", cases}};
        return o;
    }
    throw std::invalid_argument("unknown suite '" + name + "' (expected s-step|prox|unbiased|selection-bias|lower-bound|all)");
}

}  // namespace advfl
