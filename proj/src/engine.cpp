#include "advfl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace advfl {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::FedAvg: return "fedavg";
        case Algorithm::FedProx: return "fedprox";
        case Algorithm::Mifa: return "mifa";
        case Algorithm::CClip: return "cclip";
        case Algorithm::GM: return "gm";
        case Algorithm::CClipBucket: return "cclip-bucket";
        case Algorithm::GMBucket: return "gm-bucket";
    }
    return "fedavg";
}

Algorithm parse_algorithm(const std::string& s) {
    for (Algorithm a : {Algorithm::FedAvg, Algorithm::FedProx, Algorithm::Mifa, Algorithm::CClip, Algorithm::GM,
                        Algorithm::CClipBucket, Algorithm::GMBucket})
        if (algorithm_name(a) == s) return a;
    throw std::invalid_argument("unknown algorithm '" + s + "' (expected fedavg|fedprox|mifa|cclip|gm|cclip-bucket|gm-bucket)");
}

bool uses_momentum(Algorithm a) {
    return a == Algorithm::CClip || a == Algorithm::GM || a == Algorithm::CClipBucket || a == Algorithm::GMBucket;
}

void Schedule::validate() const {
    switch (kind) {
        case Kind::Constant:
        case Kind::InvSqrt:
            if (!(eta0 > 0.0)) throw std::invalid_argument("schedule.eta0 must be > 0");
            break;
        case Kind::InvLinear:
            if (!(theta0 > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("schedule.theta0 and schedule.gamma must be > 0");
            break;
    }
}

double learning_rate(const Schedule& sched, int t) {
    if (t < 0) throw std::invalid_argument("learning_rate: t must be >= 0");
    switch (sched.kind) {
        case Schedule::Kind::Constant: return sched.eta0;
        case Schedule::Kind::InvSqrt: return sched.eta0 / std::sqrt(static_cast<double>(t) + 1.0);
        case Schedule::Kind::InvLinear: return sched.theta0 / (static_cast<double>(t) + sched.gamma);
    }
    return sched.eta0;
}

double corollary_eta0(const HeterogeneityProfile& profile, double beta, int s, double p, int T) {
    const double a = 1.0 / (10.0 * beta * s * profile.L * profile.B * profile.B);
    const double spread = profile.G + profile.sigma;
    if (spread <= 0.0) return a;
    const double horizon = T > 0 ? static_cast<double>(T) : 1.0;
    const double b = 1.0 / (beta * std::sqrt(p * horizon * profile.L) * spread);
    return std::min(a, b);
}

int RunConfig::effective_s() const {
    if (algorithm == Algorithm::FedProx || uses_momentum(algorithm)) return 1;
    return s;
}

void RunConfig::validate(const FederationInstance& inst) const {
    if (K < 1 || K > inst.M) throw std::invalid_argument("algorithm.K must satisfy 1 <= K <= M");
    if (T < 1) throw std::invalid_argument("algorithm.T must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("algorithm.beta must be > 0");
    if (s < 1) throw std::invalid_argument("algorithm.s must be >= 1");
    schedule.validate();
    if (!(adversary.eps >= 0.0 && adversary.eps < 1.0)) throw std::invalid_argument("adversary.eps must lie in [0, 1)");
    if (adversary.kind == AdversaryKind::Oracle && K > 20)
        throw std::invalid_argument("adversary.kind=oracle needs K <= 20");
    if (adversary.kind == AdversaryKind::Shadow && !adversary.candidates &&
        (adversary.shadow.seed_a == master_seed || adversary.shadow.seed_b == master_seed))
        throw std::invalid_argument("adversary.shadow seeds must differ from the run's master seed");
    if ((algorithm == Algorithm::CClipBucket || algorithm == Algorithm::GMBucket) && buckets < 1)
        throw std::invalid_argument("algorithm.buckets must be >= 1");
    if (!(momentum_beta0 >= 0.0 && momentum_beta0 < 1.0)) throw std::invalid_argument("algorithm.momentum must lie in [0, 1)");
    if (theta0 && theta0->size() != static_cast<std::size_t>(inst.dim))
        throw std::invalid_argument("algorithm.theta0 has the wrong dimension");
}

nlohmann::json round_log_to_json(const RoundLog& log) {
    nlohmann::json j{{"t", log.t},
                     {"gradNormSq", log.grad_norm_sq},
                     {"epsRealized", log.eps_realized},
                     {"sampledSet", log.sampled},
                     {"participatingSet", log.participating},
                     {"trainLoss", log.train_loss},
                     {"eta", log.eta}};
    j["distSq"] = log.dist_sq ? nlohmann::json(*log.dist_sq) : nlohmann::json(nullptr);
    return j;
}

PopulationEvaluator::PopulationEvaluator(const FederationInstance& inst) : inst_(&inst) {
    if (inst.analytic()) return;
    for (const auto& c : inst.clients) {
        const auto* model = std::get_if<SoftmaxRegression>(&c.objective.kind);
        if (!model) throw std::invalid_argument("population metrics: mixed analytic and softmax clients");
        RoundLoss loss;
        loss.client_id = c.id;
        loss.round = -1;
        loss.realization = draw_softmax_batch(*model, static_cast<int>(c.n),
                                              derive_seed(inst.eval_seed, Stream::Instance, static_cast<std::uint64_t>(c.id)));
        eval_.push_back(std::move(loss));
    }
}

ModelVector PopulationEvaluator::gradient(const ModelVector& theta) const {
    if (eval_.empty()) return global_gradient(*inst_, theta);
    ModelVector g(theta.size(), 0.0);
    for (const auto& loss : eval_) axpy(inst_->clients[loss.client_id].weight, advfl::gradient(loss, theta), g);
    return g;
}

PopulationEvaluator::Metrics PopulationEvaluator::operator()(const ModelVector& theta) const {
    Metrics m;
    m.grad_norm_sq = norm_sq(gradient(theta));
    if (eval_.empty()) {
        for (const auto& c : inst_->clients) m.train_loss += c.weight * population_value(c.objective, theta);
    } else {
        for (const auto& loss : eval_) m.train_loss += inst_->clients[loss.client_id].weight * value(loss, theta);
    }
    if (inst_->optimum) m.dist_sq = dist_sq(theta, *inst_->optimum);
    return m;
}

PopulationEvaluator::Metrics population_metrics(const FederationInstance& inst, const ModelVector& theta) {
    return PopulationEvaluator(inst)(theta);
}

std::vector<int> sample_clients(int M, int K, Rng& rng) {
    if (K < 1 || K > M) throw std::invalid_argument("sample_clients: need 1 <= K <= M");
    std::vector<int> ids(M);
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < K; ++k) {
        std::uniform_int_distribution<int> pick(k, M - 1);
        std::swap(ids[k], ids[pick(rng)]);
    }
    ids.resize(K);
    std::sort(ids.begin(), ids.end());
    return ids;
}

int random_stop(const Schedule& sched, int T, Rng& rng) {
    if (T <= 0) return 0;
    std::vector<double> cum(T + 1);
    double total = 0.0;
    for (int k = 0; k <= T; ++k) {
        total += learning_rate(sched, k);
        cum[k] = total;
    }
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    return std::min(static_cast<int>(it - cum.begin()), T);
}

std::vector<ClientRoundResult> compute_local_round(const FederationInstance& inst, const RunConfig& cfg,
                                                   std::span<const int> sampled, int t, double eta,
                                                   const ModelVector& theta, std::span<const ModelVector> momenta,
                                                   ExecPolicy policy) {
    std::vector<ClientRoundResult> out(sampled.size());
    const NoiseSource noise{cfg.master_seed};
    const int s = cfg.effective_s();
    for_each_index(policy, static_cast<int>(sampled.size()), [&](int k) {
        const ClientSpec& client = inst.clients[sampled[k]];
        ClientRoundResult& r = out[k];
        r.loss = draw_round_loss(client, t, noise);
        r.first_gradient = gradient(r.loss, theta);
        switch (cfg.algorithm) {
            case Algorithm::FedAvg:
            case Algorithm::Mifa: r.update = fedavg_local(r.loss, theta, eta, s); break;
            case Algorithm::FedProx:
                r.update = fedprox_local(r.loss, theta, eta, cfg.prox_inner, inst.profile.L_minus);
                break;
            default: r.update = momentum_step(r.loss, theta, momenta[client.id], cfg.momentum_beta0, eta); break;
        }
    });
    return out;
}

namespace {

AdversaryConfig resolve_adversary(const FederationInstance& inst, const RunConfig& cfg) {
    AdversaryConfig adv;
    adv.kind = cfg.adversary.kind;
    adv.eps = cfg.adversary.eps;
    if (adv.kind == AdversaryKind::Static) {
        const auto& mode = cfg.adversary.static_set;
        if (mode == "prefix") {
            for (int i = 0; i < keep_count(adv.eps, inst.M); ++i) adv.keep_set.push_back(i);
        } else if (mode == "farthest") {
            adv.keep_set = farthest_center_keep_set(inst, inst.M - keep_count(adv.eps, inst.M));
        } else if (mode == "explicit") {
            adv.keep_set = cfg.adversary.keep_set;
            std::sort(adv.keep_set.begin(), adv.keep_set.end());
        } else {
            throw std::invalid_argument("adversary.static_set must be prefix|farthest|explicit");
        }
    }
    if (adv.kind == AdversaryKind::Shadow)
        adv.candidates = cfg.adversary.candidates ? *cfg.adversary.candidates
                                                  : build_shadow_candidates(inst, cfg, cfg.adversary.shadow);
    return adv;
}

}  // namespace

RunResult run(const FederationInstance& inst, const RunConfig& cfg, const RoundObserver& observer) {
    inst.validate();
    cfg.validate(inst);

    const int M = inst.M;
    const std::size_t dim = static_cast<std::size_t>(inst.dim);
    const bool momentum_algo = uses_momentum(cfg.algorithm);
    const bool mifa = cfg.algorithm == Algorithm::Mifa;

    std::vector<double> weights(M);
    for (const auto& c : inst.clients) weights[c.id] = c.weight;

    const PopulationEvaluator evaluate(inst);
    const DropoutBudget budget = DropoutBudget::make(cfg.adversary.eps, cfg.K, M, inst.N);
    const AdversaryConfig adversary = resolve_adversary(inst, cfg);

    RunResult result;
    {
        Rng stop_rng = make_rng(cfg.master_seed, Stream::Stopping);
        result.R = random_stop(cfg.schedule, cfg.T, stop_rng);
    }

    ModelVector theta = cfg.theta0 ? *cfg.theta0 : ModelVector(dim, 0.0);
    if (result.R == 0) result.theta_R = theta;

    UpdateCache mifa_cache(mifa ? M : 0, dim);
    std::vector<ModelVector> momenta(momentum_algo ? M : 0, ModelVector(dim, 0.0));
    UpdateCache momentum_cache(momentum_algo ? M : 0, dim);
    ModelVector center(dim, 0.0);

    std::vector<int> everyone(M);
    std::iota(everyone.begin(), everyone.end(), 0);

    result.trajectory.reserve(cfg.T);
    for (int t = 0; t < cfg.T; ++t) {
        const double eta = learning_rate(cfg.schedule, t);
        const auto metrics = evaluate(theta);

        const bool exempt = mifa && t == 0;
        std::vector<int> sampled;
        if (exempt) {
            sampled = everyone;
            result.mifa_round0_exempt = true;
        } else {
            Rng rng = make_rng(cfg.master_seed, Stream::Sampling, static_cast<std::uint64_t>(t));
            sampled = sample_clients(M, cfg.K, rng);
        }

        const auto results = compute_local_round(inst, cfg, sampled, t, eta, theta, momenta, cfg.exec);

        std::vector<int> participating;
        if (exempt) {
            participating = sampled;
        } else {
            std::vector<ModelVector> grads;
            grads.reserve(results.size());
            for (const auto& r : results) grads.push_back(r.first_gradient);
            AdversaryContext ctx{&inst, t, sampled, grads, NoiseSource{cfg.master_seed}};
            Rng adv_rng = make_rng(cfg.master_seed, Stream::Adversary, static_cast<std::uint64_t>(t));
            participating = select_dropouts(adversary, budget, ctx, adv_rng);
        }

        // budget invariant
        if (participating.empty()) throw std::logic_error("round " + std::to_string(t) + ": empty participating set");
        double dropped = 0.0;
        for (int id : sampled)
            if (!std::binary_search(participating.begin(), participating.end(), id)) dropped += inst.clients[id].n;
        for (int id : participating)
            if (!std::binary_search(sampled.begin(), sampled.end(), id))
                throw std::logic_error("round " + std::to_string(t) + ": participant outside the sampled set");
        if (!exempt && !budget.allows(dropped))
            throw std::logic_error("round " + std::to_string(t) + ": adversary exceeded its dropout budget");

        std::vector<LocalUpdate> active;
        for (std::size_t k = 0; k < sampled.size(); ++k)
            if (std::binary_search(participating.begin(), participating.end(), sampled[k])) {
                active.push_back(results[k].update);
                result.max_prox_residual = std::max(result.max_prox_residual, results[k].update.prox_residual);
            }

        ModelVector next;
        switch (cfg.algorithm) {
            case Algorithm::FedAvg:
            case Algorithm::FedProx: next = amplified_mean(theta, active, weights, cfg.beta); break;
            case Algorithm::Mifa: next = mifa_update(theta, mifa_cache, active, eta, weights); break;
            default: {
                for (const auto& up : active) {
                    momenta[up.client_id] = *up.momentum;
                    momentum_cache.write(up.client_id, *up.momentum);
                }
                std::vector<ModelVector> points;
                std::vector<double> pw;
                for (int i = 0; i < M; ++i)
                    if (momentum_cache.initialized(i)) {
                        points.push_back(momentum_cache.read(i));
                        pw.push_back(weights[i]);
                    }
                if (cfg.algorithm == Algorithm::CClipBucket || cfg.algorithm == Algorithm::GMBucket) {
                    Rng brng = make_rng(cfg.master_seed, Stream::Sampling, static_cast<std::uint64_t>(t), 1);
                    const int nb = std::min<int>(cfg.buckets, static_cast<int>(points.size()));
                    Buckets b = bucketize(points, pw, nb, brng);
                    points = std::move(b.means);
                    pw = std::move(b.weights);
                }
                ModelVector agg;
                if (cfg.algorithm == Algorithm::CClip || cfg.algorithm == Algorithm::CClipBucket) {
                    agg = cclip(points, pw, center, cfg.cclip.tau, cfg.cclip.iters);
                } else {
                    auto gm = geometric_median(points, pw, cfg.gm.smoothing, cfg.gm.tol, cfg.gm.max_iter);
                    if (!gm.converged) ++result.gm_nonconverged;
                    agg = std::move(gm.point);
                }
                center = agg;
                next = theta;
                axpy(-eta, agg, next);
                break;
            }
        }
        if (!next.all_finite()) throw DivergenceError(t, -1, "global model");

        RoundLog log;
        log.t = t;
        log.grad_norm_sq = metrics.grad_norm_sq;
        log.dist_sq = metrics.dist_sq;
        log.eps_realized = exempt ? 0.0 : budget.realized(dropped);
        log.train_loss = metrics.train_loss;
        log.eta = eta;
        log.sampled = sampled;
        log.participating = participating;
        result.trajectory.push_back(std::move(log));

        if (observer) observer(RoundObservation{t, eta, &theta, sampled, participating, results});

        theta = std::move(next);
        if (t + 1 == result.R) result.theta_R = theta;
    }
    result.theta_final = theta;
    return result;
}

double tail_mean(std::span<const RoundLog> traj, double fraction, bool use_dist) {
    if (traj.empty()) throw std::invalid_argument("tail_mean: empty trajectory");
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * traj.size())));
    double s = 0.0;
    for (std::size_t k = traj.size() - n; k < traj.size(); ++k) {
        if (use_dist && !traj[k].dist_sq) throw std::invalid_argument("tail_mean: dist_sq unavailable");
        s += use_dist ? *traj[k].dist_sq : traj[k].grad_norm_sq;
    }
    return s / static_cast<double>(n);
}

}  // namespace advfl
