#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "advfl/adversary.hpp"
#include "advfl/engine.hpp"

namespace advfl {

namespace {

// per-client norm of the round signal at T1 and T2 in a full-participation run
struct SignalWindow {
    std::vector<double> at_t1;
    std::vector<double> at_t2;
};

SignalWindow record_signal(const FederationInstance& inst, RunConfig cfg, const ShadowConfig& sc, bool momentum) {
    SignalWindow w{std::vector<double>(inst.M, 0.0), std::vector<double>(inst.M, 0.0)};
    cfg.K = inst.M;
    cfg.adversary = AdversarySettings{};
    cfg.T = sc.horizon > 0 ? sc.horizon : sc.T2 + 1;
    cfg.theta0.reset();
    run(inst, cfg, [&](const RoundObservation& obs) {
        if (obs.t != sc.T1 && obs.t != sc.T2) return;
        auto& dst = obs.t == sc.T1 ? w.at_t1 : w.at_t2;
        for (std::size_t k = 0; k < obs.sampled.size(); ++k) {
            const auto& up = obs.results[k].update;
            // FedAvg: sum of local gradients = -delta / eta
            dst[obs.sampled[k]] = momentum ? norm(*up.momentum) : norm(up.delta) / obs.eta;
        }
    });
    return w;
}

}  // namespace

ShadowCandidates build_shadow_candidates(const FederationInstance& inst, const RunConfig& base, const ShadowConfig& cfg) {
    const int horizon = cfg.horizon > 0 ? cfg.horizon : cfg.T2 + 1;
    if (cfg.T1 < 0 || cfg.T1 >= cfg.T2) throw std::invalid_argument("shadow: need 0 <= T1 < T2");
    if (cfg.T2 >= horizon) throw std::invalid_argument("shadow: T2 exceeds the shadow horizon");
    if (cfg.seed_a == base.master_seed || cfg.seed_b == base.master_seed)
        throw std::invalid_argument("shadow: seeds must differ from the regular run's seed");
    if (cfg.K1 < 0 || cfg.K2 < 0) throw std::invalid_argument("shadow: K1 and K2 must be >= 0");

    RunConfig fedavg = base;
    fedavg.algorithm = Algorithm::FedAvg;
    fedavg.beta = 1.0;
    fedavg.master_seed = cfg.seed_a;
    const auto a = record_signal(inst, fedavg, cfg, false);

    std::vector<double> delta(inst.M);
    for (int i = 0; i < inst.M; ++i) delta[i] = std::abs(a.at_t2[i] - a.at_t1[i]);
    std::vector<int> everyone(inst.M);
    std::iota(everyone.begin(), everyone.end(), 0);

    ShadowCandidates c;
    c.T1 = cfg.T1;
    c.T2 = cfg.T2;
    c.C1 = top_k(delta, cfg.K1, everyone);

    RunConfig clip = base;
    clip.algorithm = Algorithm::CClip;
    clip.master_seed = cfg.seed_b;
    const auto b = record_signal(inst, clip, cfg, true);

    std::vector<int> rest;
    for (int i = 0; i < inst.M; ++i)
        if (!std::binary_search(c.C1.begin(), c.C1.end(), i)) rest.push_back(i);
    std::vector<double> mchange(inst.M);
    for (int i = 0; i < inst.M; ++i) mchange[i] = std::abs(b.at_t2[i] - b.at_t1[i]);
    c.C2 = top_k(mchange, cfg.K2, rest);
    return c;
}

std::string exec_name(ExecPolicy p) { return p == ExecPolicy::Serial ? "serial" : "parallel"; }

ExecPolicy parse_exec(const std::string& s) {
    if (s == "serial") return ExecPolicy::Serial;
    if (s == "parallel") return ExecPolicy::Parallel;
    throw std::invalid_argument("unknown exec policy '" + s + "' (expected serial|parallel)");
}

}  // namespace advfl
