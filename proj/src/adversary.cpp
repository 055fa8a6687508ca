#include "advfl/adversary.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace advfl {

DropoutBudget DropoutBudget::make(double eps, int K, int M, long N) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("dropout budget: eps must lie in [0, 1)");
    if (K < 1 || M < K || N < 1) throw std::invalid_argument("dropout budget: need 1 <= K <= M and N >= 1");
    DropoutBudget b;
    b.eps = eps;
    b.K = K;
    b.M = M;
    b.N = N;
    b.threshold = eps * K * static_cast<double>(N) / M;
    return b;
}

bool DropoutBudget::allows(double dropped_volume) const { return dropped_volume <= threshold + 1e-9; }

double DropoutBudget::realized(double dropped_volume) const {
    return dropped_volume / (static_cast<double>(K) * static_cast<double>(N) / M);
}

std::string adversary_name(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::None: return "none";
        case AdversaryKind::Static: return "static";
        case AdversaryKind::Random: return "random";
        case AdversaryKind::Shadow: return "shadow";
        case AdversaryKind::Oracle: return "oracle";
    }
    return "none";
}

AdversaryKind parse_adversary(const std::string& s) {
    if (s == "none") return AdversaryKind::None;
    if (s == "static") return AdversaryKind::Static;
    if (s == "random") return AdversaryKind::Random;
    if (s == "shadow") return AdversaryKind::Shadow;
    if (s == "oracle") return AdversaryKind::Oracle;
    throw std::invalid_argument("unknown adversary.kind '" + s + "' (expected none|static|random|shadow|oracle)");
}

bool ShadowCandidates::contains(int client) const {
    return std::find(C1.begin(), C1.end(), client) != C1.end() || std::find(C2.begin(), C2.end(), client) != C2.end();
}

std::vector<int> ShadowCandidates::all() const {
    std::vector<int> c = C1;
    c.insert(c.end(), C2.begin(), C2.end());
    std::sort(c.begin(), c.end());
    return c;
}

std::vector<int> drop_in_order(std::span<const int> sampled, std::span<const int> drop_order,
                               const FederationInstance& inst, const DropoutBudget& budget) {
    std::vector<int> kept(sampled.begin(), sampled.end());
    double dropped = 0.0;
    for (int id : drop_order) {
        if (kept.size() <= 1) break;
        auto it = std::find(kept.begin(), kept.end(), id);
        if (it == kept.end()) continue;
        const double vol = dropped + static_cast<double>(inst.clients[id].n);
        if (!budget.allows(vol)) continue;
        dropped = vol;
        kept.erase(it);
    }
    return kept;
}

std::vector<int> shadow_select(std::span<const int> sampled, const ShadowCandidates& candidates,
                               const FederationInstance& inst, const DropoutBudget& budget, Rng& rng) {
    std::vector<int> order(sampled.begin(), sampled.end());
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> kept(sampled.begin(), sampled.end());
    double dropped = 0.0;
    for (int id : order) {
        if (kept.size() <= 1) break;
        if (!candidates.contains(id)) continue;
        const double vol = dropped + static_cast<double>(inst.clients[id].n);
        if (!budget.allows(vol)) continue;
        dropped = vol;
        kept.erase(std::find(kept.begin(), kept.end(), id));
    }
    return kept;
}

std::vector<int> worst_case_subset(std::span<const int> sampled, std::span<const ModelVector> gradients,
                                   const FederationInstance& inst, const DropoutBudget& budget) {
    const int k = static_cast<int>(sampled.size());
    if (k > 20) throw std::invalid_argument("worst_case_subset: exhaustive oracle limited to 20 sampled clients");
    if (static_cast<int>(gradients.size()) != k) throw std::invalid_argument("worst_case_subset: gradients misaligned");
    if (k == 0) return {};
    const std::size_t d = gradients.front().size();

    // depth-first over include/exclude with partial sums per depth
    std::vector<ModelVector> partial(k + 1, ModelVector(d, 0.0));
    std::vector<int> chosen;
    std::vector<int> best;
    double best_norm = 0.0;

    auto recurse = [&](auto&& self, int idx, double volume) -> void {
        if (idx == k) {
            if (chosen.empty()) return;
            const double nrm = norm_sq(partial[idx]);
            if (nrm > best_norm) {
                best_norm = nrm;
                best = chosen;
            }
            return;
        }
        partial[idx + 1] = partial[idx];
        self(self, idx + 1, volume);

        const int id = sampled[idx];
        const double vol = volume + static_cast<double>(inst.clients[id].n);
        if (static_cast<int>(chosen.size()) + 1 <= k - 1 && budget.allows(vol)) {
            partial[idx + 1] = partial[idx];
            axpy(inst.clients[id].weight, gradients[idx], partial[idx + 1]);
            chosen.push_back(id);
            self(self, idx + 1, vol);
            chosen.pop_back();
        }
    };
    recurse(recurse, 0, 0.0);
    return best;
}

std::vector<int> farthest_center_keep_set(const FederationInstance& inst, int drop_count) {
    if (!inst.optimum) throw std::invalid_argument("farthest-center keep set needs a known optimum");
    std::vector<double> dist(inst.M, 0.0);
    for (const auto& c : inst.clients) {
        const auto* q = std::get_if<IsotropicQuadratic>(&c.objective.kind);
        if (!q) throw std::invalid_argument("farthest-center keep set needs isotropic quadratic clients");
        dist[c.id] = dist_sq(q->center, *inst.optimum);
    }
    std::vector<int> all(inst.M);
    std::iota(all.begin(), all.end(), 0);
    const auto dropped = top_k(dist, drop_count, all);
    std::vector<int> keep;
    for (int i = 0; i < inst.M; ++i)
        if (std::find(dropped.begin(), dropped.end(), i) == dropped.end()) keep.push_back(i);
    return keep;
}

std::vector<int> top_k(std::span<const double> scores, int k, std::span<const int> eligible) {
    std::vector<int> ids(eligible.begin(), eligible.end());
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    if (k < static_cast<int>(ids.size())) ids.resize(std::max(k, 0));
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<int> select_dropouts(const AdversaryConfig& cfg, const DropoutBudget& budget, const AdversaryContext& ctx,
                                 Rng& rng) {
    const auto& inst = *ctx.instance;
    const std::vector<int> all(ctx.sampled.begin(), ctx.sampled.end());
    switch (cfg.kind) {
        case AdversaryKind::None: return all;
        case AdversaryKind::Static: {
            std::vector<int> order;
            for (int id : ctx.sampled)
                if (!std::binary_search(cfg.keep_set.begin(), cfg.keep_set.end(), id)) order.push_back(id);
            return drop_in_order(ctx.sampled, order, inst, budget);
        }
        case AdversaryKind::Random: {
            const auto keep = round_keep_set(ctx.noise, ctx.round, inst.M, keep_count(cfg.eps, inst.M));
            std::vector<int> order;
            for (int id : ctx.sampled)
                if (!std::binary_search(keep.begin(), keep.end(), id)) order.push_back(id);
            return drop_in_order(ctx.sampled, order, inst, budget);
        }
        case AdversaryKind::Shadow: return shadow_select(ctx.sampled, cfg.candidates, inst, budget, rng);
        case AdversaryKind::Oracle: {
            const auto drop = worst_case_subset(ctx.sampled, ctx.gradients, inst, budget);
            std::vector<int> kept;
            for (int id : ctx.sampled)
                if (std::find(drop.begin(), drop.end(), id) == drop.end()) kept.push_back(id);
            return kept;
        }
    }
    return all;
}

}  // namespace advfl
