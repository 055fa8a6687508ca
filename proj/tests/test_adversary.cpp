#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "advfl/adversary.hpp"
#include "advfl/engine.hpp"
#include "helpers.hpp"

using namespace advfl;

namespace {

FederationInstance volumes_instance(const std::vector<long>& n, int d = 2) {
    Rng rng(1);
    return quadratic_family(static_cast<int>(n.size()), 1.0, 1.0, 0.0, n, rng, d);
}

double dropped_volume(const FederationInstance& inst, const std::vector<int>& sampled, const std::vector<int>& kept) {
    double v = 0.0;
    for (int id : sampled)
        if (!std::binary_search(kept.begin(), kept.end(), id)) v += inst.clients[id].n;
    return v;
}

}  // namespace

TEST_SUITE("adversary") {

TEST_CASE("budget") {
    const auto b = DropoutBudget::make(0.5, 10, 100, 1000);
    CHECK(b.threshold == doctest::Approx(50.0));
    CHECK(b.allows(50.0));
    CHECK_FALSE(b.allows(50.1));
    CHECK(b.realized(25.0) == doctest::Approx(0.25));
    CHECK_THROWS(DropoutBudget::make(1.0, 10, 100, 1000));
    CHECK_THROWS(DropoutBudget::make(0.5, 11, 10, 1000));
}

TEST_CASE("none and static strategies") {
    const auto inst = volumes_instance(std::vector<long>(10, 1));
    const std::vector<int> sampled{0, 2, 3, 5, 7, 9};
    const auto budget = DropoutBudget::make(0.5, 6, 10, 10);  // 3 clients
    Rng rng(2);
    const std::vector<ModelVector> grads(sampled.size(), ModelVector(2, 0.0));
    AdversaryContext ctx{&inst, 0, sampled, grads, NoiseSource{0}};

    AdversaryConfig none;
    CHECK(select_dropouts(none, budget, ctx, rng) == sampled);

    AdversaryConfig st;
    st.kind = AdversaryKind::Static;
    st.eps = 0.5;
    st.keep_set = {0, 1, 2, 3, 4};
    // S^c in S~ = {5, 7, 9}: all three fit
    const auto kept = select_dropouts(st, budget, ctx, rng);
    CHECK(kept == std::vector<int>{0, 2, 3});

    const auto tight = DropoutBudget::make(0.2, 6, 10, 10);  // 1.2 clients
    CHECK(select_dropouts(st, tight, ctx, rng) == std::vector<int>{0, 2, 3, 7, 9});

    AdversaryConfig all_out;
    all_out.kind = AdversaryKind::Static;
    all_out.eps = 0.9;
    const auto wide = DropoutBudget::make(0.99, 6, 10, 10);
    CHECK(select_dropouts(all_out, wide, ctx, rng).size() == 1);
}

TEST_CASE("random strategy uses the round's keep set") {
    const auto inst = volumes_instance(std::vector<long>(20, 1));
    std::vector<int> sampled(20);
    std::iota(sampled.begin(), sampled.end(), 0);
    const std::vector<ModelVector> grads(20, ModelVector(2, 0.0));
    AdversaryConfig cfg;
    cfg.kind = AdversaryKind::Random;
    cfg.eps = 0.25;
    const auto budget = DropoutBudget::make(0.25, 20, 20, 20);
    Rng rng(3);
    for (int t = 0; t < 5; ++t) {
        AdversaryContext ctx{&inst, t, sampled, grads, NoiseSource{11}};
        CHECK(select_dropouts(cfg, budget, ctx, rng) == round_keep_set(NoiseSource{11}, t, 20, 15));
    }
}

TEST_CASE("shadow selection") {
    const auto inst = volumes_instance(std::vector<long>(10, 1));
    std::vector<int> sampled(10);
    std::iota(sampled.begin(), sampled.end(), 0);
    ShadowCandidates none_in;
    none_in.C1 = {};
    Rng rng(4);
    const auto budget = DropoutBudget::make(0.8, 10, 10, 10);
    CHECK(shadow_select(sampled, none_in, inst, budget, rng) == sampled);

    ShadowCandidates everyone;
    everyone.C1 = sampled;
    const auto kept = shadow_select(sampled, everyone, inst, budget, rng);
    CHECK(kept.size() == 2);

    const auto zero = DropoutBudget::make(0.0, 10, 10, 10);
    CHECK(shadow_select(sampled, everyone, inst, zero, rng) == sampled);

    // stop guard: never fewer than one survivor
    const auto huge = DropoutBudget::make(0.999, 10, 10, 10);
    CHECK(shadow_select(sampled, everyone, inst, huge, rng).size() >= 1);
}

TEST_CASE("shadow permutation depends only on the adversary rng") {
    const auto inst = volumes_instance(std::vector<long>{5, 1, 3, 2, 4, 1, 2, 6});
    std::vector<int> sampled{0, 1, 2, 3, 4, 5, 6, 7};
    ShadowCandidates c;
    c.C1 = {0, 2, 4, 6};
    c.C2 = {1, 3};
    const auto budget = DropoutBudget::make(0.5, 8, 8, inst.N);
    Rng a(9), b(9);
    CHECK(shadow_select(sampled, c, inst, budget, a) == shadow_select(sampled, c, inst, budget, b));
}

TEST_CASE("worst-case subset matches exhaustive enumeration") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<long> n(8);
        std::uniform_int_distribution<long> vol(1, 5);
        for (auto& x : n) x = vol(rng);
        const auto inst = volumes_instance(n, 3);
        std::vector<int> sampled{0, 1, 3, 4, 6, 7};
        std::vector<ModelVector> grads;
        for (std::size_t k = 0; k < sampled.size(); ++k) grads.push_back(testutil::randn(rng, 3));
        const auto budget = DropoutBudget::make(0.2 + 0.6 * uniform01(rng), 6, 8, inst.N);

        double best = 0.0;
        const int k = static_cast<int>(sampled.size());
        for (int mask = 1; mask < (1 << k); ++mask) {
            if (__builtin_popcount(mask) > k - 1) continue;
            double vol_sum = 0.0;
            ModelVector acc(3, 0.0);
            for (int j = 0; j < k; ++j)
                if (mask >> j & 1) {
                    vol_sum += inst.clients[sampled[j]].n;
                    axpy(inst.clients[sampled[j]].weight, grads[j], acc);
                }
            if (budget.allows(vol_sum)) best = std::max(best, norm(acc));
        }
        const auto drop = worst_case_subset(sampled, grads, inst, budget);
        ModelVector acc(3, 0.0);
        double vol_sum = 0.0;
        for (int id : drop) {
            const auto it = std::find(sampled.begin(), sampled.end(), id);
            REQUIRE(it != sampled.end());
            axpy(inst.clients[id].weight, grads[it - sampled.begin()], acc);
            vol_sum += inst.clients[id].n;
        }
        CHECK(budget.allows(vol_sum));
        CHECK(drop.size() < sampled.size());
        CHECK(norm(acc) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("worst-case subset examples") {
    const auto inst = volumes_instance(std::vector<long>{1, 1, 1});
    const std::vector<int> sampled{0, 1, 2};
    // colinear positive gradients of different size
    const std::vector<ModelVector> grads{ModelVector{1.0, 0.0}, ModelVector{3.0, 0.0}, ModelVector{2.0, 0.0}};
    CHECK(worst_case_subset(sampled, grads, inst, DropoutBudget::make(2.0 / 3.0, 3, 3, 3)) == std::vector<int>{1, 2});
    CHECK(worst_case_subset(sampled, grads, inst, DropoutBudget::make(0.0, 3, 3, 3)).empty());
    CHECK(worst_case_subset(sampled, grads, inst, DropoutBudget::make(1.0 / 3.0, 3, 3, 3)) == std::vector<int>{1});

    const std::vector<int> big(21, 0);
    const std::vector<ModelVector> g21(21, ModelVector(2, 0.0));
    CHECK_THROWS(worst_case_subset(big, g21, inst, DropoutBudget::make(0.5, 3, 3, 3)));
}

TEST_CASE("top-k ties by ascending id") {
    const std::vector<double> scores{1.0, 3.0, 3.0, 2.0, 3.0};
    const std::vector<int> all{0, 1, 2, 3, 4};
    CHECK(top_k(scores, 2, all) == std::vector<int>{1, 2});
    CHECK(top_k(scores, 10, all) == all);
    const std::vector<int> some{0, 3, 4};
    CHECK(top_k(scores, 2, some) == std::vector<int>{3, 4});
}

TEST_CASE("shadow candidates") {
    Rng rng(6);
    const auto inst = quadratic_family(12, 1.0, 1.0, 0.3, {}, rng, 4);
    RunConfig base;
    base.s = 2;
    base.K = 4;
    base.master_seed = 100;
    base.schedule.eta0 = 0.05;
    ShadowConfig sc{2, 10, 4, 3, 7, 8, 0};
    const auto c = build_shadow_candidates(inst, base, sc);
    CHECK(c.C1.size() == 4);
    CHECK(c.C2.size() == 3);
    for (int id : c.C2) CHECK(std::find(c.C1.begin(), c.C1.end(), id) == c.C1.end());
    CHECK(c.all().size() == 7);

    // the regular run's seed plays no role
    RunConfig other = base;
    other.master_seed = 999;
    const auto again = build_shadow_candidates(inst, other, sc);
    CHECK(again.C1 == c.C1);
    CHECK(again.C2 == c.C2);

    ShadowConfig every{2, 10, 12, 0, 7, 8, 0};
    CHECK(build_shadow_candidates(inst, base, every).all().size() == 12);

    ShadowConfig clash = sc;
    clash.seed_a = 100;
    CHECK_THROWS(build_shadow_candidates(inst, base, clash));
    ShadowConfig short_horizon = sc;
    short_horizon.horizon = 10;
    CHECK_THROWS(build_shadow_candidates(inst, base, short_horizon));
    CHECK(ShadowConfig{}.T1 == 5);
    CHECK(ShadowConfig{}.T2 == 150);
    CHECK(ShadowConfig{}.K1 == 25);
    CHECK(ShadowConfig{}.K2 == 10);
}

TEST_CASE("every strategy respects the budget over many rounds") {
    Rng rng(7);
    std::vector<long> n(16);
    for (int i = 0; i < 16; ++i) n[i] = 1 + (i * 7) % 5;
    const auto inst = quadratic_family(16, 1.0, 1.0, 0.2, n, rng, 3);
    for (auto kind : {AdversaryKind::None, AdversaryKind::Static, AdversaryKind::Random, AdversaryKind::Shadow,
                      AdversaryKind::Oracle}) {
        for (double eps : {0.1, 0.4, 0.8}) {
            AdversaryConfig cfg;
            cfg.kind = kind;
            cfg.eps = eps;
            cfg.keep_set = {0, 1, 2, 3};
            cfg.candidates.C1 = {4, 5, 6, 7, 8, 9, 10};
            cfg.candidates.C2 = {11, 12};
            const auto budget = DropoutBudget::make(eps, 8, 16, inst.N);
            for (int t = 0; t < 40; ++t) {
                Rng srng = make_rng(1, Stream::Sampling, t);
                const auto sampled = sample_clients(16, 8, srng);
                std::vector<ModelVector> grads;
                for (std::size_t k = 0; k < sampled.size(); ++k) grads.push_back(testutil::randn(rng, 3));
                AdversaryContext ctx{&inst, t, sampled, grads, NoiseSource{2}};
                Rng arng = make_rng(1, Stream::Adversary, t);
                const auto kept = select_dropouts(cfg, budget, ctx, arng);
                CHECK(!kept.empty());
                CHECK(std::includes(sampled.begin(), sampled.end(), kept.begin(), kept.end()));
                CHECK(budget.allows(dropped_volume(inst, sampled, kept)));
            }
        }
    }
}

TEST_CASE("names round trip") {
    for (auto k : {AdversaryKind::None, AdversaryKind::Static, AdversaryKind::Random, AdversaryKind::Shadow,
                   AdversaryKind::Oracle})
        CHECK(parse_adversary(adversary_name(k)) == k);
    CHECK_THROWS(parse_adversary("sneaky"));
}

}
