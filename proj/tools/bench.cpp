// Serial reference vs OpenMP kernels: wall time and bitwise agreement.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advfl/engine.hpp"
#include "advfl/verify.hpp"

using namespace advfl;

namespace {

template <class F>
double best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return best;
}

bool same_updates(const std::vector<ClientRoundResult>& a, const std::vector<ClientRoundResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto& x = a[k].update.delta;
        const auto& y = b[k].update.delta;
        if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

struct Row {
    std::string kernel;
    double serial;
    double parallel;
    bool identical;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs parallel kernels"};
    int reps = 3;
    int clients = 32;
    int trials = 2000;
    app.add_option("--reps", reps, "repetitions per kernel (best time is reported)");
    app.add_option("--clients", clients, "sampled clients in the local-round kernel");
    app.add_option("--trials", trials, "trials of the lemma kernel");
    CLI11_PARSE(app, argc, argv);

    std::vector<Row> rows;

    {
        Rng rng(1);
        const auto inst = synthetic_ab(1.0, 1.0, clients, rng);
        RunConfig cfg;
        cfg.s = 50;
        cfg.K = clients;
        std::vector<int> sampled(clients);
        for (int i = 0; i < clients; ++i) sampled[i] = i;
        const ModelVector theta(inst.dim, 0.0);
        std::vector<ClientRoundResult> a, b;
        const double ts = best_of(reps, [&] { a = compute_local_round(inst, cfg, sampled, 0, 0.01, theta, {}, ExecPolicy::Serial); });
        const double tp = best_of(reps, [&] { b = compute_local_round(inst, cfg, sampled, 0, 0.01, theta, {}, ExecPolicy::Parallel); });
        rows.push_back({"local round (softmax, s=50)", ts, tp, same_updates(a, b)});
    }
    {
        Report a, b;
        const double ts = best_of(reps, [&] { a = check_s_step_lemma(trials, 3, ExecPolicy::Serial); });
        const double tp = best_of(reps, [&] { b = check_s_step_lemma(trials, 3, ExecPolicy::Parallel); });
        rows.push_back({"s-step lemma", ts, tp, report_to_json(a) == report_to_json(b)});
    }
    {
        Rng rng(2);
        const auto inst = quadratic_family(20, 1.0, 1.0, 0.5, {}, rng, 20);
        const ModelVector theta(20, 0.2);
        Report a, b;
        const double ts = best_of(reps, [&] { a = check_unbiased_sampling(inst, 5, theta, 20000, 4, 4.0, ExecPolicy::Serial); });
        const double tp = best_of(reps, [&] { b = check_unbiased_sampling(inst, 5, theta, 20000, 4, 4.0, ExecPolicy::Parallel); });
        rows.push_back({"unbiased sampling", ts, tp, report_to_json(a) == report_to_json(b)});
    }

    std::printf("threads: %d\n", max_threads());
    std::printf("%-30s %12s %12s %8s %10s\n", "kernel", "serial [s]", "parallel [s]", "speedup", "identical");
    bool ok = true;
    for (const auto& r : rows) {
        std::printf("%-30s %12.4f %12.4f %8.2f %10s\n", r.kernel.c_str(), r.serial, r.parallel, r.serial / r.parallel,
                    r.identical ? "yes" : "NO");
        ok = ok && r.identical;
    }
    return ok ? 0 : 1;
}
