// Acceptance suite: one PASS/FAIL line per criterion.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advfl/config.hpp"
#include "advfl/verify.hpp"
#include "helpers.hpp"

using namespace advfl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> body;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

json load_config(const std::string& name) { return load_json_file(fs::path(ADVFL_ACCEPT_DIR) / name); }

Experiment with_seed(const json& base, std::uint64_t seed) {
    json cfg = base;
    set_dotted(cfg, "seeds.master", seed);
    cfg["seeds"].erase("list");
    return parse_experiment(cfg);
}

Outcome suite(const std::string& name, const SuiteOptions& opt) {
    const auto o = run_suite(name, opt);
    std::string detail;
    for (const auto& l : o.lines) detail += (detail.empty() ? "" : "; ") + l;
    return {o.passed, detail};
}

Outcome lemma_s_step() {
    SuiteOptions opt;
    opt.trials = 10000;
    return suite("s-step", opt);
}

Outcome lemma_prox() {
    SuiteOptions opt;
    opt.trials = 10000;
    return suite("prox", opt);
}

Outcome unbiased() { return suite("unbiased", {}); }

Outcome selection_bias() { return suite("selection-bias", {}); }

Outcome lower_bound() {
    Outcome o = suite("lower-bound", {});
    const double gap = minimax_gap(0.5, 1.0, 1.0);
    o.pass = o.pass && gap == 0.25;
    o.detail += "; minimax_gap(0.5, 1, 1) = " + format_double(gap);
    return o;
}

Outcome strongly_convex_rate() {
    const json base = load_config("rate_strongly_convex.json");
    std::vector<double> slopes;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ex = with_seed(base, seed);
        slopes.push_back(convergence_slope(run(ex.instance, ex.run).trajectory, true, 0.5));
    }
    const double m = median(slopes);
    return {m <= -0.8, "median slope " + fmt(m) + " (<= -0.8), seeds " + join(slopes)};
}

Outcome nonconvex_rate() {
    const json base = load_config("rate_nonconvex.json");
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ex = with_seed(base, seed);
        const auto traj = run(ex.instance, ex.run).trajectory;
        double early = 0.0, late = 0.0;
        for (int t = 0; t < 4000; ++t) {
            late += traj[t].grad_norm_sq;
            if (t < 1000) early += traj[t].grad_norm_sq;
        }
        ratios.push_back((late / 4000.0) / (early / 1000.0));
    }
    const double m = median(ratios);
    return {m <= 0.6, "median avg(T=4000)/avg(T=1000) " + fmt(m) + " (<= 0.6), seeds " + join(ratios)};
}

Outcome plateau() {
    const json base = load_config("plateau.json");
    const std::vector<double> eps{0.0, 0.1, 0.2, 0.4};
    std::vector<double> medians;
    bool pass = true;
    std::string detail;
    for (double e : eps) {
        std::vector<double> tails;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            json cfg = base;
            cfg["adversary"]["eps"] = e;
            const auto ex = with_seed(cfg, seed);
            tails.push_back(tail_mean(run(ex.instance, ex.run).trajectory, 0.5, true));
        }
        const double m = median(tails);
        if (!medians.empty() && !(m > medians.back())) pass = false;
        if (e > 0.0) {
            const auto& prof = with_seed(base, 1).instance.profile;
            const double floor = minimax_gap(e, prof.G, prof.sigma) / (prof.mu * prof.mu) * 0.01;
            if (!(m > floor)) pass = false;
            detail += " eps=" + fmt(e) + ": " + fmt(m) + " > floor " + fmt(floor) + ";";
        } else {
            detail += " eps=0: " + fmt(m) + ";";
        }
        medians.push_back(m);
    }
    return {pass, "tail distSq medians" + detail};
}

Outcome aggregators() {
    bool pass = true;
    std::string detail;

    const std::vector<ModelVector> tri{ModelVector{0.0, 0.0}, ModelVector{1.0, 0.0}, ModelVector{0.0, 1.0}};
    const std::vector<double> w3{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const GeoMedianConfig gcfg;
    const auto gm = geometric_median(tri, w3, gcfg.smoothing, gcfg.tol, gcfg.max_iter);
    const ModelVector grid = testutil::grid_median(tri, w3, 400);
    const double gm_err = std::max(std::abs(gm.point[0] - grid[0]), std::abs(gm.point[1] - grid[1]));
    pass = pass && gm.converged && gm_err <= 5e-3;
    detail += "gm vs grid " + fmt(gm_err) + " (<= 5e-3)";

    Rng rng(2024);
    double clip_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ModelVector> pts;
        std::vector<double> w;
        double total = 0.0;
        for (int i = 0; i < 6; ++i) {
            pts.push_back(testutil::randn(rng, 10));
            w.push_back(0.1 + uniform01(rng));
            total += w.back();
        }
        for (double& x : w) x /= total;
        ModelVector mean(10, 0.0);
        for (int i = 0; i < 6; ++i) axpy(w[i], pts[i], mean);
        const ModelVector v = cclip(pts, w, testutil::randn(rng, 10), 1e6, 1);
        clip_err = std::max(clip_err, norm(v - mean));
    }
    pass = pass && clip_err <= 1e-12;
    detail += "; cclip vs mean " + fmt(clip_err) + " (<= 1e-12)";

    const int M = 8, T = 100, d = 4;
    const double eta = 0.1;
    std::vector<double> w(M, 1.0 / M);
    UpdateCache cache(M, d);
    std::vector<ModelVector> last(M);
    ModelVector theta(d, 0.0);
    bool replay_ok = true;
    for (int t = 0; t < T && replay_ok; ++t) {
        std::vector<LocalUpdate> active;
        for (int i = 0; i < M; ++i)
            if (t == 0 || (t + 3 * i) % (i + 2) == 0) {
                const ModelVector delta = testutil::randn(rng, d, 0.1);
                active.push_back(testutil::update_from_delta(i, theta, delta));
                last[i] = (-1.0 / eta) * delta;
            }
        ModelVector expect = theta;
        for (int i = 0; i < M; ++i) axpy(-eta * w[i], last[i], expect);
        const ModelVector next = mifa_update(theta, cache, active, eta, w);
        for (int i = 0; i < M; ++i) replay_ok = replay_ok && cache.read(i) == last[i];
        replay_ok = replay_ok && norm(next - expect) <= 1e-12;
        theta = next;
    }
    pass = pass && replay_ok;
    detail += std::string("; mifa replay over ") + std::to_string(T) + " rounds " + (replay_ok ? "ok" : "mismatch");
    return {pass, detail};
}

Outcome shadow_scheme() {
    const json base = load_config("shadow_scheme.json");
    std::vector<double> naive, amplified;
    double max_eps = 0.0;
    std::size_t min_participants = SIZE_MAX;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto ex = with_seed(base, seed);
        // the shadow runs never see beta, so both arms share one candidate set
        ex.run.adversary.candidates = build_shadow_candidates(ex.instance, ex.run, ex.run.adversary.shadow);
        for (double beta : {1.0, 3.0}) {
            ex.run.beta = beta;
            const auto res = run(ex.instance, ex.run);
            for (const auto& log : res.trajectory) {
                max_eps = std::max(max_eps, log.eps_realized);
                min_participants = std::min(min_participants, log.participating.size());
            }
            (beta == 1.0 ? naive : amplified).push_back(res.trajectory.back().train_loss);
        }
    }
    const double mn = median(naive), ma = median(amplified);
    const bool pass = max_eps <= 0.7 + 1e-12 && min_participants >= 1 && ma <= mn + 0.02;
    return {pass, "max eps_t " + fmt(max_eps) + " (<= 0.7), min |S_t| " + std::to_string(min_participants) +
                      ", median final loss beta=3 " + fmt(ma) + " vs beta=1 " + fmt(mn) + " (+0.02), beta=1 " +
                      join(naive) + " beta=3 " + join(amplified)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ADVFL_CLI_PATH) + ' ' + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "advfl_acceptance_determinism";
    fs::remove_all(dir);
    const std::string cfg = (fs::path(ADVFL_ACCEPT_DIR) / "determinism.json").string();
    const int a = run_cli("run --config " + cfg + " --out " + (dir / "a").string());
    const int b = run_cli("run --config " + cfg + " --out " + (dir / "b").string());
    if (a != 0 || b != 0) return {false, "cli exit codes " + std::to_string(a) + ", " + std::to_string(b)};
    const std::string ja = slurp(dir / "a" / "run.jsonl"), ca = slurp(dir / "a" / "run.csv");
    const bool same = !ja.empty() && !ca.empty() && ja == slurp(dir / "b" / "run.jsonl") && ca == slurp(dir / "b" / "run.csv");
    return {same, "jsonl " + std::to_string(ja.size()) + " bytes, csv " + std::to_string(ca.size()) + " bytes, " +
                      (same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::string report_path;
    app.add_option("--only", only, "criterion ids to run (default: all)");
    app.add_option("--report", report_path, "also write the result lines to this file");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "s-step deviation bound", 30, lemma_s_step},
        {2, "proximal deviation bound", 30, lemma_prox},
        {3, "unbiased client sampling", 60, unbiased},
        {4, "selection bias bound", 300, selection_bias},
        {5, "lower-bound indistinguishability", 60, lower_bound},
        {6, "strongly convex rate", 120, strongly_convex_rate},
        {7, "nonconvex rate", 120, nonconvex_rate},
        {8, "plateau grows with eps", 300, plateau},
        {9, "aggregator oracles", 60, aggregators},
        {10, "shadow adversary scheme", 600, shadow_scheme},
        {11, "cli determinism", 60, determinism},
    };
    const std::set<int> selected(only.begin(), only.end());

    std::ofstream report;
    if (!report_path.empty()) report.open(report_path);
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failures;
        std::ostringstream line;
        line << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
             << fmt(secs) << " s, limit " << fmt(c.limit_seconds) << " s" << (in_time ? "" : ", over limit") << "]";
        std::cout << line.str() << std::endl;
        if (report) report << line.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
