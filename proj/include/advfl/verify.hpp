#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "advfl/datagen.hpp"
#include "advfl/engine.hpp"
#include "advfl/parallel.hpp"

namespace advfl {

struct Report {
    std::string suite;
    int trials = 0;
    int violations = 0;
    double max_ratio = 0.0;
    nlohmann::json details = nlohmann::json::array();

    bool passed() const { return violations == 0; }
};

nlohmann::json report_to_json(const Report& r);

/// s-step deviation bound on random quadratic and softmax losses with
/// s in {1..8} and eta <= 0.1/(sL). Ratios within 1e-9 of 1 count as equality.
Report check_s_step_lemma(int trials, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Parallel);

/// Prox deviation bound on convex quadratics, indefinite diagonal quadratics
/// (eta < 1/L_minus) and softmax losses.
Report check_prox_lemma(int trials, std::uint64_t seed, ExecPolicy policy = ExecPolicy::Parallel);

/// Monte-Carlo mean of sum_{i in S~} w_i grad l_i(theta) against p grad F(theta);
/// a violation is a coordinate with |z| > band.
Report check_unbiased_sampling(const FederationInstance& inst, int K, const ModelVector& theta, int draws,
                               std::uint64_t seed, double band = 4.0, ExecPolicy policy = ExecPolicy::Parallel);

/// Worst budget-feasible drop-set per draw versus p sqrt(eps)(B||grad F|| + G + sigma),
/// one line per probe; a violation is a probe whose mean exceeds bound + band SE.
Report check_selection_bias(const FederationInstance& inst, int K, double eps, std::span<const ModelVector> probes,
                            int draws, std::uint64_t seed, double band = 4.0, ExecPolicy policy = ExecPolicy::Parallel);

/// Probe points around theta* at radii 0.1 * 2^k.
std::vector<ModelVector> selection_bias_probes(const FederationInstance& inst, int count, std::uint64_t seed);

struct HarnessResult {
    bool streams_identical = false;
    bool outputs_identical = false;
    double err1 = 0.0;
    double err2 = 0.0;
    double eps_u = 0.0;  // eps ||u||
    bool triangle_ok = false;
    double gap = 0.0;    // minimax_gap for the pair's (eps, G, sigma)
    bool minimax_ok = false;
    int rounds = 0;

    bool passed() const { return streams_identical && outputs_identical && triangle_ok && minimax_ok; }
};

/// Runs `cfg` with the same seed on both instances of the pair under the
/// matching adversary (static keep set or the random switch set) and full
/// participation, and compares everything the server observes bit for bit.
HarnessResult indistinguishability_harness(const LowerBoundPair& pair, RunConfig cfg);
nlohmann::json harness_to_json(const HarnessResult& h);

double minimax_gap(double eps, double G, double sigma);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log(metric) versus log(t) over the last `tail_fraction` of rounds (t >= 1).
double convergence_slope(std::span<const RoundLog> traj, bool use_dist, double tail_fraction);

struct SuiteOptions {
    int trials = 10000;               // lemma suites
    int draws = 0;                    // Monte-Carlo suites; 0 picks the suite default
    std::optional<double> eps;        // selection-bias / lower-bound
    std::uint64_t seed = 1;
    double band = 4.0;
    ExecPolicy exec = ExecPolicy::Parallel;
};

struct SuiteOutcome {
    nlohmann::json report;
    bool passed = false;
    std::vector<std::string> lines;  // human-readable summary
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"s-step", "prox", "unbiased", "selection-bias", "lower-bound"};
    return names;
}

/// Runs one named suite (or "all") on its reference instance. Throws
/// std::invalid_argument for unknown names.
SuiteOutcome run_suite(const std::string& name, const SuiteOptions& opt);

}  // namespace advfl
