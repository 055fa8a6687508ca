// advfl: run, sweep and verify front end.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advfl/config.hpp"
#include "advfl/engine.hpp"
#include "advfl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advfl;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
};

json load_with_overrides(const CommonArgs& args) {
    if (!fs::exists(args.config)) throw ConfigError("config file not found: " + args.config);
    json cfg = load_json_file(args.config);
    for (const auto& o : args.overrides) apply_override(cfg, o);
    if (args.seed) {
        set_dotted(cfg, "seeds.master", *args.seed);
        if (auto* s = cfg.contains("seeds") ? &cfg["seeds"] : nullptr; s && s->contains("list")) s->erase("list");
    }
    return cfg;
}

fs::path output_dir(const CommonArgs& args, const Experiment& ex) {
    if (!args.out.empty()) return args.out;
    if (!ex.out_dir.empty()) return ex.out_dir;
    if (const char* env = std::getenv("ADVFL_OUT_DIR"); env && *env) return env;
    return "out";
}

json metrics_json(const PopulationEvaluator::Metrics& m) {
    json j{{"gradNormSq", m.grad_norm_sq}, {"trainLoss", m.train_loss}};
    j["distSq"] = m.dist_sq ? json(*m.dist_sq) : json(nullptr);
    return j;
}

int cmd_run(const CommonArgs& args) {
    const json cfg = load_with_overrides(args);
    const Experiment ex = parse_experiment(cfg, fs::path(args.config).parent_path());
    const fs::path dir = output_dir(args, ex);
    fs::create_directories(dir);

    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    try {
        result = run(ex.instance, ex.run);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::uint64_t seed = ex.run.master_seed;
    write_jsonl(dir / (ex.prefix + ".jsonl"), cfg, seed, result.trajectory);
    write_csv(dir / (ex.prefix + ".csv"), cfg, seed, result.trajectory);

    const PopulationEvaluator evaluate(ex.instance);
    const bool has_dist = ex.instance.optimum.has_value();
    json summary{{"config", cfg},
                 {"masterSeed", seed},
                 {"R", result.R},
                 {"thetaR", metrics_json(evaluate(result.theta_R))},
                 {"final", metrics_json(evaluate(result.theta_final))},
                 {"tailGradNormSq", tail_mean(result.trajectory, ex.tail_fraction, false)},
                 {"mifaRound0Exempt", result.mifa_round0_exempt},
                 {"maxProxResidual", result.max_prox_residual},
                 {"gmNonconverged", result.gm_nonconverged},
                 {"wallSeconds", wall}};
    summary["tailDistSq"] = has_dist ? json(tail_mean(result.trajectory, ex.tail_fraction, true)) : json(nullptr);
    std::ofstream(dir / (ex.prefix + ".summary.json")) << summary.dump(2) << '\n';
    std::cout << "wrote " << (dir / ex.prefix).string() << ".{jsonl,csv,summary.json}\n";
    if (result.gm_nonconverged > 0) {
        std::cerr << "error: geometric median did not converge in " << result.gm_nonconverged << " round(s)\n";
        return kRuntimeFailure;
    }
    return kOk;
}

std::vector<json> split_values(const std::vector<std::string>& raw) {
    std::vector<json> out;
    for (const auto& chunk : raw) {
        std::stringstream ss(chunk);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                out.push_back(json::parse(item));
            } catch (const json::parse_error&) {
                out.push_back(item);
            }
        }
    }
    return out;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis, const std::vector<std::string>& raw_values) {
    const std::vector<json> values = split_values(raw_values);
    if (values.empty()) throw ConfigError("sweep: empty values list");
    const json base = load_with_overrides(args);
    const Experiment probe = parse_experiment(base, fs::path(args.config).parent_path());

    struct Row {
        json value;
        std::uint64_t seed;
        std::string line;
        bool ok;
    };
    std::vector<Row> rows;
    for (const auto& v : values) {
        for (std::uint64_t seed : probe.seeds) {
            json cfg = base;
            set_dotted(cfg, axis, v);
            set_dotted(cfg, "seeds.master", seed);
            cfg["seeds"].erase("list");
            const Experiment ex = parse_experiment(cfg, fs::path(args.config).parent_path());
            Row row{v, seed, "", true};
            const std::string vtext = v.is_string() ? v.get<std::string>() : v.dump();
            try {
                const auto res = run(ex.instance, ex.run);
                double max_eps = 0.0;
                for (const auto& log : res.trajectory) max_eps = std::max(max_eps, log.eps_realized);
                const bool has_dist = ex.instance.optimum.has_value();
                row.line = vtext + ',' + std::to_string(seed) + ',' +
                           format_double(tail_mean(res.trajectory, ex.tail_fraction, false)) + ',' +
                           (has_dist ? format_double(tail_mean(res.trajectory, ex.tail_fraction, true)) : std::string()) +
                           ',' + format_double(res.trajectory.back().train_loss) + ',' + format_double(max_eps) + ",ok";
            } catch (const DivergenceError& e) {
                row.ok = false;
                row.line = vtext + ',' + std::to_string(seed) + ",,,,,diverged";
                std::cerr << "warning: " << axis << '=' << vtext << " seed " << seed << ": " << e.what() << '\n';
            }
            rows.push_back(std::move(row));
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.value != b.value) return a.value < b.value;
        return a.seed < b.seed;
    });

    const fs::path dir = output_dir(args, probe);
    fs::create_directories(dir);
    const fs::path path = dir / (probe.prefix + "_sweep.csv");
    std::ofstream out(path);
    out << "# axis=" << axis << ' ' << csv_header_comment(base, probe.run.master_seed).substr(2) << '\n';
    out << "value,seed,tail_grad_norm_sq,tail_dist_sq,final_train_loss,max_eps_t,status\n";
    bool all_ok = true;
    for (const auto& r : rows) {
        out << r.line << '\n';
        all_ok = all_ok && r.ok;
    }
    std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
    return all_ok ? kOk : kRuntimeFailure;
}

int cmd_verify(const std::string& suite, const SuiteOptions& opt, const std::string& out) {
    const auto& names = suite_names();
    if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
        throw ConfigError("unknown suite '" + suite + "' (expected s-step|prox|unbiased|selection-bias|lower-bound|all)");
    const SuiteOutcome o = run_suite(suite, opt);
    for (const auto& line : o.lines) std::cout << line << '\n';
    if (out.empty()) {
        std::cout << o.report.dump(2) << '\n';
    } else {
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        std::ofstream(out) << o.report.dump(2) << '\n';
    }
    return o.passed ? kOk : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning under adversarial client dropout"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args;
    auto add_common = [](CLI::App* sub, CommonArgs& a) {
        sub->add_option("--config", a.config, "JSON config file")->required();
        sub->add_option("--set", a.overrides, "KEY=VALUE override (dotted key, repeatable)");
        sub->add_option("--seed", a.seed, "master seed");
        sub->add_option("--out", a.out, "output directory (default: output.dir, $ADVFL_OUT_DIR, ./out)");
    };
    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    add_common(run_cmd, run_args);

    auto* sweep_cmd = app.add_subcommand("sweep", "one run per value and seed, aggregate plateau metrics");
    add_common(sweep_cmd, sweep_args);
    std::string axis;
    std::vector<std::string> values;
    sweep_cmd->add_option("--axis", axis, "dotted config key to vary")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required();

    auto* verify_cmd = app.add_subcommand("verify", "numerical checks of the bounds");
    std::string suite, verify_out, exec = "parallel";
    SuiteOptions opt;
    double eps = -1.0;
    verify_cmd->add_option("suite", suite, "s-step|prox|unbiased|selection-bias|lower-bound|all")->required();
    verify_cmd->add_option("--trials", opt.trials, "trials of the lemma suites");
    verify_cmd->add_option("--draws", opt.draws, "Monte-Carlo draws (0: suite default)");
    verify_cmd->add_option("--eps", eps, "dropout fraction for selection-bias and lower-bound");
    verify_cmd->add_option("--seed", opt.seed, "seed");
    verify_cmd->add_option("--band", opt.band, "acceptance band in standard errors");
    verify_cmd->add_option("--exec", exec, "serial|parallel");
    verify_cmd->add_option("--out", verify_out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run_args);
        if (*sweep_cmd) return cmd_sweep(sweep_args, axis, values);
        if (*verify_cmd) {
            if (opt.trials < 1) throw ConfigError("--trials must be >= 1");
            if (eps >= 0.0) opt.eps = eps;
            opt.exec = parse_exec(exec);
            return cmd_verify(suite, opt, verify_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsage;
}
