#include "advfl/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace advfl {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void set_dotted(json& config, const std::string& key, const json& value) {
    if (key.empty()) throw ConfigError("override: empty key");
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override: malformed key '" + key + "'");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override: '" + key + "' descends into a non-object");
            *node = json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = value;
}

const json* find_dotted(const json& config, const std::string& key) {
    const json* node = &config;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part)) return nullptr;
        node = &(*node)[part];
    }
    return node;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like KEY=VALUE");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    set_dotted(config, key, value);
}

namespace {

// typed accessors reporting the dotted field on failure
template <class T>
T get_or(const json& section, const std::string& where, const char* key, T fallback) {
    if (!section.contains(key)) return fallback;
    try {
        return section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <class T>
T require(const json& section, const std::string& where, const char* key) {
    if (!section.contains(key)) throw ConfigError(where + "." + key + ": missing");
    return get_or<T>(section, where, key, T{});
}

const json& section_of(const json& config, const char* name) {
    static const json empty = json::object();
    if (!config.contains(name)) return empty;
    const json& s = config.at(name);
    if (!s.is_object()) throw ConfigError(std::string(name) + ": must be an object");
    return s;
}

void check_keys(const json& section, const std::string& where, std::initializer_list<const char*> allowed) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : section.items())
        if (!ok.count(k)) throw ConfigError(where + "." + k + ": unknown key");
}

std::uint64_t seed_value(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    if (v.is_string()) {
        try {
            std::size_t used = 0;
            const auto s = v.get<std::string>();
            const auto x = std::stoull(s, &used, 0);
            if (used == s.size()) return x;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError(where + ": expected an unsigned 64-bit seed");
}

Schedule parse_schedule(const json& s, const FederationInstance& inst, const RunConfig& run) {
    check_keys(s, "schedule", {"kind", "eta0", "theta0", "gamma", "scale"});
    const std::string kind = get_or<std::string>(s, "schedule", "kind", "constant");
    Schedule out;
    out.eta0 = get_or<double>(s, "schedule", "eta0", out.eta0);
    out.theta0 = get_or<double>(s, "schedule", "theta0", out.theta0);
    out.gamma = get_or<double>(s, "schedule", "gamma", out.gamma);
    if (kind == "constant") {
        out.kind = Schedule::Kind::Constant;
    } else if (kind == "inv_sqrt") {
        out.kind = Schedule::Kind::InvSqrt;
    } else if (kind == "inv_linear") {
        out.kind = Schedule::Kind::InvLinear;
    } else if (kind == "corollary") {
        out.kind = Schedule::Kind::InvSqrt;
        const double p = static_cast<double>(run.K) / inst.M;
        out.eta0 = get_or<double>(s, "schedule", "scale", 1.0) *
                   corollary_eta0(inst.profile, run.beta, run.effective_s(), p, 0);
    } else {
        throw ConfigError("schedule.kind: '" + kind + "' (expected constant|inv_sqrt|inv_linear|corollary)");
    }
    try {
        out.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

}  // namespace

FederationInstance build_instance(const json& s, std::uint64_t default_seed, const fs::path& base_dir) {
    const std::string kind = get_or<std::string>(s, "instance", "kind", "quadratic");
    const std::uint64_t seed = s.contains("seed") ? seed_value(s["seed"], "instance.seed") : default_seed;
    Rng rng = make_rng(seed, Stream::Instance);
    try {
        if (kind == "quadratic") {
            check_keys(s, "instance", {"kind", "seed", "M", "L", "G", "sigma", "d", "volumes", "center_scale"});
            const int M = require<int>(s, "instance", "M");
            const auto volumes = get_or<std::vector<long>>(s, "instance", "volumes", {});
            return quadratic_family(M, get_or<double>(s, "instance", "L", 1.0), get_or<double>(s, "instance", "G", 1.0),
                                    get_or<double>(s, "instance", "sigma", 0.0), volumes, rng,
                                    get_or<int>(s, "instance", "d", 20), get_or<double>(s, "instance", "center_scale", 1.0));
        }
        if (kind == "synthetic") {
            check_keys(s, "instance", {"kind", "seed", "M", "alpha", "beta", "volume_shape", "volume_scale", "min_n", "max_n"});
            VolumeLaw law;
            law.shape = get_or<double>(s, "instance", "volume_shape", law.shape);
            law.scale = get_or<double>(s, "instance", "volume_scale", law.scale);
            law.min_n = get_or<long>(s, "instance", "min_n", law.min_n);
            law.max_n = get_or<long>(s, "instance", "max_n", law.max_n);
            return synthetic_ab(get_or<double>(s, "instance", "alpha", 1.0), get_or<double>(s, "instance", "beta", 1.0),
                                require<int>(s, "instance", "M"), rng, law);
        }
        if (kind == "lower_bound") {
            check_keys(s, "instance", {"kind", "seed", "variant", "side", "M", "eps", "G", "sigma", "L", "d"});
            const auto pair = lower_bound_pair(parse_variant(get_or<std::string>(s, "instance", "variant", "static")),
                                               require<int>(s, "instance", "M"), require<double>(s, "instance", "eps"),
                                               get_or<double>(s, "instance", "G", 1.0),
                                               get_or<double>(s, "instance", "sigma", 1.0),
                                               get_or<double>(s, "instance", "L", 1.0), get_or<int>(s, "instance", "d", 20));
            const std::string side = get_or<std::string>(s, "instance", "side", "heterogeneous");
            if (side == "heterogeneous") return pair.heterogeneous;
            if (side == "homogeneous") return pair.homogeneous;
            throw ConfigError("instance.side: expected homogeneous|heterogeneous");
        }
        if (kind == "file") {
            check_keys(s, "instance", {"kind", "seed", "path"});
            fs::path path = require<std::string>(s, "instance", "path");
            if (path.is_relative()) path = base_dir / path;
            if (!fs::exists(path)) throw ConfigError("instance.path: file not found: " + path.string());
            return instance_from_json(load_json_file(path));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("instance: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("instance: ") + e.what());
    }
    throw ConfigError("instance.kind: '" + kind + "' (expected quadratic|synthetic|lower_bound|file)");
}

Experiment parse_experiment(const json& config, const fs::path& base_dir) {
    if (!config.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(config, "config", {"instance", "algorithm", "adversary", "schedule", "seeds", "output"});
    Experiment ex;
    ex.raw = config;

    const json& seeds = section_of(config, "seeds");
    check_keys(seeds, "seeds", {"master", "list"});
    if (seeds.contains("list")) {
        if (!seeds["list"].is_array() || seeds["list"].empty()) throw ConfigError("seeds.list: must be a non-empty array");
        for (const auto& v : seeds["list"]) ex.seeds.push_back(seed_value(v, "seeds.list"));
    }
    const std::uint64_t master = seeds.contains("master") ? seed_value(seeds["master"], "seeds.master")
                                 : ex.seeds.empty()        ? 0
                                                           : ex.seeds.front();
    if (ex.seeds.empty()) ex.seeds.push_back(master);

    ex.instance = build_instance(section_of(config, "instance"), master, base_dir);

    RunConfig& run = ex.run;
    run.master_seed = master;
    const json& a = section_of(config, "algorithm");
    check_keys(a, "algorithm", {"name", "beta", "s", "T", "K", "momentum", "buckets", "exec", "prox", "cclip", "gm", "theta0"});
    try {
        run.algorithm = parse_algorithm(get_or<std::string>(a, "algorithm", "name", "fedavg"));
        run.exec = parse_exec(get_or<std::string>(a, "algorithm", "exec", "parallel"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("algorithm: ") + e.what());
    }
    run.beta = get_or<double>(a, "algorithm", "beta", run.beta);
    run.s = get_or<int>(a, "algorithm", "s", run.s);
    run.T = get_or<int>(a, "algorithm", "T", run.T);
    run.K = get_or<int>(a, "algorithm", "K", ex.instance.M);
    run.momentum_beta0 = get_or<double>(a, "algorithm", "momentum", run.momentum_beta0);
    run.buckets = get_or<int>(a, "algorithm", "buckets", run.buckets);
    if (a.contains("prox")) {
        const json& p = a["prox"];
        check_keys(p, "algorithm.prox", {"steps", "lr", "momentum", "tol"});
        run.prox_inner.steps = get_or<int>(p, "algorithm.prox", "steps", run.prox_inner.steps);
        run.prox_inner.lr = get_or<double>(p, "algorithm.prox", "lr", run.prox_inner.lr);
        run.prox_inner.momentum = get_or<double>(p, "algorithm.prox", "momentum", run.prox_inner.momentum);
        run.prox_inner.tol = get_or<double>(p, "algorithm.prox", "tol", run.prox_inner.tol);
    }
    if (a.contains("cclip")) {
        const json& c = a["cclip"];
        check_keys(c, "algorithm.cclip", {"tau", "iters"});
        run.cclip.tau = get_or<double>(c, "algorithm.cclip", "tau", run.cclip.tau);
        run.cclip.iters = get_or<int>(c, "algorithm.cclip", "iters", run.cclip.iters);
    }
    if (a.contains("gm")) {
        const json& g = a["gm"];
        check_keys(g, "algorithm.gm", {"smoothing", "tol", "max_iter"});
        run.gm.smoothing = get_or<double>(g, "algorithm.gm", "smoothing", run.gm.smoothing);
        run.gm.tol = get_or<double>(g, "algorithm.gm", "tol", run.gm.tol);
        run.gm.max_iter = get_or<int>(g, "algorithm.gm", "max_iter", run.gm.max_iter);
    }
    if (a.contains("theta0")) run.theta0 = ModelVector(get_or<std::vector<double>>(a, "algorithm", "theta0", {}));

    const json& adv = section_of(config, "adversary");
    check_keys(adv, "adversary", {"kind", "eps", "static_set", "keep_set", "shadow", "candidates"});
    try {
        run.adversary.kind = parse_adversary(get_or<std::string>(adv, "adversary", "kind", "none"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("adversary: ") + e.what());
    }
    run.adversary.eps = get_or<double>(adv, "adversary", "eps", 0.0);
    run.adversary.static_set = get_or<std::string>(adv, "adversary", "static_set", "prefix");
    run.adversary.keep_set = get_or<std::vector<int>>(adv, "adversary", "keep_set", {});
    for (int id : run.adversary.keep_set)
        if (id < 0 || id >= ex.instance.M) throw ConfigError("adversary.keep_set: client id out of range");
    if (adv.contains("shadow")) {
        const json& sh = adv["shadow"];
        check_keys(sh, "adversary.shadow", {"T1", "T2", "K1", "K2", "seed_a", "seed_b", "horizon"});
        auto& c = run.adversary.shadow;
        c.T1 = get_or<int>(sh, "adversary.shadow", "T1", c.T1);
        c.T2 = get_or<int>(sh, "adversary.shadow", "T2", c.T2);
        c.K1 = get_or<int>(sh, "adversary.shadow", "K1", c.K1);
        c.K2 = get_or<int>(sh, "adversary.shadow", "K2", c.K2);
        c.horizon = get_or<int>(sh, "adversary.shadow", "horizon", c.horizon);
        if (sh.contains("seed_a")) c.seed_a = seed_value(sh["seed_a"], "adversary.shadow.seed_a");
        if (sh.contains("seed_b")) c.seed_b = seed_value(sh["seed_b"], "adversary.shadow.seed_b");
    }
    if (run.adversary.kind == AdversaryKind::Shadow && !(adv.contains("shadow") && adv["shadow"].contains("seed_a"))) {
        // derived defaults that never coincide with the master seed
        run.adversary.shadow.seed_a = splitmix64(master ^ 0xa5a5a5a5ULL);
        run.adversary.shadow.seed_b = splitmix64(master ^ 0x5a5a5a5aULL);
    }
    if (adv.contains("candidates")) {
        const json& c = adv["candidates"];
        ShadowCandidates cand;
        cand.C1 = get_or<std::vector<int>>(c, "adversary.candidates", "C1", {});
        cand.C2 = get_or<std::vector<int>>(c, "adversary.candidates", "C2", {});
        run.adversary.candidates = cand;
    }

    run.schedule = parse_schedule(section_of(config, "schedule"), ex.instance, run);

    const json& out = section_of(config, "output");
    check_keys(out, "output", {"dir", "prefix", "tail_fraction"});
    if (out.contains("dir")) ex.out_dir = get_or<std::string>(out, "output", "dir", "");
    ex.prefix = get_or<std::string>(out, "output", "prefix", ex.prefix);
    ex.tail_fraction = get_or<double>(out, "output", "tail_fraction", ex.tail_fraction);
    if (!(ex.tail_fraction > 0.0 && ex.tail_fraction <= 1.0)) throw ConfigError("output.tail_fraction: must lie in (0, 1]");

    try {
        ex.instance.validate();
        run.validate(ex.instance);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return ex;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_header_comment(const json& config, std::uint64_t seed) {
    return "# masterSeed=" + std::to_string(seed) + " config=" + config.dump();
}

void write_jsonl(const fs::path& path, const json& config, std::uint64_t seed, const std::vector<RoundLog>& trajectory) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << json{{"header", true}, {"masterSeed", seed}, {"config", config}}.dump() << '\n';
    for (const auto& log : trajectory) out << round_log_to_json(log).dump() << '\n';
}

void write_csv(const fs::path& path, const json& config, std::uint64_t seed, const std::vector<RoundLog>& trajectory) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << csv_header_comment(config, seed) << '\n';
    out << "t,grad_norm_sq,dist_sq,eps_t,train_loss,participants\n";
    for (const auto& log : trajectory) {
        out << log.t << ',' << format_double(log.grad_norm_sq) << ','
            << (log.dist_sq ? format_double(*log.dist_sq) : std::string()) << ',' << format_double(log.eps_realized) << ','
            << format_double(log.train_loss) << ',' << log.participating.size() << '\n';
    }
}

}  // namespace advfl
