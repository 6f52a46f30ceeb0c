#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonlocal/errors.hpp"
#include "nonlocal/evolution.hpp"
#include "nonlocal/grid.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/nonlinearity.hpp"

namespace nonlocal {

// ---------------------------------------------------------------------------
// Declarative run configuration.  Everything is a plain value so configs can
// be compared, serialized and re-parsed losslessly; instantiation into grids,
// kernels and nonlinearities happens in the runner.
// ---------------------------------------------------------------------------

struct GridSpec {
    double a = 0.0;
    double b = 1.0;
    std::size_t n = 101;
    std::string rule = "trapezoid";
    bool operator==(const GridSpec&) const = default;
};

struct KernelSpec {
    std::string kind = "uniform";  // uniform | gaussian | tent | custom_table
    double sigma = 0.1;            // gaussian
    double radius = 0.25;          // tent
    std::string path;              // custom_table
    bool operator==(const KernelSpec&) const = default;
};

struct NonlinSpec {
    std::string kind = "tanh";  // zero | tanh | modulated_tanh | sin_tanh | shifted_tanh
    double a = 2.0;
    double b = 1.0;
    double c = 1.0;       // modulated_tanh / sin_tanh amplitude
    double lambda = 1.0;  // modulated_tanh decay rate
    double omega = 1.0;   // sin_tanh frequency
    double beta = 0.0;    // shifted_tanh offset
    std::optional<double> k1;
    std::optional<double> k2;
    std::optional<bool> monotone;
    bool operator==(const NonlinSpec&) const = default;
};

struct LimitSpec {
    std::string kind = "tanh";
    double a = 2.0;
    double b = 1.0;
    bool operator==(const LimitSpec&) const = default;
};

struct ProcessSpec {
    double dt = 1e-2;
    std::string method = "exp_euler";
    bool richardson = false;
    double tol = 1e-6;
    bool operator==(const ProcessSpec&) const = default;
};

struct InitialSpec {
    std::string kind = "constant";  // constant | sine | values
    double value = 1.0;             // constant
    double offset = 0.0;            // sine
    double amplitude = 1.0;         // sine
    int mode = 1;                   // sine
    std::vector<double> values;     // values
    bool operator==(const InitialSpec&) const = default;
};

struct SeedSpec {
    bool auto_seed = true;
    std::vector<double> constants;
    std::size_t random_smooth = 0;
    bool operator==(const SeedSpec&) const = default;
};

struct SimulateSpec {
    double tau = 0.0;
    double t = 1.0;
    InitialSpec initial;
    bool operator==(const SimulateSpec&) const = default;
};

struct AttractorSpec {
    double t = 0.0;
    std::vector<double> depths = {5, 10, 20, 40, 80};
    double tol = 1e-4;
    double delta = 0.1;
    SeedSpec seed;
    bool operator==(const AttractorSpec&) const = default;
};

struct CompareSpec {
    double tau = 0.0;
    double t = 10.0;
    NonlinSpec lower;
    NonlinSpec upper;
    InitialSpec initial_lower;
    InitialSpec initial;
    InitialSpec initial_upper;
    bool operator==(const CompareSpec&) const = default;
};

struct LyapunovSpec {
    double tau = 0.0;
    double t = 20.0;
    InitialSpec initial;
    std::size_t resolution = 4096;
    std::vector<double> eq_seeds = {-3.0, 0.0, 3.0};
    double eq_tol = 1e-10;
    double verdict_tol = 1e-3;
    bool operator==(const LyapunovSpec&) const = default;
};

struct SweepSpec {
    double t = 0.0;
    double horizon = 2.0;
    std::vector<double> betas;
    double beta0 = 0.0;
    std::vector<double> depths = {5, 10, 20, 40};
    double tol = 1e-4;
    SeedSpec seed;
    bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
    GridSpec grid;
    KernelSpec kernel;
    NonlinSpec nonlinearity;
    std::optional<LimitSpec> limit;
    ProcessSpec process;
    double p = 2.0;
    std::uint64_t rng_seed = 42;
    std::string output_dir = "out";
    std::optional<SimulateSpec> simulate;
    std::optional<AttractorSpec> attractor;
    std::optional<CompareSpec> compare;
    std::optional<LyapunovSpec> lyapunov;
    std::optional<SweepSpec> sweep;
    bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Strict JSON parsing: unknown keys are rejected with their path, parse errors
// carry line and column.
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("unknown key '" + it.key() + "' at " + path);
}

inline const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

template <class T>
void read_into(const json& obj, const char* key, T& target, const std::string& path) {
    if (const json* v = find(obj, key)) {
        try {
            target = v->get<T>();
        } catch (const json::exception& e) {
            throw config_error("invalid value for '" + std::string(key) + "' at " + path + ": " +
                               e.what());
        }
    }
}

inline void read_p(const json& obj, const char* key, double& target, const std::string& path) {
    if (const json* v = find(obj, key)) {
        if (v->is_string()) {
            const auto s = v->get<std::string>();
            if (s == "inf" || s == "infinity")
                target = infinite_p;
            else
                throw config_error("invalid p '" + s + "' at " + path);
        } else if (v->is_number()) {
            target = v->get<double>();
        } else {
            throw config_error("p must be a number or \"inf\" at " + path);
        }
    }
}

inline GridSpec parse_grid(const json& j, const std::string& path) {
    reject_unknown(j, {"a", "b", "n", "rule"}, path);
    GridSpec g;
    read_into(j, "a", g.a, path);
    read_into(j, "b", g.b, path);
    read_into(j, "n", g.n, path);
    read_into(j, "rule", g.rule, path);
    return g;
}

inline KernelSpec parse_kernel(const json& j, const std::string& path) {
    reject_unknown(j, {"kind", "sigma", "radius", "path"}, path);
    KernelSpec k;
    read_into(j, "kind", k.kind, path);
    read_into(j, "sigma", k.sigma, path);
    read_into(j, "radius", k.radius, path);
    read_into(j, "path", k.path, path);
    if (k.kind != "uniform" && k.kind != "gaussian" && k.kind != "tent" &&
        k.kind != "custom_table")
        throw config_error("unknown kernel kind '" + k.kind + "' at " + path);
    return k;
}

inline NonlinSpec parse_nonlin(const json& j, const std::string& path) {
    reject_unknown(j, {"kind", "a", "b", "c", "lambda", "omega", "beta", "k1", "k2", "monotone"},
                   path);
    NonlinSpec g;
    read_into(j, "kind", g.kind, path);
    if (g.kind != "zero" && g.kind != "tanh" && g.kind != "modulated_tanh" &&
        g.kind != "sin_tanh" && g.kind != "shifted_tanh")
        throw config_error("unknown nonlinearity kind '" + g.kind + "' at " + path);
    read_into(j, "a", g.a, path);
    read_into(j, "b", g.b, path);
    read_into(j, "c", g.c, path);
    read_into(j, "lambda", g.lambda, path);
    read_into(j, "omega", g.omega, path);
    read_into(j, "beta", g.beta, path);
    if (const json* v = find(j, "k1")) g.k1 = v->get<double>();
    if (const json* v = find(j, "k2")) g.k2 = v->get<double>();
    if (const json* v = find(j, "monotone")) g.monotone = v->get<bool>();
    return g;
}

inline InitialSpec parse_initial(const json& j, const std::string& path) {
    reject_unknown(j, {"kind", "value", "offset", "amplitude", "mode", "values"}, path);
    InitialSpec s;
    read_into(j, "kind", s.kind, path);
    if (s.kind != "constant" && s.kind != "sine" && s.kind != "values")
        throw config_error("unknown initial kind '" + s.kind + "' at " + path);
    read_into(j, "value", s.value, path);
    read_into(j, "offset", s.offset, path);
    read_into(j, "amplitude", s.amplitude, path);
    read_into(j, "mode", s.mode, path);
    read_into(j, "values", s.values, path);
    return s;
}

inline SeedSpec parse_seed(const json& j, const std::string& path) {
    reject_unknown(j, {"constants", "random_smooth"}, path);
    SeedSpec s;
    if (const json* v = find(j, "constants")) {
        s.constants = v->get<std::vector<double>>();
        s.auto_seed = false;
    }
    read_into(j, "random_smooth", s.random_smooth, path);
    return s;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into line/column for the error message.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw config_error("config parse error at line " + std::to_string(line) + ", column " +
                           std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");

    detail::reject_unknown(j,
                           {"schema_version", "grid", "kernel", "nonlinearity", "limit", "process",
                            "p", "rng_seed", "output_dir", "simulate", "attractor", "compare",
                            "lyapunov", "sweep"},
                           "$");

    RunConfig cfg;
    if (const json* v = detail::find(j, "grid")) cfg.grid = detail::parse_grid(*v, "$.grid");
    if (const json* v = detail::find(j, "kernel"))
        cfg.kernel = detail::parse_kernel(*v, "$.kernel");
    if (const json* v = detail::find(j, "nonlinearity"))
        cfg.nonlinearity = detail::parse_nonlin(*v, "$.nonlinearity");
    if (const json* v = detail::find(j, "limit")) {
        detail::reject_unknown(*v, {"kind", "a", "b"}, "$.limit");
        LimitSpec lim;
        detail::read_into(*v, "kind", lim.kind, "$.limit");
        detail::read_into(*v, "a", lim.a, "$.limit");
        detail::read_into(*v, "b", lim.b, "$.limit");
        if (lim.kind != "tanh") throw config_error("unknown limit kind '" + lim.kind + "'");
        cfg.limit = lim;
    }
    if (const json* v = detail::find(j, "process")) {
        detail::reject_unknown(*v, {"dt", "method", "richardson", "tol"}, "$.process");
        detail::read_into(*v, "dt", cfg.process.dt, "$.process");
        detail::read_into(*v, "method", cfg.process.method, "$.process");
        detail::read_into(*v, "richardson", cfg.process.richardson, "$.process");
        detail::read_into(*v, "tol", cfg.process.tol, "$.process");
        parse_method(cfg.process.method);  // validate
    }
    detail::read_p(j, "p", cfg.p, "$");
    if (!(std::isinf(cfg.p) || cfg.p >= 1.0)) throw config_error("p must be >= 1 or \"inf\"");
    detail::read_into(j, "rng_seed", cfg.rng_seed, "$");
    detail::read_into(j, "output_dir", cfg.output_dir, "$");

    if (const json* v = detail::find(j, "simulate")) {
        detail::reject_unknown(*v, {"tau", "t", "initial"}, "$.simulate");
        SimulateSpec s;
        detail::read_into(*v, "tau", s.tau, "$.simulate");
        detail::read_into(*v, "t", s.t, "$.simulate");
        if (const json* iv = detail::find(*v, "initial"))
            s.initial = detail::parse_initial(*iv, "$.simulate.initial");
        if (!(s.t >= s.tau)) throw config_error("simulate requires t >= tau");
        cfg.simulate = s;
    }
    if (const json* v = detail::find(j, "attractor")) {
        detail::reject_unknown(*v, {"t", "depths", "tol", "delta", "seed"}, "$.attractor");
        AttractorSpec s;
        detail::read_into(*v, "t", s.t, "$.attractor");
        detail::read_into(*v, "depths", s.depths, "$.attractor");
        detail::read_into(*v, "tol", s.tol, "$.attractor");
        detail::read_into(*v, "delta", s.delta, "$.attractor");
        if (const json* sv = detail::find(*v, "seed"))
            s.seed = detail::parse_seed(*sv, "$.attractor.seed");
        cfg.attractor = s;
    }
    if (const json* v = detail::find(j, "compare")) {
        detail::reject_unknown(
            *v, {"tau", "t", "lower", "upper", "initial_lower", "initial", "initial_upper"},
            "$.compare");
        CompareSpec s;
        detail::read_into(*v, "tau", s.tau, "$.compare");
        detail::read_into(*v, "t", s.t, "$.compare");
        const json* lo = detail::find(*v, "lower");
        const json* hi = detail::find(*v, "upper");
        if (!lo || !hi) throw config_error("compare requires 'lower' and 'upper' nonlinearities");
        s.lower = detail::parse_nonlin(*lo, "$.compare.lower");
        s.upper = detail::parse_nonlin(*hi, "$.compare.upper");
        s.initial_lower.value = -1.0;
        s.initial.value = 0.0;
        s.initial_upper.value = 1.0;
        if (const json* iv = detail::find(*v, "initial_lower"))
            s.initial_lower = detail::parse_initial(*iv, "$.compare.initial_lower");
        if (const json* iv = detail::find(*v, "initial"))
            s.initial = detail::parse_initial(*iv, "$.compare.initial");
        if (const json* iv = detail::find(*v, "initial_upper"))
            s.initial_upper = detail::parse_initial(*iv, "$.compare.initial_upper");
        cfg.compare = s;
    }
    if (const json* v = detail::find(j, "lyapunov")) {
        detail::reject_unknown(
            *v, {"tau", "t", "initial", "resolution", "eq_seeds", "eq_tol", "verdict_tol"},
            "$.lyapunov");
        LyapunovSpec s;
        detail::read_into(*v, "tau", s.tau, "$.lyapunov");
        detail::read_into(*v, "t", s.t, "$.lyapunov");
        if (const json* iv = detail::find(*v, "initial"))
            s.initial = detail::parse_initial(*iv, "$.lyapunov.initial");
        detail::read_into(*v, "resolution", s.resolution, "$.lyapunov");
        detail::read_into(*v, "eq_seeds", s.eq_seeds, "$.lyapunov");
        detail::read_into(*v, "eq_tol", s.eq_tol, "$.lyapunov");
        detail::read_into(*v, "verdict_tol", s.verdict_tol, "$.lyapunov");
        cfg.lyapunov = s;
    }
    if (const json* v = detail::find(j, "sweep")) {
        detail::reject_unknown(*v, {"t", "horizon", "betas", "beta0", "depths", "tol", "seed"},
                               "$.sweep");
        SweepSpec s;
        detail::read_into(*v, "t", s.t, "$.sweep");
        detail::read_into(*v, "horizon", s.horizon, "$.sweep");
        detail::read_into(*v, "betas", s.betas, "$.sweep");
        detail::read_into(*v, "beta0", s.beta0, "$.sweep");
        detail::read_into(*v, "depths", s.depths, "$.sweep");
        detail::read_into(*v, "tol", s.tol, "$.sweep");
        if (const json* sv = detail::find(*v, "seed"))
            s.seed = detail::parse_seed(*sv, "$.sweep.seed");
        if (s.betas.empty()) throw config_error("sweep requires a non-empty 'betas' list");
        cfg.sweep = s;
    }
    return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
    using detail::json;
    json j;
    j["schema_version"] = 1;
    j["grid"] = {{"a", cfg.grid.a}, {"b", cfg.grid.b}, {"n", cfg.grid.n}, {"rule", cfg.grid.rule}};
    json k = {{"kind", cfg.kernel.kind}};
    if (cfg.kernel.kind == "gaussian") k["sigma"] = cfg.kernel.sigma;
    if (cfg.kernel.kind == "tent") k["radius"] = cfg.kernel.radius;
    if (cfg.kernel.kind == "custom_table") k["path"] = cfg.kernel.path;
    j["kernel"] = k;

    auto nonlin_json = [](const NonlinSpec& g) {
        json n = {{"kind", g.kind}};
        if (g.kind != "zero") {
            n["a"] = g.a;
            n["b"] = g.b;
        }
        if (g.kind == "modulated_tanh") {
            n["c"] = g.c;
            n["lambda"] = g.lambda;
        }
        if (g.kind == "sin_tanh") {
            n["c"] = g.c;
            n["omega"] = g.omega;
        }
        if (g.kind == "shifted_tanh") n["beta"] = g.beta;
        if (g.k1) n["k1"] = *g.k1;
        if (g.k2) n["k2"] = *g.k2;
        if (g.monotone) n["monotone"] = *g.monotone;
        return n;
    };
    j["nonlinearity"] = nonlin_json(cfg.nonlinearity);
    if (cfg.limit)
        j["limit"] = {{"kind", cfg.limit->kind}, {"a", cfg.limit->a}, {"b", cfg.limit->b}};
    j["process"] = {{"dt", cfg.process.dt},
                    {"method", cfg.process.method},
                    {"richardson", cfg.process.richardson},
                    {"tol", cfg.process.tol}};
    if (std::isinf(cfg.p))
        j["p"] = "inf";
    else
        j["p"] = cfg.p;
    j["rng_seed"] = cfg.rng_seed;
    j["output_dir"] = cfg.output_dir;

    auto initial_json = [](const InitialSpec& s) {
        json n = {{"kind", s.kind}};
        if (s.kind == "constant") n["value"] = s.value;
        if (s.kind == "sine") {
            n["offset"] = s.offset;
            n["amplitude"] = s.amplitude;
            n["mode"] = s.mode;
        }
        if (s.kind == "values") n["values"] = s.values;
        return n;
    };
    auto seed_json = [](const SeedSpec& s) {
        json n = json::object();
        if (!s.auto_seed) n["constants"] = s.constants;
        if (s.random_smooth) n["random_smooth"] = s.random_smooth;
        return n;
    };

    if (cfg.simulate)
        j["simulate"] = {{"tau", cfg.simulate->tau},
                         {"t", cfg.simulate->t},
                         {"initial", initial_json(cfg.simulate->initial)}};
    if (cfg.attractor) {
        json a = {{"t", cfg.attractor->t},
                  {"depths", cfg.attractor->depths},
                  {"tol", cfg.attractor->tol},
                  {"delta", cfg.attractor->delta}};
        const json sj = seed_json(cfg.attractor->seed);
        if (!sj.empty()) a["seed"] = sj;
        j["attractor"] = a;
    }
    if (cfg.compare)
        j["compare"] = {{"tau", cfg.compare->tau},
                        {"t", cfg.compare->t},
                        {"lower", nonlin_json(cfg.compare->lower)},
                        {"upper", nonlin_json(cfg.compare->upper)},
                        {"initial_lower", initial_json(cfg.compare->initial_lower)},
                        {"initial", initial_json(cfg.compare->initial)},
                        {"initial_upper", initial_json(cfg.compare->initial_upper)}};
    if (cfg.lyapunov)
        j["lyapunov"] = {{"tau", cfg.lyapunov->tau},
                         {"t", cfg.lyapunov->t},
                         {"initial", initial_json(cfg.lyapunov->initial)},
                         {"resolution", cfg.lyapunov->resolution},
                         {"eq_seeds", cfg.lyapunov->eq_seeds},
                         {"eq_tol", cfg.lyapunov->eq_tol},
                         {"verdict_tol", cfg.lyapunov->verdict_tol}};
    if (cfg.sweep) {
        json s = {{"t", cfg.sweep->t},          {"horizon", cfg.sweep->horizon},
                  {"betas", cfg.sweep->betas},  {"beta0", cfg.sweep->beta0},
                  {"depths", cfg.sweep->depths}, {"tol", cfg.sweep->tol}};
        const json sj = seed_json(cfg.sweep->seed);
        if (!sj.empty()) s["seed"] = sj;
        j["sweep"] = s;
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Instantiation.
// ---------------------------------------------------------------------------

inline GridPtr instantiate(const GridSpec& s) { return build_grid(s.a, s.b, s.n, s.rule); }

inline DiscreteKernel instantiate(const KernelSpec& s, const GridPtr& grid) {
    if (s.kind == "uniform") return make_uniform_kernel(grid);
    if (s.kind == "gaussian") return make_gaussian_kernel(grid, s.sigma);
    if (s.kind == "tent") return make_tent_kernel(grid, s.radius);
    if (s.kind == "custom_table") return load_kernel_csv(grid, s.path);
    throw config_error("unknown kernel kind '" + s.kind + "'");
}

inline TimeNonlinearity instantiate(const NonlinSpec& s) {
    TimeNonlinearity g;
    if (s.kind == "zero")
        g = builtins::zero();
    else if (s.kind == "tanh")
        g = builtins::saturating_tanh(s.a, s.b);
    else if (s.kind == "modulated_tanh")
        g = builtins::modulated_tanh(s.a, s.b, s.c, s.lambda);
    else if (s.kind == "sin_tanh")
        g = builtins::sin_modulated_tanh(s.a, s.b, s.c, s.omega);
    else if (s.kind == "shifted_tanh")
        g = builtins::shifted_tanh(s.a, s.b, s.beta);
    else
        throw config_error("unknown nonlinearity kind '" + s.kind + "'");
    if (s.k1) g.k1 = *s.k1;
    if (s.k2) g.k2 = *s.k2;
    if (s.monotone) g.monotone_in_x = *s.monotone;
    return g;
}

inline ProcessConfig instantiate(const ProcessSpec& s) {
    ProcessConfig cfg;
    cfg.dt = s.dt;
    cfg.method = parse_method(s.method);
    cfg.richardson = s.richardson;
    cfg.tol = s.tol;
    cfg.validate();
    return cfg;
}

inline Field instantiate(const InitialSpec& s, const GridPtr& grid) {
    if (s.kind == "constant") return Field(grid, s.value);
    if (s.kind == "sine") {
        const double amp = s.amplitude;
        const double off = s.offset;
        const int mode = s.mode;
        return make_field(grid, [&](double x) {
            const double u = (x - grid->a) / grid->measure;
            return off + amp * std::sin(mode * std::numbers::pi * u);
        });
    }
    if (s.kind == "values") {
        if (s.values.size() != grid->n)
            throw config_error("initial 'values' has " + std::to_string(s.values.size()) +
                               " entries for a grid of " + std::to_string(grid->n) + " nodes");
        return Field(grid, s.values);
    }
    throw config_error("unknown initial kind '" + s.kind + "'");
}

}  // namespace nonlocal
