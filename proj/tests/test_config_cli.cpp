#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nonlocal/nonlocal.hpp"

using namespace nonlocal;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("parse_config: minimal simulate config fills the documented defaults") {
    auto cfg = parse_config(R"({"nonlinearity":{"kind":"zero"},"simulate":{"t":1.0}})");
    CHECK(cfg.process.dt == 1e-2);
    CHECK(cfg.p == 2.0);
    CHECK(cfg.grid.rule == "trapezoid");
    CHECK(cfg.grid.n == 101);
    CHECK(cfg.kernel.kind == "uniform");
    CHECK(cfg.rng_seed == 42);
    REQUIRE(cfg.simulate.has_value());
    CHECK(cfg.simulate->tau == 0.0);
    CHECK(cfg.simulate->t == 1.0);
}

TEST_CASE("parse_config: unknown keys are named in the error") {
    try {
        parse_config(R"({"kernell":{"kind":"uniform"}})");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("kernell") != std::string::npos);
    }

    try {
        parse_config(R"({"process":{"dtt":0.1}})");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("dtt") != std::string::npos);
        CHECK(msg.find("process") != std::string::npos);
    }
}

TEST_CASE("parse_config: parse errors carry line and column") {
    try {
        parse_config("{\n  \"grid\": {\n    \"a\": oops\n  }\n}");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
}

TEST_CASE("parse_config: nonlinearity overrides and initial variants") {
    auto cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh", "a": 1.5, "b": 2.0, "k1": 0.1, "k2": 3.0,
                          "monotone": true},
        "simulate": {"t": 1.0, "initial": {"kind": "sine", "offset": 0.5,
                      "amplitude": 0.25, "mode": 2}}
    })");
    auto g = instantiate(cfg.nonlinearity);
    CHECK(g.k1 == 0.1);
    CHECK(g.k2 == 3.0);
    CHECK(g.monotone_in_x);

    auto grid = instantiate(cfg.grid);
    auto u = instantiate(cfg.simulate->initial, grid);
    CHECK(u.values.front() == doctest::Approx(0.5).epsilon(1e-12));  // sin(0) = 0
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v - 0.5));
    CHECK(umax == doctest::Approx(0.25).epsilon(1e-3));

    // Every catalogue kind instantiates.
    for (const char* kind : {"zero", "tanh", "modulated_tanh", "sin_tanh", "shifted_tanh"}) {
        NonlinSpec ns;
        ns.kind = kind;
        ns.c = 0.5;
        CHECK_NOTHROW(instantiate(ns));
    }

    auto cfg2 = parse_config(R"({
        "grid": {"n": 3},
        "nonlinearity": {"kind": "zero"},
        "simulate": {"t": 1.0, "initial": {"kind": "values", "values": [1.0, 2.0, 3.0]}}
    })");
    auto grid2 = instantiate(cfg2.grid);
    auto u2 = instantiate(cfg2.simulate->initial, grid2);
    CHECK(u2.values == std::vector<double>{1.0, 2.0, 3.0});
    // Wrong length is a configuration error.
    auto bad = cfg2.simulate->initial;
    bad.values.push_back(4.0);
    CHECK_THROWS_AS(instantiate(bad, grid2), config_error);
}

TEST_CASE("parse_config: p accepts inf") {
    auto cfg = parse_config(R"({"p":"inf"})");
    CHECK(std::isinf(cfg.p));
    CHECK_THROWS_AS(parse_config(R"({"p":0.5})"), config_error);
    CHECK_THROWS_AS(parse_config(R"({"p":"three"})"), config_error);
}

TEST_CASE("parse_config: full attractor config round-trips") {
    const std::string text = R"({
        "grid": {"a": 0.0, "b": 1.0, "n": 101, "rule": "trapezoid"},
        "kernel": {"kind": "gaussian", "sigma": 0.2},
        "nonlinearity": {"kind": "tanh", "a": 2.0, "b": 1.0},
        "process": {"dt": 0.01, "method": "exp_euler", "richardson": false, "tol": 1e-6},
        "p": 2.0,
        "rng_seed": 7,
        "output_dir": "out",
        "attractor": {
            "t": 0.0,
            "depths": [5, 10, 20, 40, 80],
            "tol": 1e-4,
            "delta": 0.1,
            "seed": {"constants": [-3, -2, -1, 0, 1, 2, 3]}
        }
    })";
    const RunConfig cfg = parse_config(text);
    const std::string serialized = serialize_config(cfg);
    const RunConfig again = parse_config(serialized);
    CHECK(again == cfg);
    CHECK(serialize_config(again) == serialized);
}

TEST_CASE("parse_config: every documented example config parses") {
    const auto docs = std::filesystem::path(DOCS_EXAMPLES_DIR);
    REQUIRE(std::filesystem::exists(docs));
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(docs)) {
        if (entry.path().extension() != ".json") continue;
        ++count;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(parse_config(slurp(entry.path())));
    }
    CHECK(count >= 5);
}

TEST_CASE("parse_config: every key-name mutation of a documented config fails") {
    const auto docs = std::filesystem::path(DOCS_EXAMPLES_DIR);
    std::size_t mutations = 0;
    for (const auto& entry : std::filesystem::directory_iterator(docs)) {
        if (entry.path().extension() != ".json") continue;
        const std::string text = slurp(entry.path());
        auto j = nlohmann::json::parse(text);

        // Mutate each object key (at any nesting level) by appending an 'x'.
        std::function<void(nlohmann::json&, nlohmann::json&)> walk =
            [&](nlohmann::json& node, nlohmann::json& root) {
                if (!node.is_object()) return;
                std::vector<std::string> keys;
                for (auto it = node.begin(); it != node.end(); ++it) keys.push_back(it.key());
                for (const auto& key : keys) {
                    nlohmann::json value = node[key];
                    node.erase(key);
                    node[key + "x"] = value;
                    ++mutations;
                    INFO(entry.path().string(), " key ", key);
                    CHECK_THROWS_AS(parse_config(root.dump()), config_error);
                    node.erase(key + "x");
                    node[key] = value;
                }
                for (auto& [k, v] : node.items()) walk(v, root);
            };
        walk(j, j);
    }
    CHECK(mutations > 50);
}

TEST_CASE("run: simulate writes the decay trajectory and summary") {
    const auto dir = fresh_dir("nonlocal_run_simulate");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "zero"},
        "grid": {"n": 11},
        "simulate": {"tau": 0.0, "t": 2.0, "initial": {"kind": "constant", "value": 1.0}}
    })");
    ctx.quiet = true;
    ctx.output_dir_override = dir.string();
    CHECK(run("simulate", ctx) == 0);

    const std::string csv = slurp(dir / "trajectory.csv");
    CHECK(csv.find("\r\n") != std::string::npos);  // RFC-4180 line endings
    // Final row equals e^{-2}.
    const auto last_line_start = csv.rfind("\r\n", csv.size() - 3);
    const std::string last = csv.substr(last_line_start + 2);
    CHECK(last.find("0.13533528") != std::string::npos);

    auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["schema_version"] == 1);
    CHECK(std::abs(summary["final_norms"]["linf"].get<double>() - std::exp(-2.0)) < 1e-14);
}

TEST_CASE("run: compare exits 2 on inverted initial ordering") {
    const auto dir = fresh_dir("nonlocal_run_compare");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh"},
        "grid": {"n": 21},
        "compare": {
            "tau": 0.0, "t": 1.0,
            "lower": {"kind": "shifted_tanh", "beta": -0.1},
            "upper": {"kind": "shifted_tanh", "beta": 0.1},
            "initial_lower": {"kind": "constant", "value": 1.0},
            "initial": {"kind": "constant", "value": 0.0},
            "initial_upper": {"kind": "constant", "value": 2.0}
        }
    })");
    ctx.quiet = true;
    ctx.output_dir_override = dir.string();
    CHECK(run("compare", ctx) == 2);
}

TEST_CASE("run: compare succeeds and reports gaps on the ordered triple") {
    const auto dir = fresh_dir("nonlocal_run_compare_ok");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh"},
        "grid": {"n": 41},
        "process": {"dt": 0.02},
        "compare": {
            "tau": 0.0, "t": 2.0,
            "lower": {"kind": "shifted_tanh", "beta": -0.1},
            "upper": {"kind": "shifted_tanh", "beta": 0.1},
            "initial_lower": {"kind": "constant", "value": -1.0},
            "initial": {"kind": "constant", "value": 0.0},
            "initial_upper": {"kind": "constant", "value": 1.0}
        }
    })");
    ctx.quiet = true;
    ctx.output_dir_override = dir.string();
    CHECK(run("compare", ctx) == 0);
    auto rep = nlohmann::json::parse(slurp(dir / "compare.json"));
    CHECK(rep["ordered"] == true);
    CHECK(rep["min_gap_lower"].get<double>() >= -1e-8);
    CHECK(rep["first_violation"].is_null());
}

TEST_CASE("run: unknown subcommand is a configuration error") {
    RunContext ctx;
    ctx.quiet = true;
    CHECK(run("simulate-all", ctx) == 2);
}

TEST_CASE("run: selftest artifacts are byte-identical across thread counts") {
    const auto dir1 = fresh_dir("nonlocal_selftest_t1");
    const auto dir8 = fresh_dir("nonlocal_selftest_t8");

    RunContext ctx;
    ctx.quiet = true;
    ctx.output_dir_override = dir1.string();
    ctx.threads = 1;
    CHECK(run("selftest", ctx) == 0);

    ctx.output_dir_override = dir8.string();
    ctx.threads = 8;
    CHECK(run("selftest", ctx) == 0);

    CHECK(slurp(dir1 / "selftest.json") == slurp(dir8 / "selftest.json"));
    CHECK(slurp(dir1 / "trajectory.csv") == slurp(dir8 / "trajectory.csv"));

    // And across repeated runs with the same configuration.
    const auto dir_again = fresh_dir("nonlocal_selftest_again");
    ctx.output_dir_override = dir_again.string();
    ctx.threads = 8;
    CHECK(run("selftest", ctx) == 0);
    CHECK(slurp(dir_again / "selftest.json") == slurp(dir8 / "selftest.json"));
}

TEST_CASE("run: attractor writes a converged, contained estimate") {
    const auto dir = fresh_dir("nonlocal_run_attractor");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh"},
        "grid": {"n": 41},
        "attractor": {
            "t": 0.0,
            "depths": [5, 10, 20, 30],
            "tol": 1e-4,
            "seed": {"constants": [-3, -1, 0, 1, 3]}
        }
    })");
    ctx.quiet = true;
    ctx.threads = 2;
    ctx.output_dir_override = dir.string();
    CHECK(run("attractor", ctx) == 0);
    auto rep = nlohmann::json::parse(slurp(dir / "attractor.json"));
    CHECK(rep["converged"] == true);
    CHECK(rep["containment_ok"] == true);
    CHECK(rep["radius"].get<double>() == doctest::Approx(2.0));
    CHECK(std::filesystem::exists(dir / "members.csv"));
}

TEST_CASE("run: lyapunov writes the energy ledger and verdict") {
    const auto dir = fresh_dir("nonlocal_run_lyapunov");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh"},
        "grid": {"n": 41},
        "lyapunov": {"tau": 0.0, "t": 25.0, "initial": {"kind": "constant", "value": 1.0},
                      "resolution": 2048, "eq_seeds": [-3, 0, 3]}
    })");
    ctx.quiet = true;
    ctx.output_dir_override = dir.string();
    CHECK(run("lyapunov", ctx) == 0);
    auto verdict = nlohmann::json::parse(slurp(dir / "verdict.json"));
    CHECK(verdict["single_equilibrium"] == true);
    CHECK(verdict["decay"]["fd_ok"] == true);
    CHECK(verdict["decay"]["monotone_ok"] == true);

    const std::string csv = slurp(dir / "lyapunov.csv");
    CHECK(csv.rfind("t,L,L1,L2,I,R,dist_to_nearest_eq\r\n", 0) == 0);
}

TEST_CASE("run: sweep writes the semicontinuity table") {
    const auto dir = fresh_dir("nonlocal_run_sweep");
    RunContext ctx;
    ctx.cfg = parse_config(R"({
        "nonlinearity": {"kind": "tanh"},
        "grid": {"n": 31},
        "sweep": {"t": 0.0, "horizon": 1.0, "betas": [0.2, 0.1], "beta0": 0.1,
                   "depths": [5, 10, 20], "seed": {"constants": [-2, 0, 2]}}
    })");
    ctx.quiet = true;
    ctx.threads = 2;
    ctx.output_dir_override = dir.string();
    CHECK(run("sweep", ctx) == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("beta,traj_dist,gronwall_bound,attractor_dist\r\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("run: missing experiment block is a configuration error") {
    RunContext ctx;
    ctx.cfg = parse_config(R"({"nonlinearity":{"kind":"zero"}})");
    ctx.quiet = true;
    CHECK(run("simulate", ctx) == 2);
    CHECK(run("attractor", ctx) == 2);
    CHECK(run("sweep", ctx) == 2);
}
