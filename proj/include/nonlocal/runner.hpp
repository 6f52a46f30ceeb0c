#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonlocal/attractor.hpp"
#include "nonlocal/comparison.hpp"
#include "nonlocal/config.hpp"
#include "nonlocal/ensemble.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/evolution.hpp"
#include "nonlocal/io.hpp"
#include "nonlocal/lyapunov.hpp"
#include "nonlocal/parallel.hpp"

namespace nonlocal {

struct RunContext {
    RunConfig cfg;
    unsigned threads = 1;
    bool quiet = false;
    std::string output_dir_override;

    std::filesystem::path out_dir() const {
        return output_dir_override.empty() ? std::filesystem::path(cfg.output_dir)
                                           : std::filesystem::path(output_dir_override);
    }
    void note(const std::string& msg) const {
        if (!quiet) std::cerr << msg << "\n";
    }
};

namespace detail {

inline nlohmann::json json_with_version() {
    nlohmann::json j;
    j["schema_version"] = 1;
    return j;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::vector<std::string> header{"t"};
    const auto& grid = *traj.front().grid;
    for (std::size_t i = 0; i < grid.n; ++i) header.push_back("u" + std::to_string(i));
    CsvWriter csv(std::move(header));
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row;
        row.reserve(grid.n + 1);
        row.push_back(traj.times[k]);
        for (double v : traj.states[k].values) row.push_back(v);
        csv.add_row(row);
    }
    csv.write(path);
}

inline void write_members_csv(const std::filesystem::path& path, const Ensemble& ens) {
    std::vector<std::string> header{"member"};
    for (std::size_t i = 0; i < ens.grid->n; ++i) header.push_back("u" + std::to_string(i));
    CsvWriter csv(std::move(header));
    for (std::size_t m = 0; m < ens.size(); ++m) {
        std::vector<double> row;
        row.reserve(ens.grid->n + 1);
        row.push_back(static_cast<double>(m));
        for (double v : ens.members[m].values) row.push_back(v);
        csv.add_row(row);
    }
    csv.write(path);
}

inline Ensemble make_seed(const SeedSpec& spec, const GridPtr& grid, double radius,
                          std::uint64_t rng_seed) {
    if (spec.auto_seed)
        return default_seed_ensemble(grid, std::max(radius, 1.0), rng_seed, 13,
                                     spec.random_smooth ? spec.random_smooth : 8);
    std::vector<Field> members;
    members.reserve(spec.constants.size() + spec.random_smooth);
    for (double c : spec.constants) members.emplace_back(grid, c);
    if (spec.random_smooth) {
        double amp = 1.0;
        for (double c : spec.constants) amp = std::max(amp, std::abs(c));
        Ensemble extra = default_seed_ensemble(grid, amp, rng_seed, 0, spec.random_smooth);
        for (auto& f : extra.members) members.push_back(std::move(f));
    }
    return Ensemble(grid, std::move(members), "seed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.  Each writes its artifacts under the output directory and
// returns 0 on success, 1 on a failed check.  Configuration problems throw.
// ---------------------------------------------------------------------------

inline int run_simulate(const RunContext& ctx) {
    if (!ctx.cfg.simulate) throw config_error("config has no 'simulate' block");
    const auto& spec = *ctx.cfg.simulate;
    const GridPtr grid = instantiate(ctx.cfg.grid);
    const DiscreteKernel kernel = instantiate(ctx.cfg.kernel, grid);
    const TimeNonlinearity g = instantiate(ctx.cfg.nonlinearity);
    const ProcessConfig pc = instantiate(ctx.cfg.process);
    const Field u0 = instantiate(spec.initial, grid);

    if (g.k1 >= 1.0) ctx.note("warning: claimed k1 >= 1, no absorbing ball is guaranteed");

    Trajectory traj = integrate(u0, spec.tau, spec.t, pc, kernel, g);

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);
    detail::write_trajectory_csv(dir / "trajectory.csv", traj);

    nlohmann::json j = detail::json_with_version();
    j["tau"] = spec.tau;
    j["t"] = spec.t;
    j["steps"] = traj.size() - 1;
    j["final_norms"] = {{"l1", lp_norm(traj.back(), 1.0)},
                        {"l2", lp_norm(traj.back(), 2.0)},
                        {"linf", lp_norm(traj.back(), infinite_p)}};
    write_json(dir / "summary.json", j);
    return 0;
}

inline int run_attractor(const RunContext& ctx) {
    if (!ctx.cfg.attractor) throw config_error("config has no 'attractor' block");
    const auto& spec = *ctx.cfg.attractor;
    const GridPtr grid = instantiate(ctx.cfg.grid);
    const DiscreteKernel kernel = instantiate(ctx.cfg.kernel, grid);
    const TimeNonlinearity g = instantiate(ctx.cfg.nonlinearity);
    const ProcessConfig pc = instantiate(ctx.cfg.process);

    const double radius0 = absorbing_radius(g.k1, g.k2, grid->measure, ctx.cfg.p, 0.0);
    const Ensemble seed = detail::make_seed(spec.seed, grid, radius0, ctx.cfg.rng_seed);

    AttractorEstimate est = pullback_omega_limit(spec.t, seed, spec.depths, pc, kernel, g,
                                                 spec.tol, ctx.cfg.p, ctx.threads);
    const double contain_tol = 1e-6 + 10.0 * pc.dt;
    const ContainmentReport contain =
        estimate_containment(est, g.k1, g.k2, ctx.cfg.p, contain_tol);

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);
    detail::write_members_csv(dir / "members.csv", est.ensemble);

    nlohmann::json j = detail::json_with_version();
    j["t"] = est.t;
    j["depths"] = est.pullback_depths;
    j["residuals"] = est.residuals;
    j["converged"] = est.converged;
    j["radius"] = contain.radius;
    j["max_member_norm"] = contain.max_norm;
    j["containment_ok"] = contain.ok;
    j["members_csv_path"] = "members.csv";
    write_json(dir / "attractor.json", j);

    return (est.converged && contain.ok) ? 0 : 1;
}

inline int run_compare(const RunContext& ctx) {
    if (!ctx.cfg.compare) throw config_error("config has no 'compare' block");
    const auto& spec = *ctx.cfg.compare;
    const GridPtr grid = instantiate(ctx.cfg.grid);
    const DiscreteKernel kernel = instantiate(ctx.cfg.kernel, grid);
    const ProcessConfig pc = instantiate(ctx.cfg.process);

    OrderedTriple triple;
    triple.f = instantiate(spec.lower);
    triple.g = instantiate(ctx.cfg.nonlinearity);
    triple.h = instantiate(spec.upper);
    triple.v_tau = instantiate(spec.initial_lower, grid);
    triple.u_tau = instantiate(spec.initial, grid);
    triple.V_tau = instantiate(spec.initial_upper, grid);

    const ComparisonReport rep = verify_comparison(triple, spec.tau, spec.t, pc, kernel);

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);
    nlohmann::json j = detail::json_with_version();
    j["ordered"] = rep.ordered;
    j["min_gap_lower"] = rep.min_gap_lower;
    j["min_gap_upper"] = rep.min_gap_upper;
    if (rep.first_violation) {
        j["first_violation"] = {{"t", rep.first_violation->t},
                                {"node", rep.first_violation->node},
                                {"gap", rep.first_violation->gap},
                                {"side", rep.first_violation->side}};
    } else {
        j["first_violation"] = nullptr;
    }
    write_json(dir / "compare.json", j);
    return rep.ordered ? 0 : 1;
}

inline int run_lyapunov(const RunContext& ctx) {
    if (!ctx.cfg.lyapunov) throw config_error("config has no 'lyapunov' block");
    const auto& spec = *ctx.cfg.lyapunov;
    const GridPtr grid = instantiate(ctx.cfg.grid);
    const DiscreteKernel kernel = instantiate(ctx.cfg.kernel, grid);
    const TimeNonlinearity g = instantiate(ctx.cfg.nonlinearity);
    const ProcessConfig pc = instantiate(ctx.cfg.process);

    AutonomousNonlinearity g0;
    if (ctx.cfg.limit) {
        g0 = builtins::autonomous_tanh(ctx.cfg.limit->a, ctx.cfg.limit->b);
    } else if (g.limit) {
        g0 = *g.limit;
    } else {
        throw capability_error("lyapunov run needs an autonomous limit (nonlinearity with a "
                               "limit, or an explicit 'limit' block)");
    }
    if (!g.has_inverse())
        throw capability_error("lyapunov run requires an invertible nonlinearity");

    const EnergySpec espec = build_energy_spec(g0, spec.resolution);
    const Field u0 = instantiate(spec.initial, grid);
    Trajectory traj = integrate(u0, spec.tau, spec.t, pc, kernel, g);

    const Ensemble eq_seeds = constants_ensemble(grid, spec.eq_seeds, "equilibrium seeds");
    const EquilibriumSet eq = find_equilibria(espec, kernel, eq_seeds, spec.eq_tol);
    for (const auto& w : eq.warnings) ctx.note("warning: " + w);

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);

    CsvWriter csv({"t", "L", "L1", "L2", "I", "R", "dist_to_nearest_eq"});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto e = lyapunov_value(traj.states[k], espec, kernel);
        const double I = dissipation_I(traj.states[k], espec, kernel);
        const double R = remainder_R(traj.times[k], traj.states[k], g, espec, kernel);
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& m : eq.members)
            dist = std::min(dist, lp_distance(traj.states[k], m, ctx.cfg.p));
        csv.add_row({traj.times[k], e.total, e.L1, e.L2, I, R, dist});
    }
    csv.write(dir / "lyapunov.csv");

    const EnergyDecayReport decay = energy_decay_check(traj, g, espec, kernel);
    const ConvergenceVerdict verdict = convergence_verdict(traj, eq, ctx.cfg.p, spec.verdict_tol);

    nlohmann::json j = detail::json_with_version();
    j["level_index"] = verdict.level_index;
    j["member_index"] = verdict.member_index;
    j["final_dist"] = verdict.final_dist;
    j["single_equilibrium"] = verdict.single_equilibrium;
    j["unresolved"] = verdict.unresolved;
    j["equilibria"] = eq.members.size();
    j["levels"] = eq.levels;
    j["decay"] = {{"max_fd_mismatch", decay.max_fd_mismatch},
                  {"fd_tolerance", decay.fd_tolerance},
                  {"fd_ok", decay.fd_ok},
                  {"scale", decay.scale},
                  {"worst_increase", decay.worst_increase},
                  {"monotone_ok", decay.monotone_ok}};
    write_json(dir / "verdict.json", j);
    return decay.fd_ok ? 0 : 1;
}

inline int run_sweep(const RunContext& ctx) {
    if (!ctx.cfg.sweep) throw config_error("config has no 'sweep' block");
    const auto& spec = *ctx.cfg.sweep;
    if (ctx.cfg.nonlinearity.kind != "tanh")
        throw config_error("sweep shifts a 'tanh' base nonlinearity; got '" +
                           ctx.cfg.nonlinearity.kind + "'");
    const GridPtr grid = instantiate(ctx.cfg.grid);
    const DiscreteKernel kernel = instantiate(ctx.cfg.kernel, grid);
    const ProcessConfig pc = instantiate(ctx.cfg.process);
    const double a = ctx.cfg.nonlinearity.a;
    const double b = ctx.cfg.nonlinearity.b;

    ParameterizedFamily family;
    family.betas = spec.betas;
    for (double beta : spec.betas)
        family.members.push_back(builtins::shifted_tanh(a, b, beta));
    const TimeNonlinearity g_ref = builtins::shifted_tanh(a, b, spec.beta0);

    const double radius0 =
        absorbing_radius(0.0, a + std::abs(spec.beta0), grid->measure, ctx.cfg.p, 0.0);
    const Ensemble seed = detail::make_seed(spec.seed, grid, radius0, ctx.cfg.rng_seed);

    const SemicontinuityReport rep =
        semicontinuity_experiment(spec.t, family, g_ref, spec.beta0, seed, pc, kernel,
                                  spec.horizon, spec.depths, spec.tol, ctx.cfg.p, ctx.threads);

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);
    CsvWriter csv({"beta", "traj_dist", "gronwall_bound", "attractor_dist"});
    for (const auto& row : rep.rows)
        csv.add_row({row.beta, row.traj_distance, row.gronwall_bound, row.attractor_distance});
    csv.write(dir / "sweep.csv");

    if (!rep.trajectories_ok) {
        ctx.note("error: a trajectory exceeded its Gronwall bound (integrator defect)");
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Self test: quick checks mirroring the documented behavior of every module,
// plus deterministic artifacts for byte-for-byte comparison across runs.
// ---------------------------------------------------------------------------

namespace detail {

struct SelfCheck {
    std::string name;
    std::function<void()> fn;
};

inline void expect(bool ok, const std::string& what) {
    if (!ok) throw error("selftest expectation failed: " + what);
}

inline void expect_near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol))
        throw error("selftest expectation failed: " + what + " (got " + format_double(got) +
                    ", want " + format_double(want) + ")");
}

inline std::vector<SelfCheck> selftest_checks() {
    std::vector<SelfCheck> checks;
    auto add = [&](std::string name, std::function<void()> fn) {
        checks.push_back({std::move(name), std::move(fn)});
    };

    add("grid: two-point trapezoid", [] {
        auto g = build_grid(0.0, 1.0, 2, QuadratureRule::trapezoid);
        expect(g->nodes.front() == 0.0 && g->nodes.back() == 1.0, "endpoints");
        expect_near(g->weights[0], 0.5, 0.0, "weight 0");
        expect_near(g->weights[1], 0.5, 0.0, "weight 1");
    });
    add("grid: midpoint uniform cells", [] {
        auto g = build_grid(0.0, 1.0, 4, QuadratureRule::midpoint);
        double s = 0.0;
        for (double w : g->weights) {
            expect_near(w, 0.25, 1e-15, "cell weight");
            s += w;
        }
        expect_near(s, 1.0, 1e-14, "weight sum");
    });
    add("grid: weight sum equals measure", [] {
        auto g = build_grid(-1.0, 1.0, 101, QuadratureRule::trapezoid);
        double s = 0.0;
        for (double w : g->weights) s += w;
        expect_near(s, 2.0, 1e-12, "weight sum");
    });
    add("kernel: uniform has unit row mass", [] {
        auto g = build_grid(0.0, 1.0, 33, QuadratureRule::midpoint);
        auto k = make_uniform_kernel(g);
        for (double m : k.row_mass) expect_near(m, 1.0, 1e-12, "row mass");
    });
    add("kernel: asymmetric input rejected", [] {
        auto g = build_grid(0.0, 1.0, 9, QuadratureRule::trapezoid);
        bool threw = false;
        try {
            assemble_kernel(g, [](double x, double y) { return x - y; });
        } catch (const kernel_error&) {
            threw = true;
        }
        expect(threw, "kernel_error for J = x - y");
    });
    add("apply_K: mean of a linear ramp", [] {
        auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto u = make_field(g, [](double x) { return x; });
        auto ku = apply_K(k, u);
        for (double v : ku.values) expect_near(v, 0.5, 1e-12, "Ku of ramp");
    });
    add("apply_K: constants preserved", [] {
        auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto ku = apply_K(k, Field(g, 3.25));
        for (double v : ku.values) expect_near(v, 3.25, 1e-12, "Ku of constant");
    });
    add("norms: unit constant", [] {
        auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
        expect_near(lp_norm(Field(g, 1.0), 2.0), 1.0, 1e-12, "L2");
        expect_near(lp_norm(Field(g, 1.0), infinite_p), 1.0, 0.0, "Linf");
    });
    add("norms: linear ramp", [] {
        auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
        auto u = make_field(g, [](double x) { return x; });
        expect_near(lp_norm(u, 2.0), 1.0 / std::sqrt(3.0), 1e-4, "L2 of ramp");
    });
    add("hausdorff: identity and containment", [] {
        auto g = build_grid(0.0, 1.0, 11, QuadratureRule::trapezoid);
        Field zero(g, 0.0), one(g, 1.0), two(g, 2.0);
        Ensemble A(g, {one}), B(g, {zero, one});
        expect_near(hausdorff_semidist(A, A, 2.0), 0.0, 0.0, "dist(A,A)");
        expect_near(hausdorff_semidist(Ensemble(g, {zero}), B, 2.0), 0.0, 0.0, "containment");
        expect_near(hausdorff_semidist(Ensemble(g, {one, two}), Ensemble(g, {zero}), 2.0), 2.0,
                    1e-12, "distance to origin");
    });
    add("nonlinearity: zero map certificate", [] {
        auto cert = certify_dissipativity(builtins::zero(), {0.0, 1.0}, {-10.0, 10.0}, 128);
        expect_near(cert.worst_ratio, 0.0, 0.0, "worst ratio");
    });
    add("nonlinearity: bounded tanh certifies", [] {
        certify_dissipativity(builtins::saturating_tanh(2.0, 1.0), {0.0, 1.0}, {-20.0, 20.0},
                              256);
    });
    add("nonlinearity: sublinear claim rejected for identity", [] {
        TimeNonlinearity ident;
        ident.eval = [](double, double x) { return x; };
        ident.d2 = [](double, double) { return 1.0; };
        ident.k1 = 0.5;
        ident.k2 = 0.0;
        bool threw = false;
        try {
            certify_dissipativity(ident, {0.0, 1.0}, {-10.0, 10.0}, 128);
        } catch (const certification_error&) {
            threw = true;
        }
        expect(threw, "certification_error for identity with k1 = 0.5");
    });
    add("nonlinearity: lipschitz of 2 tanh", [] {
        const double kb =
            lipschitz_estimate(builtins::saturating_tanh(2.0, 1.0), {0.0, 1.0}, {-5.0, 5.0}, 1001);
        expect_near(kb, 2.0, 1e-6, "max |d2|");
    });
    add("nonlinearity: inversion", [] {
        auto g0 = builtins::autonomous_tanh(2.0, 1.0);
        expect_near(invert_autonomous(g0, 0.0), 0.0, 0.0, "inverse at 0");
        expect_near(invert_autonomous(g0, 1.0), std::atanh(0.5), 1e-12, "inverse at 1");
        bool threw = false;
        try {
            invert_autonomous(g0, 2.5);
        } catch (const range_error&) {
            threw = true;
        }
        expect(threw, "range_error beyond saturation");
    });
    add("evolution: pure decay right-hand side", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto f = rhs(0.0, Field(g, 1.0), k, builtins::zero());
        for (double v : f.values) expect_near(v, -1.0, 0.0, "rhs");
    });
    add("evolution: linear decay step is exact", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        auto u1 = step(0.0, Field(g, 1.0), 1.0, pc, k, builtins::zero());
        for (double v : u1.values) expect_near(v, std::exp(-1.0), 1e-16, "e^{-1}");
    });
    add("evolution: identity at t = tau", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        auto traj = integrate(Field(g, 2.0), 1.0, 1.0, pc, k, builtins::zero());
        expect(traj.size() == 1, "single state");
        expect_near(traj.back().values[0], 2.0, 0.0, "identity");
    });
    add("evolution: two units of linear decay", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        auto traj = integrate(Field(g, 1.0), 0.0, 2.0, pc, k, builtins::zero());
        for (double v : traj.back().values) expect_near(v, std::exp(-2.0), 1e-14, "e^{-2}");
    });
    add("evolution: picard matches the affine fixed point", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto u = picard_solve(Field(g, 1.0), 0.0, 0.4, k, builtins::zero(), 50, 1e-8);
        for (double v : u.values) expect_near(v, std::exp(-0.4), 1e-12, "e^{-0.4}");
    });
    add("attractor: absorbing radius values", [] {
        expect_near(absorbing_radius(0.5, 1.0, 1.0, 2.0, 0.1), 2.2, 1e-15, "formula");
        expect_near(absorbing_radius(0.3, 0.0, 2.0, 2.0, 0.5), 0.0, 0.0, "zero forcing");
        expect_near(absorbing_radius(0.0, 2.0, 3.0, infinite_p, 0.0), 2.0, 0.0, "p = inf");
    });
    add("comparison: equality case has zero gaps", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        pc.dt = 0.05;
        OrderedTriple triple;
        triple.f = triple.g = triple.h = builtins::saturating_tanh(2.0, 1.0);
        triple.v_tau = triple.u_tau = triple.V_tau = Field(g, 0.5);
        auto rep = verify_comparison(triple, 0.0, 1.0, pc, k);
        expect(rep.ordered, "ordered");
        expect_near(rep.min_gap_lower, 0.0, 0.0, "lower gap");
        expect_near(rep.min_gap_upper, 0.0, 0.0, "upper gap");
    });
    add("comparison: zero field invariant for tanh", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        pc.dt = 0.05;
        Field zero(g, 0.0);
        auto rep = invariant_interval_check(zero, zero, Ensemble(g, {zero}), 2.0, pc, k,
                                            builtins::saturating_tanh(2.0, 1.0));
        expect(rep.invariant, "invariant singleton");
    });
    add("lyapunov: energy spec basics", [] {
        auto espec = build_energy_spec(builtins::autonomous_tanh(2.0, 1.0), 2048);
        expect_near(espec.i_of(0.0), 0.0, 0.0, "i(0)");
        const double cstar = 1.9150080282658027;  // fixed point of 2 tanh(c)
        expect_near(std::abs(espec.u_bar), cstar, 1e-5, "minimizer");
        expect(espec.u_bar >= 0.0, "nonnegative tie-break");
    });
    add("lyapunov: minimizer field has zero energy", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto espec = build_energy_spec(builtins::autonomous_tanh(2.0, 1.0), 2048);
        auto e = lyapunov_value(Field(g, espec.u_bar), espec, k);
        expect_near(e.L2, 0.0, 0.0, "constant has no interaction energy");
        expect_near(e.total, 0.0, 1e-10, "L(u_bar) = 0");
    });
    add("lyapunov: dissipation vanishes at equilibria", [] {
        auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        auto espec = build_energy_spec(builtins::autonomous_tanh(2.0, 1.0), 2048);
        expect_near(dissipation_I(Field(g, 0.0), espec, k), 0.0, 1e-14, "I(0)");
        auto gt = builtins::saturating_tanh(2.0, 1.0);
        expect_near(remainder_R(5.0, Field(g, 1.0), gt, espec, k), 0.0, 1e-14,
                    "R of the autonomous family");
    });
    add("config: defaults and round trip", [] {
        const RunConfig cfg = parse_config(
            R"({"nonlinearity":{"kind":"zero"},"simulate":{"t":1.0}})");
        expect_near(cfg.process.dt, 1e-2, 0.0, "default dt");
        expect_near(cfg.p, 2.0, 0.0, "default p");
        expect(cfg.grid.rule == "trapezoid", "default rule");
        const RunConfig again = parse_config(serialize_config(cfg));
        expect(again == cfg, "round trip");
    });
    add("config: unknown keys rejected", [] {
        bool threw = false;
        try {
            parse_config(R"({"kernell":{"kind":"uniform"}})");
        } catch (const config_error& e) {
            threw = std::string(e.what()).find("kernell") != std::string::npos;
        }
        expect(threw, "config_error naming the key");
    });
    return checks;
}

}  // namespace detail

inline int run_selftest(const RunContext& ctx) {
    const auto checks = detail::selftest_checks();
    std::vector<std::string> failures(checks.size());
    std::vector<char> passed(checks.size(), 0);

    parallel_for_index(checks.size(), ctx.threads, [&](std::size_t i) {
        try {
            checks[i].fn();
            passed[i] = 1;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    const auto dir = ctx.out_dir();
    std::filesystem::create_directories(dir);

    bool all = true;
    nlohmann::json j = detail::json_with_version();
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < checks.size(); ++i) {
        nlohmann::json row = {{"name", checks[i].name}, {"pass", static_cast<bool>(passed[i])}};
        if (!passed[i]) {
            row["error"] = failures[i];
            all = false;
            ctx.note("FAIL " + checks[i].name + ": " + failures[i]);
        }
        arr.push_back(row);
    }
    j["checks"] = arr;
    j["all_pass"] = all;
    write_json(dir / "selftest.json", j);

    // Deterministic reference trajectory artifact: two units of linear decay.
    {
        auto g = build_grid(0.0, 1.0, 11, QuadratureRule::trapezoid);
        auto k = make_uniform_kernel(g);
        ProcessConfig pc;
        pc.dt = 0.1;
        Trajectory traj = integrate(Field(g, 1.0), 0.0, 2.0, pc, k, builtins::zero());
        detail::write_trajectory_csv(dir / "trajectory.csv", traj);
    }

    if (!ctx.quiet)
        std::cerr << (all ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
    return all ? 0 : 1;
}

/// Dispatch a subcommand.  Returns the process exit status: 0 success, 1 check
/// failure, 2 configuration error.
inline int run(const std::string& cmd, const RunContext& ctx) {
    try {
        if (cmd == "simulate") return run_simulate(ctx);
        if (cmd == "attractor") return run_attractor(ctx);
        if (cmd == "compare") return run_compare(ctx);
        if (cmd == "lyapunov") return run_lyapunov(ctx);
        if (cmd == "sweep") return run_sweep(ctx);
        if (cmd == "selftest") return run_selftest(ctx);
        throw config_error("unknown subcommand '" + cmd + "'");
    } catch (const config_error& e) {
        ctx.note(std::string("configuration error: ") + e.what());
        return 2;
    } catch (const precondition_error& e) {
        ctx.note(std::string("precondition error: ") + e.what());
        return 2;
    } catch (const certification_error& e) {
        ctx.note(std::string("certification error: ") + e.what());
        return 2;
    } catch (const kernel_error& e) {
        ctx.note(std::string("kernel error: ") + e.what());
        return 2;
    } catch (const range_error& e) {
        ctx.note(std::string("range error: ") + e.what());
        return 2;
    } catch (const capability_error& e) {
        ctx.note(std::string("capability error: ") + e.what());
        return 2;
    } catch (const dimension_error& e) {
        ctx.note(std::string("dimension error: ") + e.what());
        return 2;
    } catch (const domain_error& e) {
        ctx.note(std::string("domain error: ") + e.what());
        return 2;
    } catch (const blowup_error& e) {
        ctx.note(std::string("blow-up: ") + e.what());
        return 1;
    } catch (const convergence_error& e) {
        ctx.note(std::string("convergence failure: ") + e.what());
        return 1;
    } catch (const error& e) {
        ctx.note(std::string("error: ") + e.what());
        return 1;
    }
}

}  // namespace nonlocal
