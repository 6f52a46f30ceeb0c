#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nonlocal/ensemble.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/evolution.hpp"
#include "nonlocal/parallel.hpp"

namespace nonlocal {

/// Radius of the pullback absorbing ball, (1+delta) k2 |Omega|^{1/p} / (1-k1);
/// delta = 0 gives the ball that contains the pullback attractor.
inline double absorbing_radius(double k1, double k2, double measure, double p, double delta) {
    if (!(k1 >= 0.0) || !(k1 < 1.0))
        throw domain_error("absorbing radius requires 0 <= k1 < 1 (dissipativity)");
    if (!(k2 >= 0.0)) throw domain_error("absorbing radius requires k2 >= 0");
    if (!(delta >= 0.0)) throw domain_error("absorbing radius requires delta >= 0");
    return (1.0 + delta) * k2 * measure_power(measure, p) / (1.0 - k1);
}

// ---------------------------------------------------------------------------
// Decay envelope: while the L^p norm sits outside the (1+delta) absorbing
// ball, its p-th power decays at least like
//   exp(-delta p (1-k1)(t-tau) / (1+delta))
// relative to the initial norm.  A tolerance factor (1 + 10 dt) absorbs the
// discretization.
// ---------------------------------------------------------------------------

struct EnvelopeViolation {
    double t = 0.0;
    double norm = 0.0;
    double bound = 0.0;
};

struct EnvelopeReport {
    double radius = 0.0;           // (1+delta) ball radius
    std::size_t samples_outside = 0;
    std::vector<EnvelopeViolation> violations;
    bool ok() const { return violations.empty(); }
};

inline EnvelopeReport decay_envelope_check(const Trajectory& traj, double k1, double k2, double p,
                                           double delta) {
    if (traj.size() == 0) throw domain_error("empty trajectory");
    EnvelopeReport report;
    report.radius = absorbing_radius(k1, k2, traj.front().grid->measure, p, delta);

    const double dt = traj.max_step();
    const double tol_factor = 1.0 + 10.0 * dt;
    const double tau = traj.times.front();
    const double norm0 = lp_norm(traj.front(), p);
    const double rate = std::isinf(p) ? delta * (1.0 - k1) / (1.0 + delta)
                                      : delta * p * (1.0 - k1) / (1.0 + delta);

    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double norm = lp_norm(traj.states[k], p);
        if (norm < report.radius) continue;
        ++report.samples_outside;
        // Compare p-th powers for finite p, plain norms for p = inf.
        double measured, bound;
        if (std::isinf(p)) {
            measured = norm;
            bound = std::exp(-rate * (traj.times[k] - tau)) * norm0 * tol_factor;
        } else {
            measured = std::pow(norm, p);
            bound = std::exp(-rate * (traj.times[k] - tau)) * std::pow(norm0, p) * tol_factor;
        }
        if (measured > bound)
            report.violations.push_back({traj.times[k], measured, bound});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Pullback omega-limit estimate: evolve the seed ensemble from increasingly
// early starting times t - d_k to the fixed section time t and watch the
// Hausdorff semi-distance between consecutive images stabilize.
// ---------------------------------------------------------------------------

struct AttractorEstimate {
    double t = 0.0;                       // section time
    Ensemble ensemble;                    // deepest pullback image
    std::vector<double> pullback_depths;
    std::vector<double> residuals;        // dist(E_k, E_{k+1})
    bool converged = false;
};

inline AttractorEstimate pullback_omega_limit(double t, const Ensemble& seed,
                                              const std::vector<double>& depths,
                                              const ProcessConfig& cfg,
                                              const DiscreteKernel& kernel,
                                              const TimeNonlinearity& g, double tol,
                                              double p = 2.0, unsigned threads = 1) {
    if (seed.empty()) throw domain_error("pullback estimate needs a non-empty seed");
    if (depths.empty()) throw config_error("pullback estimate needs at least one depth");
    for (std::size_t k = 1; k < depths.size(); ++k)
        if (!(depths[k] > depths[k - 1]))
            throw config_error("pullback depths must be strictly increasing");

    // Certify the claimed dissipativity before any attractor-mode run.
    {
        double seed_sup = 1.0;
        for (const auto& m : seed.members)
            seed_sup = std::max(seed_sup, lp_norm(m, infinite_p));
        Interval box = default_certification_box(g);
        box.lo = std::min(box.lo, -2.0 * seed_sup);
        box.hi = std::max(box.hi, 2.0 * seed_sup);
        const double t_lo = t - depths.back();
        certify_dissipativity(g, Interval{t_lo, std::max(t, t_lo + 1.0)}, box, 128);
    }

    const std::size_t nm = seed.size();
    const std::size_t nd = depths.size();
    std::vector<Field> images(nm * nd, Field(seed.grid, 0.0));
    parallel_for_index(nm * nd, threads, [&](std::size_t idx) {
        const std::size_t k = idx / nm;
        const std::size_t m = idx % nm;
        images[idx] = evolve_final(seed.members[m], t - depths[k], t, cfg, kernel, g);
    });

    std::vector<Ensemble> stages;
    stages.reserve(nd);
    for (std::size_t k = 0; k < nd; ++k) {
        std::vector<Field> members(images.begin() + static_cast<std::ptrdiff_t>(k * nm),
                                   images.begin() + static_cast<std::ptrdiff_t>((k + 1) * nm));
        stages.emplace_back(seed.grid, std::move(members),
                            "depth " + std::to_string(depths[k]));
    }

    AttractorEstimate est;
    est.t = t;
    est.pullback_depths = depths;
    for (std::size_t k = 0; k + 1 < nd; ++k)
        est.residuals.push_back(hausdorff_semidist(stages[k], stages[k + 1], p));
    est.converged = !est.residuals.empty() && est.residuals.back() < tol;
    est.ensemble = std::move(stages.back());
    est.ensemble.label = "pullback estimate at t=" + std::to_string(t);
    return est;
}

struct ContainmentReport {
    double radius = 0.0;    // attractor containment radius, delta = 0
    double max_norm = 0.0;  // largest member norm
    bool ok = false;
};

/// Check the containment claim: every member of the estimate lies inside the
/// delta = 0 ball of radius k2 |Omega|^{1/p} / (1-k1), up to tol.
inline ContainmentReport estimate_containment(const AttractorEstimate& est, double k1, double k2,
                                              double p, double tol) {
    ContainmentReport rep;
    rep.radius = absorbing_radius(k1, k2, est.ensemble.grid->measure, p, 0.0);
    for (const auto& m : est.ensemble.members)
        rep.max_norm = std::max(rep.max_norm, lp_norm(m, p));
    rep.ok = rep.max_norm <= rep.radius + tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Regularity: attractor members inherit the gradient bound k3 * C * M, where
// C bounds sup_x ||d/dx J(x,.)||_q and k3 bounds |D2 g| on the absorbing ball.
// ---------------------------------------------------------------------------

struct GradientBoundReport {
    double bound = 0.0;
    double max_gradient = 0.0;
    double slack = 0.0;
    bool ok = false;
};

inline GradientBoundReport gradient_bound_check(const AttractorEstimate& est,
                                                double kernel_dx_bound, double k3, double M,
                                                double tol = 1e-8) {
    GradientBoundReport rep;
    rep.bound = k3 * kernel_dx_bound * M;
    const auto& grid = *est.ensemble.grid;
    for (const auto& member : est.ensemble.members) {
        for (std::size_t i = 0; i < grid.n; ++i) {
            const std::size_t lo = (i == 0) ? 0 : i - 1;
            const std::size_t hi = (i + 1 == grid.n) ? i : i + 1;
            if (hi == lo) continue;
            const double grad =
                (member.values[hi] - member.values[lo]) / (grid.nodes[hi] - grid.nodes[lo]);
            rep.max_gradient = std::max(rep.max_gradient, std::abs(grad));
        }
    }
    rep.slack = rep.bound + tol - rep.max_gradient;
    rep.ok = rep.max_gradient <= rep.bound + tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Upper semicontinuity experiment: trajectories of the perturbed problems stay
// within the Gronwall envelope |Omega|^{1/p} ||g_b - g_b0||_inf e^{k_B (t-tau)}
// of the reference, and the pullback estimates approach the reference estimate
// as the parameter approaches beta0.
// ---------------------------------------------------------------------------

struct SemicontinuityRow {
    double beta = 0.0;
    double g_distance = 0.0;       // sup |g_beta - g_beta0| over the sample box
    double traj_distance = 0.0;    // max over members/times of the L^p distance
    double gronwall_bound = 0.0;   // envelope at the final time
    bool traj_bound_ok = false;    // envelope respected at every output time
    double attractor_distance = 0.0;
};

struct SemicontinuityReport {
    double beta0 = 0.0;
    double k_B = 0.0;
    std::vector<SemicontinuityRow> rows;
    bool trajectories_ok = false;
    bool attractor_monotone = false;
    double final_attractor_distance = 0.0;
};

struct ParameterizedFamily {
    std::vector<double> betas;
    std::vector<TimeNonlinearity> members;
};

inline SemicontinuityReport semicontinuity_experiment(
    double t, const ParameterizedFamily& family, const TimeNonlinearity& g0_ref, double beta0,
    const Ensemble& seed, const ProcessConfig& cfg, const DiscreteKernel& kernel,
    double horizon = 2.0, const std::vector<double>& depths = {5, 10, 20, 40},
    double attractor_tol = 1e-4, double p = 2.0, unsigned threads = 1) {
    if (family.betas.size() != family.members.size())
        throw config_error("parameter list and nonlinearity list differ in length");
    if (seed.empty()) throw domain_error("semicontinuity experiment needs a seed ensemble");

    const double tau = t - horizon;
    const double measure_p = measure_power(kernel.grid->measure, p);

    // Common sample box for the g-distance and the Lipschitz constant.
    double seed_sup = 1.0;
    for (const auto& m : seed.members) seed_sup = std::max(seed_sup, lp_norm(m, infinite_p));
    Interval box = default_certification_box(g0_ref);
    box.lo = std::min(box.lo, -2.0 * seed_sup);
    box.hi = std::max(box.hi, 2.0 * seed_sup);
    const Interval t_box{tau, t};

    double k_B = lipschitz_estimate(g0_ref, t_box, box, 512);
    for (const auto& gb : family.members)
        k_B = std::max(k_B, lipschitz_estimate(gb, t_box, box, 512));

    // Reference trajectories from each seed member.
    std::vector<Trajectory> ref(seed.size());
    parallel_for_index(seed.size(), threads, [&](std::size_t m) {
        ref[m] = integrate(seed.members[m], tau, t, cfg, kernel, g0_ref);
    });
    AttractorEstimate ref_est =
        pullback_omega_limit(t, seed, depths, cfg, kernel, g0_ref, attractor_tol, p, threads);

    SemicontinuityReport report;
    report.beta0 = beta0;
    report.k_B = k_B;
    report.rows.resize(family.betas.size());

    parallel_for_index(family.betas.size(), threads, [&](std::size_t b) {
        const auto& gb = family.members[b];
        SemicontinuityRow row;
        row.beta = family.betas[b];

        // sup over the box of |g_beta - g_beta0|.
        const auto ts = detail::linspace(t_box.lo, t_box.hi, 129);
        const auto xs = detail::linspace(box.lo, box.hi, 1024);
        for (double tv : ts)
            for (double xv : xs)
                row.g_distance =
                    std::max(row.g_distance, std::abs(gb.eval(tv, xv) - g0_ref.eval(tv, xv)));

        row.traj_bound_ok = true;
        for (std::size_t m = 0; m < seed.size(); ++m) {
            Trajectory tb = integrate(seed.members[m], tau, t, cfg, kernel, gb);
            for (std::size_t k = 0; k < tb.size(); ++k) {
                const double dist = lp_distance(tb.states[k], ref[m].states[k], p);
                const double bound =
                    measure_p * row.g_distance * std::exp(k_B * (tb.times[k] - tau)) + 1e-12;
                row.traj_distance = std::max(row.traj_distance, dist);
                if (dist > bound) row.traj_bound_ok = false;
            }
        }
        row.gronwall_bound = measure_p * row.g_distance * std::exp(k_B * horizon);

        AttractorEstimate eb =
            pullback_omega_limit(t, seed, depths, cfg, kernel, gb, attractor_tol, p, 1);
        row.attractor_distance = hausdorff_semidist(eb.ensemble, ref_est.ensemble, p);
        report.rows[b] = row;
    });

    report.trajectories_ok = true;
    for (const auto& row : report.rows) report.trajectories_ok &= row.traj_bound_ok;
    report.attractor_monotone = true;
    for (std::size_t b = 1; b < report.rows.size(); ++b)
        if (report.rows[b].attractor_distance > report.rows[b - 1].attractor_distance + 1e-12)
            report.attractor_monotone = false;
    if (!report.rows.empty())
        report.final_attractor_distance = report.rows.back().attractor_distance;
    return report;
}

// ---------------------------------------------------------------------------
// Default seed ensembles: constants spanning the scaled absorbing ball plus a
// few random smooth fields from a fixed seed.  The generator is hand-rolled so
// artifacts do not depend on the standard library's distribution details.
// ---------------------------------------------------------------------------

namespace detail {

/// xorshift64* stream mapped to [-1, 1).
class SmallRng {
public:
    explicit SmallRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double next_unit() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        const std::uint64_t z = state_ * 0x2545f4914f6cdd1dull;
        return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    }

private:
    std::uint64_t state_;
};

}  // namespace detail

inline Ensemble default_seed_ensemble(const GridPtr& grid, double radius, std::uint64_t rng_seed,
                                      std::size_t n_constants = 13, std::size_t n_random = 8) {
    std::vector<Field> members;
    members.reserve(n_constants + n_random);
    const double R = 1.5 * radius;
    for (std::size_t i = 0; i < n_constants; ++i) {
        const double c = (n_constants == 1)
                             ? 0.0
                             : -R + 2.0 * R * static_cast<double>(i) /
                                       static_cast<double>(n_constants - 1);
        members.emplace_back(grid, c);
    }
    detail::SmallRng rng(rng_seed);
    for (std::size_t r = 0; r < n_random; ++r) {
        double c0 = 0.5 * R * rng.next_unit();
        double c1 = 0.5 * R * rng.next_unit();
        double c2 = 0.25 * R * rng.next_unit();
        double c3 = 0.125 * R * rng.next_unit();
        members.push_back(make_field(grid, [&](double x) {
            const double s = (x - grid->a) / grid->measure;
            return c0 + c1 * std::sin(std::numbers::pi * s) +
                   c2 * std::sin(2.0 * std::numbers::pi * s) +
                   c3 * std::sin(3.0 * std::numbers::pi * s);
        }));
    }
    return Ensemble(grid, std::move(members), "default seed");
}

}  // namespace nonlocal
