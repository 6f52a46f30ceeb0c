#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/ensemble.hpp"
#include "nonlocal/errors.hpp"
#include "nonlocal/evolution.hpp"

namespace nonlocal {

/// Ordered nonlinearities f <= g <= h (f, h increasing in x) together with
/// ordered initial data.  The sampled ordering is certified by
/// verify_comparison before the three problems are integrated.
struct OrderedTriple {
    TimeNonlinearity f;
    TimeNonlinearity g;
    TimeNonlinearity h;
    Field v_tau;
    Field u_tau;
    Field V_tau;
};

namespace detail {

/// Time derivative along a trajectory by three-point Lagrange differentiation:
/// centered in the interior, one-sided second order at the endpoints.
inline std::vector<Field> time_derivative(const Trajectory& traj) {
    const std::size_t m = traj.size();
    if (m < 3) throw domain_error("time derivative needs at least 3 samples");
    const std::size_t n = traj.front().size();
    std::vector<Field> out(m, Field(traj.front().grid, 0.0));

    auto stencil = [&](std::size_t k0, std::size_t k1, std::size_t k2, std::size_t at) {
        const double t0 = traj.times[k0], t1 = traj.times[k1], t2 = traj.times[k2];
        const double ta = traj.times[at];
        const double c0 = (2.0 * ta - t1 - t2) / ((t0 - t1) * (t0 - t2));
        const double c1 = (2.0 * ta - t0 - t2) / ((t1 - t0) * (t1 - t2));
        const double c2 = (2.0 * ta - t0 - t1) / ((t2 - t0) * (t2 - t1));
        for (std::size_t i = 0; i < n; ++i)
            out[at].values[i] = c0 * traj.states[k0].values[i] +
                                c1 * traj.states[k1].values[i] +
                                c2 * traj.states[k2].values[i];
    };

    stencil(0, 1, 2, 0);
    for (std::size_t k = 1; k + 1 < m; ++k) stencil(k - 1, k, k + 1, k);
    stencil(m - 3, m - 2, m - 1, m - 1);
    return out;
}

}  // namespace detail

/// Per-sample max over nodes of dv/dt + v - f(t, Kv); a sub solution keeps
/// every entry <= 0 up to discretization error.
inline std::vector<double> subsolution_residual(const Trajectory& v, const DiscreteKernel& kernel,
                                                const TimeNonlinearity& f) {
    const auto dv = detail::time_derivative(v);
    std::vector<double> res(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        Field kv = apply_K(kernel, v.states[k]);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kv.size(); ++i)
            worst = std::max(worst, dv[k].values[i] + v.states[k].values[i] -
                                        f.eval(v.times[k], kv.values[i]));
        res[k] = worst;
    }
    return res;
}

/// Mirror check: per-sample max over nodes of -V + h(t, KV) - dV/dt.
inline std::vector<double> supersolution_residual(const Trajectory& V,
                                                  const DiscreteKernel& kernel,
                                                  const TimeNonlinearity& h) {
    const auto dV = detail::time_derivative(V);
    std::vector<double> res(V.size());
    for (std::size_t k = 0; k < V.size(); ++k) {
        Field kv = apply_K(kernel, V.states[k]);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kv.size(); ++i)
            worst = std::max(worst, -V.states[k].values[i] + h.eval(V.times[k], kv.values[i]) -
                                        dV[k].values[i]);
        res[k] = worst;
    }
    return res;
}

struct ComparisonViolation {
    double t = 0.0;
    std::size_t node = 0;
    double gap = 0.0;
    std::string side;  // "lower" or "upper"
};

struct ComparisonReport {
    double min_gap_lower = 0.0;  // min over (t, node) of u - v
    double min_gap_upper = 0.0;  // min over (t, node) of V - u
    bool ordered = false;
    std::optional<ComparisonViolation> first_violation;
};

/// Integrate the f-, g- and h-problems from ordered data and verify the
/// ordering v <= u <= V nodewise at every output time.
inline ComparisonReport verify_comparison(const OrderedTriple& triple, double tau, double t,
                                          const ProcessConfig& cfg, const DiscreteKernel& kernel) {
    require_same_grid(triple.v_tau, triple.u_tau);
    require_same_grid(triple.u_tau, triple.V_tau);
    if (!triple.f.monotone_in_x || !triple.h.monotone_in_x)
        throw precondition_error("comparison requires increasing lower and upper nonlinearities");

    for (std::size_t i = 0; i < triple.u_tau.size(); ++i) {
        if (triple.v_tau.values[i] > triple.u_tau.values[i])
            throw precondition_error("initial ordering v_tau <= u_tau fails at node " +
                                     std::to_string(i));
        if (triple.u_tau.values[i] > triple.V_tau.values[i])
            throw precondition_error("initial ordering u_tau <= V_tau fails at node " +
                                     std::to_string(i));
    }

    // Sampled ordering f <= g <= h on the certification box.
    {
        const Interval box = default_certification_box(triple.g);
        const auto xs = detail::linspace(box.lo, box.hi, 512);
        const auto ts = detail::linspace(tau, std::max(t, tau + 1.0), 65);
        for (double tv : ts)
            for (double xv : xs) {
                if (triple.f.eval(tv, xv) > triple.g.eval(tv, xv) + 1e-12)
                    throw precondition_error("ordering f <= g fails at t=" + std::to_string(tv) +
                                             ", x=" + std::to_string(xv));
                if (triple.g.eval(tv, xv) > triple.h.eval(tv, xv) + 1e-12)
                    throw precondition_error("ordering g <= h fails at t=" + std::to_string(tv) +
                                             ", x=" + std::to_string(xv));
            }
    }

    Trajectory tv = integrate(triple.v_tau, tau, t, cfg, kernel, triple.f);
    Trajectory tu = integrate(triple.u_tau, tau, t, cfg, kernel, triple.g);
    Trajectory tV = integrate(triple.V_tau, tau, t, cfg, kernel, triple.h);

    const double dt = tu.max_step();
    const double tol = 1e-8 + 10.0 * dt * dt;

    ComparisonReport rep;
    rep.min_gap_lower = std::numeric_limits<double>::infinity();
    rep.min_gap_upper = std::numeric_limits<double>::infinity();
    rep.ordered = true;
    for (std::size_t k = 0; k < tu.size(); ++k) {
        for (std::size_t i = 0; i < tu.front().size(); ++i) {
            const double lower = tu.states[k].values[i] - tv.states[k].values[i];
            const double upper = tV.states[k].values[i] - tu.states[k].values[i];
            rep.min_gap_lower = std::min(rep.min_gap_lower, lower);
            rep.min_gap_upper = std::min(rep.min_gap_upper, upper);
            if (lower < -tol && rep.ordered) {
                rep.ordered = false;
                rep.first_violation = ComparisonViolation{tu.times[k], i, lower, "lower"};
            }
            if (upper < -tol && rep.ordered) {
                rep.ordered = false;
                rep.first_violation = ComparisonViolation{tu.times[k], i, upper, "upper"};
            }
        }
        if (!rep.ordered) break;
    }
    return rep;
}

/// Iterates G^n(u_tau) of the discrete mild-solution operator at time T,
/// n = 1..iterates.  Started from a steady sub solution the sequence is
/// nodewise non-decreasing; from a super solution non-increasing; the detected
/// direction is enforced (a violation beyond 1e-10 means f is not monotone or
/// the window is too large).  The window must already be a contraction window
/// (no auto-split, so that the iterate sequence is the plain orbit of G).
inline std::vector<Field> monotone_picard(const Field& u_tau, double tau, double T,
                                          const DiscreteKernel& kernel,
                                          const TimeNonlinearity& f_increasing,
                                          std::size_t iterates) {
    if (!f_increasing.monotone_in_x)
        throw precondition_error("monotone_picard requires an increasing nonlinearity");
    if (!(T > tau)) throw config_error("monotone_picard requires T > tau");
    const double w_max = picard_window_length(u_tau, tau, T, f_increasing);
    if (T - tau > w_max + 1e-12)
        throw precondition_error("window length " + std::to_string(T - tau) +
                                 " exceeds the contraction window " + std::to_string(w_max));

    const auto s = detail::picard_inner_times(tau, T, detail::picard_inner_intervals);
    std::vector<Field> phi(s.size(), u_tau);
    std::vector<Field> sequence;
    sequence.reserve(iterates);
    int direction = 0;  // +1 ascending (sub solution start), -1 descending, 0 mixed
    for (std::size_t it = 0; it < iterates; ++it) {
        detail::apply_G_discrete(phi, s, kernel, f_increasing);
        const Field& next = phi.back();
        if (it == 0) {
            bool up = true, down = true;
            for (std::size_t i = 0; i < next.size(); ++i) {
                up &= next.values[i] >= u_tau.values[i] - 1e-10;
                down &= next.values[i] <= u_tau.values[i] + 1e-10;
            }
            direction = up ? +1 : (down ? -1 : 0);
        } else if (direction != 0) {
            const Field& prev = sequence.back();
            for (std::size_t i = 0; i < next.size(); ++i) {
                const double gap = static_cast<double>(direction) *
                                   (next.values[i] - prev.values[i]);
                if (gap < -1e-10)
                    throw convergence_error(
                        "monotone iteration reversed at iterate " + std::to_string(it + 1) +
                        ", node " + std::to_string(i) +
                        " (non-monotone nonlinearity or window too large)");
            }
        }
        sequence.push_back(next);
    }
    return sequence;
}

struct IntervalEscape {
    double t = 0.0;
    std::size_t member = 0;
    std::size_t node = 0;
    double value = 0.0;
};

struct IntervalReport {
    bool invariant = false;
    double worst_undershoot = 0.0;  // most negative of u - v_eq
    double worst_overshoot = 0.0;   // most negative of V_eq - u
    std::optional<IntervalEscape> escape;
};

/// Check that [v_eq, V_eq] is positively invariant: the barriers must be
/// steady sub/super solutions of the g-problem (equilibria of the bracketing
/// problems qualify) and every sample evolved up to the horizon must stay in
/// the interval up to tolerance.
inline IntervalReport invariant_interval_check(const Field& v_eq, const Field& V_eq,
                                               const Ensemble& samples, double horizon,
                                               const ProcessConfig& cfg,
                                               const DiscreteKernel& kernel,
                                               const TimeNonlinearity& g) {
    require_same_grid(v_eq, V_eq);
    for (std::size_t i = 0; i < v_eq.size(); ++i)
        if (v_eq.values[i] > V_eq.values[i])
            throw precondition_error("interval requires v_eq <= V_eq at node " +
                                     std::to_string(i));

    // Barrier residuals: -v + g(t, Kv) >= 0 and -V + g(t, KV) <= 0 within 1e-8.
    {
        Field kv = apply_K(kernel, v_eq);
        Field kV = apply_K(kernel, V_eq);
        const auto ts = detail::linspace(0.0, horizon, 9);
        for (double tv : ts)
            for (std::size_t i = 0; i < v_eq.size(); ++i) {
                const double lo = -v_eq.values[i] + g.eval(tv, kv.values[i]);
                const double hi = -V_eq.values[i] + g.eval(tv, kV.values[i]);
                if (lo < -1e-8)
                    throw precondition_error("lower barrier is not a steady sub solution (node " +
                                             std::to_string(i) + ", residual " +
                                             std::to_string(lo) + ")");
                if (hi > 1e-8)
                    throw precondition_error("upper barrier is not a steady super solution (node " +
                                             std::to_string(i) + ", residual " +
                                             std::to_string(hi) + ")");
            }
    }

    const double tol = 1e-8 + 10.0 * cfg.dt * cfg.dt;
    for (const auto& s : samples.members)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.values[i] < v_eq.values[i] - tol || s.values[i] > V_eq.values[i] + tol)
                throw precondition_error("sample outside the interval at node " +
                                         std::to_string(i));

    IntervalReport rep;
    rep.invariant = true;
    for (std::size_t m = 0; m < samples.size(); ++m) {
        Trajectory traj = integrate(samples.members[m], 0.0, horizon, cfg, kernel, g);
        for (std::size_t k = 0; k < traj.size(); ++k)
            for (std::size_t i = 0; i < v_eq.size(); ++i) {
                const double under = traj.states[k].values[i] - v_eq.values[i];
                const double over = V_eq.values[i] - traj.states[k].values[i];
                rep.worst_undershoot = std::min(rep.worst_undershoot, under);
                rep.worst_overshoot = std::min(rep.worst_overshoot, over);
                if ((under < -tol || over < -tol) && rep.invariant) {
                    rep.invariant = false;
                    rep.escape =
                        IntervalEscape{traj.times[k], m, i, traj.states[k].values[i]};
                }
            }
    }
    return rep;
}

}  // namespace nonlocal
