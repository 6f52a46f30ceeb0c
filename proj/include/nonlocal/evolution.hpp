#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/grid.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/nonlinearity.hpp"

namespace nonlocal {

enum class StepMethod { exp_euler, exp_midpoint };

inline StepMethod parse_method(const std::string& name) {
    if (name == "exp_euler") return StepMethod::exp_euler;
    if (name == "exp_midpoint") return StepMethod::exp_midpoint;
    throw config_error("unknown method '" + name + "' (expected exp_euler or exp_midpoint)");
}

inline std::string method_name(StepMethod m) {
    return m == StepMethod::exp_euler ? "exp_euler" : "exp_midpoint";
}

struct ProcessConfig {
    double dt = 1e-2;
    StepMethod method = StepMethod::exp_euler;
    bool richardson = false;
    double tol = 1e-6;  // target local error when richardson is on

    void validate() const {
        if (!(dt > 0.0)) throw config_error("process config requires dt > 0");
        if (!(tol > 0.0)) throw config_error("process config requires tol > 0");
    }
};

/// Output of integrate: times starting at tau and one state per time.
struct Trajectory {
    std::vector<double> times;
    std::vector<Field> states;

    std::size_t size() const { return times.size(); }
    const Field& front() const { return states.front(); }
    const Field& back() const { return states.back(); }
    double max_step() const {
        double h = 0.0;
        for (std::size_t k = 1; k < times.size(); ++k) h = std::max(h, times[k] - times[k - 1]);
        return h;
    }
};

inline constexpr double blowup_threshold = 1e12;

namespace detail {

inline void check_finite_state(const Field& u, double t) {
    double m = 0.0;
    for (double v : u.values) {
        if (!std::isfinite(v))
            throw blowup_error("non-finite state at t=" + std::to_string(t));
        m = std::max(m, std::abs(v));
    }
    if (m > blowup_threshold)
        throw blowup_error("blow-up at t=" + std::to_string(t) + ": |u|_inf=" + std::to_string(m));
}

/// Step times tau = t_0 < ... < t_m = t; uniform step h except for a shorter
/// final step when (t - tau) is not a multiple of h.  When the span is an
/// integer number of steps the division is carried out exactly enough that
/// sub-runs over aligned windows reuse the same step size bit for bit.
inline std::vector<double> step_times(double tau, double t, double h) {
    std::vector<double> times;
    if (t == tau) {
        times.push_back(tau);
        return times;
    }
    const double total = t - tau;
    const double ratio = total / h;
    long m = std::lround(ratio);
    double hu;
    if (m >= 1 && std::abs(ratio - static_cast<double>(m)) < 1e-9) {
        hu = total / static_cast<double>(m);
    } else {
        m = static_cast<long>(std::ceil(ratio - 1e-9));
        if (m < 1) m = 1;
        hu = h;
    }
    times.resize(static_cast<std::size_t>(m) + 1);
    for (long k = 0; k <= m; ++k) times[static_cast<std::size_t>(k)] = tau + static_cast<double>(k) * hu;
    times.back() = t;
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw config_error("degenerate time step near t=" + std::to_string(times[k]));
    return times;
}

}  // namespace detail

/// Right-hand side of the evolution equation: -u(x) + g(t, (Ku)(x)) nodewise.
inline Field rhs(double t, const Field& u, const DiscreteKernel& kernel,
                 const TimeNonlinearity& g) {
    Field ku = apply_K(kernel, u);
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = -u.values[i] + g.eval(t, ku.values[i]);
    return Field(u.grid, std::move(out));
}

/// One step of the exponential integrator.  The linear decay is applied
/// exactly through e^{-h}, so g == 0 reproduces the analytic flow and
/// equilibria u* = g0(Ku*) are exact fixed points of the step map.
inline Field step(double t, const Field& u, double h, const ProcessConfig& cfg,
                  const DiscreteKernel& kernel, const TimeNonlinearity& g) {
    if (!(h > 0.0)) throw config_error("step requires h > 0");
    const double decay = std::exp(-h);
    const double wgt = 1.0 - decay;

    Field ku = apply_K(kernel, u);
    std::vector<double> out(u.size());

    if (cfg.method == StepMethod::exp_euler) {
        for (std::size_t i = 0; i < u.size(); ++i)
            out[i] = decay * u.values[i] + wgt * g.eval(t, ku.values[i]);
    } else {
        // Predict the midpoint state with a half exp_euler step, then use the
        // nonlinear term at (t + h/2, K u_half).
        const double decay_half = std::exp(-0.5 * h);
        const double wgt_half = 1.0 - decay_half;
        Field half(u.grid, std::vector<double>(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i)
            half.values[i] = decay_half * u.values[i] + wgt_half * g.eval(t, ku.values[i]);
        Field k_half = apply_K(kernel, half);
        const double tm = t + 0.5 * h;
        for (std::size_t i = 0; i < u.size(); ++i)
            out[i] = decay * u.values[i] + wgt * g.eval(tm, k_half.values[i]);
    }

    Field result(u.grid, std::move(out));
    detail::check_finite_state(result, t + h);
    return result;
}

namespace detail {

/// One macro step with optional Richardson halving: the step is compared with
/// two half steps and recursively bisected until the extrapolated local error
/// estimate is below tol.
inline Field adaptive_step(double t, const Field& u, double h, const ProcessConfig& cfg,
                           const DiscreteKernel& kernel, const TimeNonlinearity& g, int depth) {
    Field coarse = step(t, u, h, cfg, kernel, g);
    if (!cfg.richardson) return coarse;

    Field mid = step(t, u, 0.5 * h, cfg, kernel, g);
    Field fine = step(t + 0.5 * h, mid, 0.5 * h, cfg, kernel, g);
    double err = 0.0;
    const double order_factor = (cfg.method == StepMethod::exp_euler) ? 1.0 : 3.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        err = std::max(err, std::abs(fine.values[i] - coarse.values[i]) / order_factor);
    if (err <= cfg.tol || depth >= 20) return fine;

    Field first = adaptive_step(t, u, 0.5 * h, cfg, kernel, g, depth + 1);
    return adaptive_step(t + 0.5 * h, first, 0.5 * h, cfg, kernel, g, depth + 1);
}

}  // namespace detail

/// March from (tau, u_tau) to time t, recording each macro step.  The final
/// step is shortened so the last time equals t exactly.
inline Trajectory integrate(const Field& u_tau, double tau, double t, const ProcessConfig& cfg,
                            const DiscreteKernel& kernel, const TimeNonlinearity& g) {
    cfg.validate();
    if (t < tau) throw config_error("integrate requires t >= tau");

    Trajectory traj;
    traj.times = detail::step_times(tau, t, cfg.dt);
    traj.states.reserve(traj.times.size());
    traj.states.push_back(u_tau);
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
        const double tk = traj.times[k - 1];
        const double h = traj.times[k] - tk;
        traj.states.push_back(detail::adaptive_step(tk, traj.states.back(), h, cfg, kernel, g, 0));
    }
    return traj;
}

/// Same march as integrate but keeping only the final state.
inline Field evolve_final(const Field& u_tau, double tau, double t, const ProcessConfig& cfg,
                          const DiscreteKernel& kernel, const TimeNonlinearity& g) {
    cfg.validate();
    if (t < tau) throw config_error("integrate requires t >= tau");
    const std::vector<double> times = detail::step_times(tau, t, cfg.dt);
    Field u = u_tau;
    for (std::size_t k = 1; k < times.size(); ++k)
        u = detail::adaptive_step(times[k - 1], u, times[k] - times[k - 1], cfg, kernel, g, 0);
    return u;
}

// ---------------------------------------------------------------------------
// Picard solver for the mild-solution operator
//   (G phi)(t) = e^{-(t-tau)} u_tau + int_tau^t e^{-(t-s)} g(s, K phi(s)) ds,
// discretized on a uniform inner time grid with trapezoid convolution
// quadrature.  G contracts when k_M (T - tau) < 1; windows are split until
// k_M * window < 0.5.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::size_t picard_inner_intervals = 32;

inline std::vector<double> picard_inner_times(double tau, double T, std::size_t m) {
    std::vector<double> s(m + 1);
    const double h = (T - tau) / static_cast<double>(m);
    for (std::size_t j = 0; j <= m; ++j) s[j] = tau + static_cast<double>(j) * h;
    s[m] = T;
    return s;
}

/// One application of the discrete mild-solution operator: phi -> G phi on the
/// inner time grid s, with the initial slot pinned to phi[0].  Returns the
/// largest nodewise change.
inline double apply_G_discrete(std::vector<Field>& phi, const std::vector<double>& s,
                               const DiscreteKernel& kernel, const TimeNonlinearity& g) {
    const std::size_t m = s.size() - 1;
    const double tau = s.front();
    const double h = (s.back() - tau) / static_cast<double>(m);
    const std::size_t n = phi.front().size();

    std::vector<Field> gval(m + 1, Field(phi.front().grid, 0.0));
    for (std::size_t j = 0; j <= m; ++j) {
        Field kphi = apply_K(kernel, phi[j]);
        for (std::size_t i = 0; i < n; ++i) gval[j].values[i] = g.eval(s[j], kphi.values[i]);
    }

    double change = 0.0;
    for (std::size_t jt = m; jt >= 1; --jt) {
        const double tj = s[jt];
        Field next(phi.front().grid, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            double acc = std::exp(-(tj - tau)) * phi[0].values[i];
            for (std::size_t j = 0; j <= jt; ++j) {
                const double w = (j == 0 || j == jt) ? 0.5 * h : h;
                acc += w * std::exp(-(tj - s[j])) * gval[j].values[i];
            }
            next.values[i] = acc;
        }
        for (std::size_t i = 0; i < n; ++i)
            change = std::max(change, std::abs(next.values[i] - phi[jt].values[i]));
        phi[jt] = std::move(next);
    }
    return change;
}

inline Field picard_window(const Field& u_tau, double tau, double T, const DiscreteKernel& kernel,
                           const TimeNonlinearity& g, std::size_t max_iter, double tol,
                           std::size_t inner_intervals) {
    const std::vector<double> s = picard_inner_times(tau, T, inner_intervals);
    std::vector<Field> phi(s.size(), u_tau);  // constant-in-time initial guess

    const double inner_tol = 0.05 * tol;
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
        change = apply_G_discrete(phi, s, kernel, g);
        check_finite_state(phi.back(), T);
        if (change < inner_tol) return phi.back();
    }
    throw convergence_error("picard iteration exceeded " + std::to_string(max_iter) +
                            " iterations; residual " + std::to_string(change));
}

}  // namespace detail

/// Fixed point of the mild-solution operator on [tau, T]; returns the state at
/// T.  Agrees with integrate within max(tol, integration error).
inline Field picard_solve(const Field& u_tau, double tau, double T, const DiscreteKernel& kernel,
                          const TimeNonlinearity& g, std::size_t max_iter = 200,
                          double tol = 1e-6) {
    if (T < tau) throw config_error("picard_solve requires T >= tau");
    if (T == tau) return u_tau;

    double u_inf = 0.0;
    for (double v : u_tau.values) u_inf = std::max(u_inf, std::abs(v));
    const double ball_L = 1.0 + u_inf;  // fixed choice of the window ball radius
    const double box = ball_L + u_inf;
    const double k_M =
        lipschitz_estimate(g, Interval{tau, T}, Interval{-box, box}, 512);

    // Split until k_M * window < 0.5 (safety factor 2 under the contraction
    // condition); cap windows at 0.5 so the inner quadrature stays resolved.
    double w_max = 0.5;
    if (k_M > 0.0) w_max = std::min(w_max, 0.5 / k_M);
    const std::size_t windows =
        static_cast<std::size_t>(std::ceil((T - tau) / w_max - 1e-12));
    if (windows > 1000000) throw convergence_error("picard window splitting diverged");

    Field u = u_tau;
    const double wlen = (T - tau) / static_cast<double>(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        const double t0 = tau + static_cast<double>(w) * wlen;
        const double t1 = (w + 1 == windows) ? T : t0 + wlen;
        u = detail::picard_window(u, t0, t1, kernel, g, max_iter, tol,
                                  detail::picard_inner_intervals);
    }
    return u;
}

/// Contraction window length used by picard_solve for this initial state.
inline double picard_window_length(const Field& u_tau, double tau, double T,
                                   const TimeNonlinearity& g) {
    double u_inf = 0.0;
    for (double v : u_tau.values) u_inf = std::max(u_inf, std::abs(v));
    const double box = 1.0 + 2.0 * u_inf;
    const double k_M = lipschitz_estimate(g, Interval{tau, T}, Interval{-box, box}, 512);
    double w_max = 0.5;
    if (k_M > 0.0) w_max = std::min(w_max, 0.5 / k_M);
    return w_max;
}

}  // namespace nonlocal
