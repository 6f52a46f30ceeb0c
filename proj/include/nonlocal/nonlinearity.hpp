#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"

namespace nonlocal {

/// Autonomous limit g0 with uniform bound a (|g0| <= a everywhere) and, when
/// it exists in closed form, the inverse on the range of g0.  Built-ins supply
/// analytic inverses; invert_autonomous falls back to bisection plus Newton.
struct AutonomousNonlinearity {
    std::function<double(double)> eval;
    std::function<double(double)> inverse;  // empty -> numeric fallback
    double bound = 0.0;                     // the constant a
    bool strictly_increasing = false;
    std::string name = "g0";

    bool has_inverse() const { return static_cast<bool>(inverse); }
};

/// Time-dependent nonlinearity g(t,x) with partial derivative d2 = dg/dx,
/// optional inverse in x, and claimed dissipativity constants k1, k2 for the
/// sublinear bound |g(t,x)| <= k2 + k1 |x|.
struct TimeNonlinearity {
    std::function<double(double, double)> eval;
    std::function<double(double, double)> d2;
    std::function<double(double, double)> inverse;  // (t, y) -> x, may be empty
    double k1 = 0.0;
    double k2 = 0.0;
    bool monotone_in_x = false;
    std::optional<AutonomousNonlinearity> limit;
    std::string name = "g";

    bool has_inverse() const { return static_cast<bool>(inverse); }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct DissipativityCertificate {
    double k1 = 0.0;
    double k2 = 0.0;
    double worst_ratio = 0.0;  // max |g| / (k2 + k1|x|) over the sample box
    Interval t_range;
    Interval x_range;
    std::size_t samples = 0;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = 0.5 * (lo + hi);
        return v;
    }
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i) * h;
    v[n - 1] = hi;
    return v;
}

}  // namespace detail

/// Check |g(t,x)| <= k2 + k1|x| on a sample grid over the given box.  Throws a
/// certification_error naming the first violating (t, x) pair; on success
/// returns the certificate with the worst observed ratio.
inline DissipativityCertificate certify_dissipativity(const TimeNonlinearity& g,
                                                      Interval t_range, Interval x_range,
                                                      std::size_t samples) {
    if (samples < 100) throw config_error("certification needs at least 100 samples");
    if (!(g.k1 < 1.0)) throw certification_error("claimed k1 must be < 1, got " +
                                                 std::to_string(g.k1));

    const std::size_t nx = samples;
    const std::size_t nt = std::min<std::size_t>(samples, 257);
    const auto ts = detail::linspace(t_range.lo, t_range.hi, nt);
    const auto xs = detail::linspace(x_range.lo, x_range.hi, nx);

    double worst = 0.0;
    for (double t : ts)
        for (double x : xs) {
            const double gv = std::abs(g.eval(t, x));
            const double allowed = g.k2 + g.k1 * std::abs(x);
            double ratio;
            if (allowed == 0.0)
                ratio = (gv == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
            else
                ratio = gv / allowed;
            if (ratio > 1.0 + 1e-12)
                throw certification_error("dissipativity bound |g| <= k2 + k1|x| fails at t=" +
                                          std::to_string(t) + ", x=" + std::to_string(x) +
                                          ": |g|=" + std::to_string(gv) + " > " +
                                          std::to_string(allowed));
            worst = std::max(worst, ratio);
            if (g.monotone_in_x && g.d2(t, x) < -1e-12)
                throw certification_error("claimed monotone_in_x but dg/dx < 0 at t=" +
                                          std::to_string(t) + ", x=" + std::to_string(x));
        }

    DissipativityCertificate cert;
    cert.k1 = g.k1;
    cert.k2 = g.k2;
    cert.worst_ratio = worst;
    cert.t_range = t_range;
    cert.x_range = x_range;
    cert.samples = nt * nx;
    return cert;
}

/// Max sampled |dg/dx| over the box; the k_B of the Gronwall bound and the
/// k_M of the Picard window.
inline double lipschitz_estimate(const TimeNonlinearity& g, Interval t_range, Interval x_range,
                                 std::size_t samples) {
    if (samples < 100) throw config_error("lipschitz estimate needs at least 100 samples");
    const std::size_t nx = samples;
    const std::size_t nt = std::min<std::size_t>(samples, 257);
    const auto ts = detail::linspace(t_range.lo, t_range.hi, nt);
    const auto xs = detail::linspace(x_range.lo, x_range.hi, nx);
    double best = 0.0;
    for (double t : ts)
        for (double x : xs) {
            const double d = g.d2(t, x);
            if (!std::isfinite(d))
                throw domain_error("non-finite derivative sample at t=" + std::to_string(t) +
                                   ", x=" + std::to_string(x));
            best = std::max(best, std::abs(d));
        }
    return best;
}

/// Solve g0(x) = theta.  Uses the analytic inverse when available, otherwise a
/// bracketed bisection refined by Newton secant steps (tolerance 1e-12).
inline double invert_autonomous(const AutonomousNonlinearity& g0, double theta) {
    if (!(std::abs(theta) < g0.bound))
        throw range_error("inverse undefined at theta=" + std::to_string(theta) +
                          " (saturation bound a=" + std::to_string(g0.bound) + ")");
    if (g0.has_inverse()) return g0.inverse(theta);

    // Bracket by expansion; g0 is increasing so the sign of g0(x) - theta flips.
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (g0.eval(lo) > theta) {
        lo *= 2.0;
        if (++guard > 60) throw range_error("theta below the range of g0");
    }
    guard = 0;
    while (g0.eval(hi) < theta) {
        hi *= 2.0;
        if (++guard > 60) throw range_error("theta above the range of g0");
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = g0.eval(mid) - theta;
        if (std::abs(v) == 0.0 || hi - lo < 1e-13 * std::max(1.0, std::abs(mid))) break;
        if (v < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    // Newton polish with a finite-difference slope.
    for (int it = 0; it < 200; ++it) {
        const double r = g0.eval(x) - theta;
        if (std::abs(r) < 1e-12) break;
        const double h = 1e-7 * std::max(1.0, std::abs(x));
        const double slope = (g0.eval(x + h) - g0.eval(x - h)) / (2.0 * h);
        if (!(slope > 0.0)) break;
        x -= r / slope;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Built-in catalogue.
// ---------------------------------------------------------------------------

namespace builtins {

inline AutonomousNonlinearity autonomous_tanh(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw config_error("tanh nonlinearity requires a, b > 0");
    AutonomousNonlinearity g0;
    g0.eval = [a, b](double x) { return a * std::tanh(b * x); };
    g0.inverse = [a, b](double y) {
        if (!(std::abs(y) < a))
            throw range_error("tanh inverse undefined at y=" + std::to_string(y));
        return std::atanh(y / a) / b;
    };
    g0.bound = a;
    g0.strictly_increasing = true;
    g0.name = "tanh";
    return g0;
}

inline TimeNonlinearity zero() {
    TimeNonlinearity g;
    g.eval = [](double, double) { return 0.0; };
    g.d2 = [](double, double) { return 0.0; };
    g.k1 = 0.0;
    g.k2 = 0.0;
    g.monotone_in_x = true;
    g.name = "zero";
    return g;
}

/// g(t,x) = a tanh(b x), autonomous.
inline TimeNonlinearity saturating_tanh(double a, double b) {
    TimeNonlinearity g;
    auto g0 = autonomous_tanh(a, b);
    g.eval = [a, b](double, double x) { return a * std::tanh(b * x); };
    g.d2 = [a, b](double, double x) {
        const double c = std::cosh(b * x);
        return a * b / (c * c);
    };
    g.inverse = [g0](double, double y) { return g0.inverse(y); };
    g.k1 = 0.0;
    g.k2 = a;
    g.monotone_in_x = true;
    g.limit = g0;
    g.name = "tanh";
    return g;
}

/// g(t,x) = (1 + c e^{-lambda t}) a tanh(b x); asymptotically autonomous with
/// limit a tanh(b x).  The claimed k2 covers t >= 0.
inline TimeNonlinearity modulated_tanh(double a, double b, double c, double lambda) {
    if (!(lambda > 0.0)) throw config_error("modulated tanh requires lambda > 0");
    if (c < 0.0) throw config_error("modulated tanh requires c >= 0");
    TimeNonlinearity g;
    auto amp = [a, c, lambda](double t) { return a * (1.0 + c * std::exp(-lambda * t)); };
    g.eval = [amp, b](double t, double x) { return amp(t) * std::tanh(b * x); };
    g.d2 = [amp, b](double t, double x) {
        const double ch = std::cosh(b * x);
        return amp(t) * b / (ch * ch);
    };
    g.inverse = [amp, b](double t, double y) {
        const double at = amp(t);
        if (!(std::abs(y) < at))
            throw range_error("modulated tanh inverse undefined at y=" + std::to_string(y));
        return std::atanh(y / at) / b;
    };
    g.k1 = 0.0;
    g.k2 = a * (1.0 + c);
    g.monotone_in_x = true;
    g.limit = autonomous_tanh(a, b);
    g.name = "modulated_tanh";
    return g;
}

/// g(t,x) = (1 + c sin(omega t)) a tanh(b x); bounded in t, no autonomous limit.
inline TimeNonlinearity sin_modulated_tanh(double a, double b, double c, double omega) {
    if (!(std::abs(c) < 1.0)) throw config_error("sin-modulated tanh requires |c| < 1");
    TimeNonlinearity g;
    auto amp = [a, c, omega](double t) { return a * (1.0 + c * std::sin(omega * t)); };
    g.eval = [amp, b](double t, double x) { return amp(t) * std::tanh(b * x); };
    g.d2 = [amp, b](double t, double x) {
        const double ch = std::cosh(b * x);
        return amp(t) * b / (ch * ch);
    };
    g.inverse = [amp, b](double t, double y) {
        const double at = amp(t);
        if (!(std::abs(y) < at))
            throw range_error("sin-modulated tanh inverse undefined at y=" + std::to_string(y));
        return std::atanh(y / at) / b;
    };
    g.k1 = 0.0;
    g.k2 = a * (1.0 + std::abs(c));
    g.monotone_in_x = true;
    g.name = "sin_tanh";
    return g;
}

/// g(t,x) = a tanh(b x) + beta.
inline TimeNonlinearity shifted_tanh(double a, double b, double beta) {
    TimeNonlinearity g;
    g.eval = [a, b, beta](double, double x) { return a * std::tanh(b * x) + beta; };
    g.d2 = [a, b](double, double x) {
        const double c = std::cosh(b * x);
        return a * b / (c * c);
    };
    g.inverse = [a, b, beta](double, double y) {
        if (!(std::abs(y - beta) < a))
            throw range_error("shifted tanh inverse undefined at y=" + std::to_string(y));
        return std::atanh((y - beta) / a) / b;
    };
    g.k1 = 0.0;
    g.k2 = a + std::abs(beta);
    g.monotone_in_x = true;
    AutonomousNonlinearity g0;
    g0.eval = [a, b, beta](double x) { return a * std::tanh(b * x) + beta; };
    g0.inverse = [a, b, beta](double y) {
        if (!(std::abs(y - beta) < a))
            throw range_error("shifted tanh inverse undefined at y=" + std::to_string(y));
        return std::atanh((y - beta) / a) / b;
    };
    g0.bound = a + std::abs(beta);
    g0.strictly_increasing = true;
    g0.name = "shifted_tanh";
    g.limit = g0;
    g.name = "shifted_tanh";
    return g;
}

}  // namespace builtins

/// Default certification box: |x| up to a generous multiple of the absorbing
/// scale k2/(1-k1), at least radius 10.
inline Interval default_certification_box(const TimeNonlinearity& g) {
    const double scale = (g.k1 < 1.0) ? g.k2 / (1.0 - g.k1) : g.k2;
    const double r = std::max(10.0, 10.0 * scale);
    return Interval{-r, r};
}

}  // namespace nonlocal
