#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"

namespace nonlocal {

enum class QuadratureRule { trapezoid, midpoint };

inline QuadratureRule parse_rule(const std::string& name) {
    if (name == "trapezoid") return QuadratureRule::trapezoid;
    if (name == "midpoint") return QuadratureRule::midpoint;
    throw config_error("unknown quadrature rule '" + name + "' (expected trapezoid or midpoint)");
}

inline std::string rule_name(QuadratureRule r) {
    return r == QuadratureRule::trapezoid ? "trapezoid" : "midpoint";
}

/// Quadrature discretization of the interval domain: nodes, positive weights,
/// and the total measure b - a.  Weights sum to the measure.
struct SpatialGrid {
    double a = 0.0;
    double b = 1.0;
    std::size_t n = 0;
    QuadratureRule rule = QuadratureRule::trapezoid;
    std::vector<double> nodes;
    std::vector<double> weights;
    double measure = 0.0;

    bool same_layout(const SpatialGrid& other) const {
        return a == other.a && b == other.b && n == other.n && rule == other.rule;
    }
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

inline GridPtr build_grid(double a, double b, std::size_t n, QuadratureRule rule) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw config_error("grid endpoints must be finite");
    if (!(b > a)) throw config_error("grid requires b > a");
    if (n < 2) throw config_error("grid requires at least 2 nodes");

    SpatialGrid g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.rule = rule;
    g.measure = b - a;
    g.nodes.resize(n);
    g.weights.resize(n);

    if (rule == QuadratureRule::trapezoid) {
        const double h = (b - a) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes[i] = a + static_cast<double>(i) * h;
            g.weights[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        }
        g.nodes[n - 1] = b;
    } else {
        const double h = (b - a) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes[i] = a + (static_cast<double>(i) + 0.5) * h;
            g.weights[i] = h;
        }
    }
    return std::make_shared<const SpatialGrid>(std::move(g));
}

inline GridPtr build_grid(double a, double b, std::size_t n, const std::string& rule) {
    return build_grid(a, b, n, parse_rule(rule));
}

/// State u at the grid nodes; implicitly zero outside the domain.
struct Field {
    GridPtr grid;
    std::vector<double> values;

    Field() = default;
    Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        check();
    }
    /// Constant field.
    Field(GridPtr g, double c) : grid(std::move(g)), values(grid->n, c) {
        if (!std::isfinite(c)) throw domain_error("non-finite constant field value");
    }

    void check() const {
        if (!grid) throw dimension_error("field has no grid");
        if (values.size() != grid->n)
            throw dimension_error("field has " + std::to_string(values.size()) +
                                  " values on a grid of " + std::to_string(grid->n) + " nodes");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isfinite(values[i]))
                throw domain_error("non-finite field value at node " + std::to_string(i));
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

inline void require_same_grid(const Field& u, const Field& v) {
    if (u.grid == v.grid) return;
    if (u.grid && v.grid && u.grid->same_layout(*v.grid)) return;
    throw dimension_error("fields live on different grids");
}

/// Build a field from a scalar function of the node coordinate.
template <class F>
Field make_field(const GridPtr& grid, F&& f) {
    std::vector<double> v(grid->n);
    for (std::size_t i = 0; i < grid->n; ++i) v[i] = f(grid->nodes[i]);
    return Field(grid, std::move(v));
}

inline constexpr double infinite_p = std::numeric_limits<double>::infinity();

/// Discrete L^p norm: (sum_i w_i |u_i|^p)^(1/p), or max_i |u_i| when p is infinite.
inline double lp_norm(const Field& u, double p) {
    if (std::isnan(p) || p < 1.0) throw config_error("lp_norm requires p >= 1 or p = inf");
    const std::size_t n = u.size();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(u.values[i]));
        return m;
    }
    const auto& w = u.grid->weights;
    double s = 0.0;
    if (p == 1.0) {
        for (std::size_t i = 0; i < n; ++i) s += w[i] * std::abs(u.values[i]);
        return s;
    }
    if (p == 2.0) {
        for (std::size_t i = 0; i < n; ++i) s += w[i] * u.values[i] * u.values[i];
        return std::sqrt(s);
    }
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::pow(std::abs(u.values[i]), p);
    return std::pow(s, 1.0 / p);
}

inline double lp_distance(const Field& u, const Field& v, double p) {
    require_same_grid(u, v);
    Field d = u;
    for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= v.values[i];
    return lp_norm(d, p);
}

/// |Omega|^(1/p), taken as 1 when p is infinite.
inline double measure_power(double measure, double p) {
    if (std::isinf(p)) return 1.0;
    return std::pow(measure, 1.0 / p);
}

}  // namespace nonlocal
