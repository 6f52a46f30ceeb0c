#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/grid.hpp"

namespace nonlocal {

using KernelFn = std::function<double(double, double)>;

/// Quadrature realization of the integral operator u -> Ku.
///
/// matrix[i][j] = J(x_i, x_j) * w_j, so Ku(x_i) is a plain matrix-vector
/// product.  raw[i][j] keeps the unweighted J(x_i, x_j) values needed by the
/// interaction term of the energy functional.  row_mass[i] is the quadrature
/// mass of J(x_i, .) over the domain; it never exceeds 1 because the kernel is
/// normalized to unit mass over the whole line.
struct DiscreteKernel {
    GridPtr grid;
    std::vector<std::vector<double>> matrix;
    std::vector<std::vector<double>> raw;
    std::vector<double> row_mass;
    bool symmetric_flag = false;
    std::string name = "custom";

    std::size_t size() const { return grid ? grid->n : 0; }
    double max_row_mass() const {
        double m = 0.0;
        for (double r : row_mass) m = std::max(m, r);
        return m;
    }
};

inline constexpr double kernel_symmetry_tol = 1e-12;
inline constexpr double kernel_mass_tol = 1e-10;

/// Assemble from a full table of raw values, raw[i][j] = J(x_i, x_j).
inline DiscreteKernel assemble_kernel_table(const GridPtr& grid,
                                            std::vector<std::vector<double>> raw,
                                            const std::string& name = "custom") {
    const std::size_t n = grid->n;
    if (raw.size() != n)
        throw dimension_error("kernel table has " + std::to_string(raw.size()) +
                              " rows for a grid of " + std::to_string(n) + " nodes");
    DiscreteKernel k;
    k.grid = grid;
    k.name = name;
    k.raw = std::move(raw);

    for (std::size_t i = 0; i < n; ++i) {
        if (k.raw[i].size() != n)
            throw dimension_error("kernel table row " + std::to_string(i) + " has " +
                                  std::to_string(k.raw[i].size()) + " columns");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = k.raw[i][j];
            if (!std::isfinite(v))
                throw kernel_error("kernel value non-finite at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
            if (v < 0.0)
                throw kernel_error("kernel value negative at (" + std::to_string(i) + "," +
                                   std::to_string(j) + "): " + std::to_string(v));
        }
    }

    // Symmetry is certified on the unweighted values.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(k.raw[i][j] - k.raw[j][i]) > kernel_symmetry_tol)
                throw kernel_error("kernel asymmetric at (" + std::to_string(i) + "," +
                                   std::to_string(j) + "): |J(x_i,x_j) - J(x_j,x_i)| = " +
                                   std::to_string(std::abs(k.raw[i][j] - k.raw[j][i])));
    k.symmetric_flag = true;

    k.matrix.assign(n, std::vector<double>(n, 0.0));
    k.row_mass.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            k.matrix[i][j] = k.raw[i][j] * grid->weights[j];
            mass += k.matrix[i][j];
        }
        if (mass > 1.0 + kernel_mass_tol)
            throw kernel_error("row mass " + std::to_string(mass) + " exceeds 1 at row " +
                               std::to_string(i));
        k.row_mass[i] = mass;
    }
    return k;
}

inline DiscreteKernel assemble_kernel(const GridPtr& grid, const KernelFn& J,
                                      const std::string& name = "custom") {
    const std::size_t n = grid->n;
    std::vector<std::vector<double>> raw(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) raw[i][j] = J(grid->nodes[i], grid->nodes[j]);
    return assemble_kernel_table(grid, std::move(raw), name);
}

/// Ku(x_i) = sum_j matrix[i][j] u_j, summed left to right.
inline Field apply_K(const DiscreteKernel& kernel, const Field& u) {
    if (!kernel.grid || (kernel.grid != u.grid && !kernel.grid->same_layout(*u.grid)))
        throw dimension_error("kernel and field live on different grids");
    const std::size_t n = kernel.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = kernel.matrix[i];
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * u.values[j];
        out[i] = s;
    }
    return Field(u.grid, std::move(out));
}

/// sup_x ||J(x,.)||_q by grid quadrature (q conjugate to p in the Hoelder bound).
inline double kernel_q_norm(const DiscreteKernel& kernel, double q) {
    if (std::isnan(q) || q < 1.0) throw config_error("kernel_q_norm requires q >= 1 or q = inf");
    const std::size_t n = kernel.size();
    const auto& w = kernel.grid->weights;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v;
        if (std::isinf(q)) {
            v = 0.0;
            for (std::size_t j = 0; j < n; ++j) v = std::max(v, kernel.raw[i][j]);
        } else {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += w[j] * std::pow(kernel.raw[i][j], q);
            v = std::pow(s, 1.0 / q);
        }
        best = std::max(best, v);
    }
    return best;
}

/// sup_x ||d/dx J(x,.)||_q estimated by centered differences across grid rows.
inline double estimate_kernel_dx_bound(const DiscreteKernel& kernel, double q) {
    const std::size_t n = kernel.size();
    if (n < 3) throw dimension_error("gradient estimate needs at least 3 nodes");
    const auto& x = kernel.grid->nodes;
    const auto& w = kernel.grid->weights;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = (i == 0) ? 0 : i - 1;
        const std::size_t hi = (i + 1 == n) ? i : i + 1;
        const double dx = x[hi] - x[lo];
        double v;
        if (std::isinf(q)) {
            v = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                v = std::max(v, std::abs(kernel.raw[hi][j] - kernel.raw[lo][j]) / dx);
        } else {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                s += w[j] * std::pow(std::abs(kernel.raw[hi][j] - kernel.raw[lo][j]) / dx, q);
            v = std::pow(s, 1.0 / q);
        }
        best = std::max(best, v);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Kernel catalogue.  Analytic kernels are normalized to unit mass over the
// whole line and then truncated to the domain; row mass records what is lost
// near the boundary.  The uniform kernel is normalized on the domain itself,
// so its row mass is exactly 1.
// ---------------------------------------------------------------------------

inline KernelFn uniform_kernel_fn(double measure) {
    const double c = 1.0 / measure;
    return [c](double, double) { return c; };
}

inline KernelFn gaussian_kernel_fn(double sigma) {
    if (!(sigma > 0.0)) throw config_error("gaussian kernel requires sigma > 0");
    const double c = 1.0 / (sigma * std::sqrt(std::numbers::pi));
    const double inv_s2 = 1.0 / (sigma * sigma);
    return [c, inv_s2](double x, double y) {
        const double d = x - y;
        return c * std::exp(-d * d * inv_s2);
    };
}

inline KernelFn tent_kernel_fn(double radius) {
    if (!(radius > 0.0)) throw config_error("tent kernel requires radius > 0");
    const double c = 1.0 / radius;
    return [c, radius](double x, double y) {
        const double d = std::abs(x - y);
        return d >= radius ? 0.0 : c * (1.0 - d / radius);
    };
}

inline DiscreteKernel make_uniform_kernel(const GridPtr& grid) {
    return assemble_kernel(grid, uniform_kernel_fn(grid->measure), "uniform");
}

inline DiscreteKernel make_gaussian_kernel(const GridPtr& grid, double sigma) {
    return assemble_kernel(grid, gaussian_kernel_fn(sigma), "gaussian");
}

inline DiscreteKernel make_tent_kernel(const GridPtr& grid, double radius) {
    return assemble_kernel(grid, tent_kernel_fn(radius), "tent");
}

/// Load a custom kernel table: header row holds the node coordinates, each of
/// the following n rows holds one row of raw J values.
inline DiscreteKernel load_kernel_csv(const GridPtr& grid, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open kernel table '" + path + "'");

    auto split = [](const std::string& line) {
        std::vector<double> out;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                out.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw config_error("kernel table: cannot parse cell '" + cell + "'");
            }
        }
        return out;
    };

    std::string line;
    if (!std::getline(in, line)) throw config_error("kernel table '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<double> coords = split(line);
    const std::size_t n = grid->n;
    if (coords.size() != n)
        throw config_error("kernel table header has " + std::to_string(coords.size()) +
                           " coordinates for a grid of " + std::to_string(n) + " nodes");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(coords[i] - grid->nodes[i]) > 1e-9)
            throw config_error("kernel table coordinate " + std::to_string(i) +
                               " does not match the grid node");

    std::vector<std::vector<double>> table;
    table.reserve(n);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        table.push_back(split(line));
        if (table.back().size() != n)
            throw config_error("kernel table row " + std::to_string(table.size()) + " has " +
                               std::to_string(table.back().size()) + " cells, expected " +
                               std::to_string(n));
    }
    if (table.size() != n)
        throw config_error("kernel table has " + std::to_string(table.size()) +
                           " rows, expected " + std::to_string(n));

    return assemble_kernel_table(grid, std::move(table), "custom_table");
}

}  // namespace nonlocal
