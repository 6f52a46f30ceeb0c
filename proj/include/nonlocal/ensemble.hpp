#pragma once

#include <string>
#include <vector>

#include "nonlocal/errors.hpp"
#include "nonlocal/grid.hpp"

namespace nonlocal {

/// Finite set of fields standing in for a bounded set of states.
struct Ensemble {
    GridPtr grid;
    std::vector<Field> members;
    std::string label;

    Ensemble() = default;
    Ensemble(GridPtr g, std::vector<Field> m, std::string l = "")
        : grid(std::move(g)), members(std::move(m)), label(std::move(l)) {
        for (const auto& f : members)
            if (f.grid != grid && !(f.grid && grid && f.grid->same_layout(*grid)))
                throw dimension_error("ensemble member on a different grid");
    }

    std::size_t size() const { return members.size(); }
    bool empty() const { return members.empty(); }
};

/// Hausdorff semi-distance dist(A, B) = max_{a in A} min_{b in B} ||a - b||_p.
/// Asymmetric: zero means A is contained in B up to the metric resolution.
inline double hausdorff_semidist(const Ensemble& A, const Ensemble& B, double p) {
    if (A.empty() || B.empty()) throw domain_error("hausdorff semi-distance of empty ensemble");
    double sup = 0.0;
    for (const auto& a : A.members) {
        double inf = std::numeric_limits<double>::infinity();
        for (const auto& b : B.members) inf = std::min(inf, lp_distance(a, b, p));
        sup = std::max(sup, inf);
    }
    return sup;
}

inline Ensemble constants_ensemble(const GridPtr& grid, const std::vector<double>& levels,
                                   const std::string& label = "constants") {
    std::vector<Field> members;
    members.reserve(levels.size());
    for (double c : levels) members.emplace_back(grid, c);
    return Ensemble(grid, std::move(members), label);
}

}  // namespace nonlocal
