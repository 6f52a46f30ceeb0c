#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nonlocal/ensemble.hpp"
#include "nonlocal/grid.hpp"
#include "nonlocal/io.hpp"
#include "nonlocal/kernel.hpp"
#include "oracles.hpp"

using namespace nonlocal;

TEST_CASE("build_grid: two-point trapezoid is forced") {
    auto g = build_grid(0.0, 1.0, 2, QuadratureRule::trapezoid);
    CHECK(g->nodes[0] == 0.0);
    CHECK(g->nodes[1] == 1.0);
    CHECK(g->weights[0] == 0.5);
    CHECK(g->weights[1] == 0.5);
}

TEST_CASE("build_grid: midpoint cells are uniform") {
    auto g = build_grid(0.0, 1.0, 4, QuadratureRule::midpoint);
    double sum = 0.0;
    for (double w : g->weights) {
        CHECK(w == doctest::Approx(0.25).epsilon(1e-14));
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("build_grid: weights sum to the measure") {
    auto g = build_grid(-1.0, 1.0, 101, QuadratureRule::trapezoid);
    CHECK(g->measure == 2.0);
    double sum = 0.0;
    for (double w : g->weights) sum += w;
    CHECK(std::abs(sum - 2.0) / 2.0 < 1e-12);  // relative
    for (std::size_t i = 1; i < g->n; ++i) CHECK(g->nodes[i] > g->nodes[i - 1]);
}

TEST_CASE("build_grid: bad input rejected") {
    CHECK_THROWS_AS(build_grid(0.0, 1.0, 1, QuadratureRule::trapezoid), config_error);
    CHECK_THROWS_AS(build_grid(1.0, 0.0, 8, QuadratureRule::trapezoid), config_error);
    CHECK_THROWS_AS(build_grid(0.0, std::nan(""), 8, QuadratureRule::trapezoid), config_error);
    CHECK_THROWS_AS(build_grid(0.0, 1.0, 8, "simpson"), config_error);
}

TEST_CASE("assemble_kernel: uniform kernel has unit row mass") {
    auto g = build_grid(0.0, 1.0, 16, QuadratureRule::midpoint);
    auto k = make_uniform_kernel(g);
    for (double m : k.row_mass) CHECK(m == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(k.symmetric_flag);
}

TEST_CASE("assemble_kernel: gaussian loses mass near the boundary") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    const double sigma = 0.2;
    auto k = make_gaussian_kernel(g, sigma);

    const std::size_t mid = g->n / 2;
    CHECK(k.row_mass[mid] < 1.0);
    CHECK(k.row_mass[0] < k.row_mass[mid]);

    // Fine-quadrature oracle at 10x resolution reproduces the row masses.
    auto J = gaussian_kernel_fn(sigma);
    for (std::size_t i : {std::size_t(0), mid, g->n - 1}) {
        const double fine =
            oracles::trapezoid([&](double y) { return J(g->nodes[i], y); }, 0.0, 1.0, 1000);
        CHECK(k.row_mass[i] == doctest::Approx(fine).epsilon(1e-4));
    }
}

TEST_CASE("assemble_kernel: asymmetric or negative kernels are rejected") {
    auto g = build_grid(0.0, 1.0, 9, QuadratureRule::trapezoid);
    CHECK_THROWS_AS(assemble_kernel(g, [](double x, double y) { return x - y; }), kernel_error);
    CHECK_THROWS_AS(assemble_kernel(g, [](double, double) { return -1.0; }), kernel_error);
    // Row mass above 1 is rejected: a constant kernel of height 2 on (0,1).
    CHECK_THROWS_AS(assemble_kernel(g, [](double, double) { return 2.0; }), kernel_error);
}

TEST_CASE("apply_K: mean operator examples") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    auto k = make_uniform_kernel(g);

    auto ramp = make_field(g, [](double x) { return x; });
    for (double v : apply_K(k, ramp).values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    Field c(g, 4.75);
    for (double v : apply_K(k, c).values) CHECK(v == doctest::Approx(4.75).epsilon(1e-12));
}

TEST_CASE("apply_K: gaussian kernel against the 10x quadrature oracle") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    const double sigma = 0.2;
    auto k = make_gaussian_kernel(g, sigma);
    auto u = make_field(g, [](double y) { return std::sin(std::numbers::pi * y); });
    auto ku = apply_K(k, u);

    auto J = gaussian_kernel_fn(sigma);
    auto u_fn = [](double y) { return std::sin(std::numbers::pi * y); };
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g->n; i += 10) {
        const double fine = oracles::fine_apply_K(J, u_fn, g->nodes[i], 0.0, 1.0, 1000);
        worst = std::max(worst, std::abs(ku.values[i] - fine));
        scale = std::max(scale, std::abs(fine));
    }
    CHECK(worst / scale < 1e-3);
}

TEST_CASE("apply_K: grid mismatch raises a dimension error") {
    auto g1 = build_grid(0.0, 1.0, 11, QuadratureRule::trapezoid);
    auto g2 = build_grid(0.0, 1.0, 12, QuadratureRule::trapezoid);
    auto k = make_uniform_kernel(g1);
    CHECK_THROWS_AS(apply_K(k, Field(g2, 1.0)), dimension_error);
}

TEST_CASE("lp_norm: examples and errors") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    CHECK(lp_norm(Field(g, 1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(lp_norm(Field(g, 1.0), infinite_p) == 1.0);
    auto ramp = make_field(g, [](double x) { return x; });
    CHECK(lp_norm(ramp, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-4));
    // int_0^1 y dy = 1/2 and int_0^1 y^3 dy = 1/4.
    CHECK(lp_norm(ramp, 1.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(lp_norm(ramp, 3.0) == doctest::Approx(std::pow(0.25, 1.0 / 3.0)).epsilon(1e-4));
    CHECK_THROWS_AS(lp_norm(ramp, 0.5), config_error);
    CHECK_THROWS_AS(lp_norm(ramp, std::nan("")), config_error);
}

TEST_CASE("hausdorff_semidist: sup norm variant") {
    auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
    Field zero(g, 0.0), two(g, 2.0);
    CHECK(hausdorff_semidist(Ensemble(g, {two}), Ensemble(g, {zero}), infinite_p) == 2.0);
}

TEST_CASE("hausdorff_semidist: containment semantics") {
    auto g = build_grid(0.0, 1.0, 21, QuadratureRule::trapezoid);
    Field zero(g, 0.0);
    auto u = make_field(g, [](double x) { return std::sin(std::numbers::pi * x); });
    Field v(g, -2.0);

    CHECK(hausdorff_semidist(Ensemble(g, {u}), Ensemble(g, {u}), 2.0) == 0.0);
    CHECK(hausdorff_semidist(Ensemble(g, {zero}), Ensemble(g, {zero, v}), 2.0) == 0.0);

    const double expected = std::max(lp_norm(u, 2.0), lp_norm(v, 2.0));
    CHECK(hausdorff_semidist(Ensemble(g, {u, v}), Ensemble(g, {zero}), 2.0) ==
          doctest::Approx(expected).epsilon(1e-14));

    CHECK_THROWS_AS(hausdorff_semidist(Ensemble{}, Ensemble(g, {zero}), 2.0), domain_error);
}

TEST_CASE("property: Young bound |Ku|_p <= |u|_p for random fields") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    oracles::Rng rng(2024);
    auto gauss = make_gaussian_kernel(g, 0.15);
    auto tent = make_tent_kernel(g, 0.3);
    auto uni = make_uniform_kernel(g);
    for (int trial = 0; trial < 25; ++trial) {
        auto u = oracles::random_smooth_field(g, rng, 3.0);
        for (const auto* k : {&gauss, &tent, &uni}) {
            auto ku = apply_K(*k, u);
            for (double p : {1.0, 2.0, infinite_p}) {
                CHECK(lp_norm(ku, p) <= lp_norm(u, p) * k->max_row_mass() + 1e-12);
                CHECK(lp_norm(ku, p) <= lp_norm(u, p) + 1e-12);
            }
        }
    }
}

TEST_CASE("property: Hoelder bound |Ku(x)| <= |J|_q |u|_p") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    auto k = make_gaussian_kernel(g, 0.15);
    oracles::Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        auto u = oracles::random_smooth_field(g, rng, 2.0);
        for (double p : {1.0, 2.0, infinite_p}) {
            const double q = std::isinf(p) ? 1.0 : (p == 1.0 ? infinite_p : p / (p - 1.0));
            const double bound = kernel_q_norm(k, q) * lp_norm(u, p);
            CHECK(lp_norm(apply_K(k, u), infinite_p) <= bound + 1e-10);
        }
    }
}

TEST_CASE("property: apply_K homogeneity is exact for power-of-two scalings") {
    auto g = build_grid(0.0, 1.0, 64, QuadratureRule::trapezoid);
    auto k = make_gaussian_kernel(g, 0.2);
    oracles::Rng rng(11);
    auto u = oracles::random_smooth_field(g, rng, 1.5);
    for (double alpha : {2.0, 0.5, -1.0, 4.0}) {
        Field au = u;
        for (double& v : au.values) v *= alpha;
        auto lhs = apply_K(k, au);
        auto rhs_field = apply_K(k, u);
        for (std::size_t i = 0; i < u.size(); ++i)
            CHECK(lhs.values[i] == alpha * rhs_field.values[i]);  // bitwise
    }
}

TEST_CASE("property: apply_K additivity to rounding accuracy") {
    auto g = build_grid(0.0, 1.0, 101, QuadratureRule::trapezoid);
    auto k = make_gaussian_kernel(g, 0.2);
    oracles::Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        auto u = oracles::random_smooth_field(g, rng, 1.0);
        auto v = oracles::random_smooth_field(g, rng, 1.0);
        Field sum = u;
        for (std::size_t i = 0; i < v.size(); ++i) sum.values[i] += v.values[i];
        auto lhs = apply_K(k, sum);
        auto ku = apply_K(k, u);
        auto kv = apply_K(k, v);
        for (std::size_t i = 0; i < u.size(); ++i)
            CHECK(lhs.values[i] ==
                  doctest::Approx(ku.values[i] + kv.values[i]).epsilon(1e-13));
    }
}

TEST_CASE("property: trapezoid quadrature converges at second order") {
    // Error against a fine oracle should drop by ~4x when n doubles.
    auto J = gaussian_kernel_fn(0.25);
    auto u_fn = [](double y) { return std::sin(std::numbers::pi * y); };

    auto worst_error = [&](std::size_t n) {
        auto g = build_grid(0.0, 1.0, n, QuadratureRule::trapezoid);
        auto k = assemble_kernel(g, J);
        auto u = make_field(g, u_fn);
        auto ku = apply_K(k, u);
        double worst = 0.0;
        for (std::size_t i = 0; i < g->n; ++i) {
            const double fine = oracles::fine_apply_K(J, u_fn, g->nodes[i], 0.0, 1.0, 4000);
            worst = std::max(worst, std::abs(ku.values[i] - fine));
        }
        return worst;
    };

    const double e1 = worst_error(26);
    const double e2 = worst_error(51);  // shares the coarse nodes
    CHECK(e1 / e2 > 3.0);
}

TEST_CASE("kernel table round trip through CSV") {
    auto g = build_grid(0.0, 1.0, 7, QuadratureRule::trapezoid);
    auto k = make_tent_kernel(g, 0.5);

    std::string csv;
    for (std::size_t j = 0; j < g->n; ++j) {
        if (j) csv += ',';
        csv += format_double(g->nodes[j]);
    }
    csv += "\n";
    for (std::size_t i = 0; i < g->n; ++i) {
        for (std::size_t j = 0; j < g->n; ++j) {
            if (j) csv += ',';
            csv += format_double(k.raw[i][j]);
        }
        csv += "\n";
    }
    const auto path = std::filesystem::temp_directory_path() / "nonlocal_kernel_table.csv";
    CsvWriter::write_text(path, csv);

    auto loaded = load_kernel_csv(g, path.string());
    for (std::size_t i = 0; i < g->n; ++i)
        for (std::size_t j = 0; j < g->n; ++j) CHECK(loaded.matrix[i][j] == k.matrix[i][j]);
}
