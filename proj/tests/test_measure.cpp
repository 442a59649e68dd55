#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gen.hpp"
#include "mtp/measure.hpp"

using namespace mtp;

TEST_CASE("neighborhood_measure: exact 1-D point") {
    Rng rng(1);
    auto e = neighborhood_measure(make_points({{0.0}}), Vec{0.0}, 0.5, 0.1, 1000, rng);
    CHECK(e.method == MeasureMethod::exact_1d);
    CHECK(e.std_error == 0.0);
    CHECK(e.value == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("neighborhood_measure: line strip in the sup norm") {
    Rng rng(2);
    auto e = neighborhood_measure(make_plane({0.0, 0.0}, {{1.0, 0.0}}), Vec{0.0, 0.0}, 0.5, 0.1, 1000000, rng);
    CHECK(e.method == MeasureMethod::monte_carlo);
    CHECK(std::abs(e.value - 0.2) <= 3.0 * e.std_error);
}

TEST_CASE("neighborhood_measure: circle against a grid quadrature oracle") {
    const double r = 0.2, delta = 0.02, h = 1e-4;
    const Vec c{1.0, 0.0};
    // Midpoint rule on the Euclidean disc: points with |x - c| < r and ||x| - 1| < delta.
    std::size_t hits = 0;
    const int steps = static_cast<int>(2 * r / h);
    for (int a = 0; a < steps; ++a)
        for (int b = 0; b < steps; ++b) {
            const double x = c[0] - r + (a + 0.5) * h, y = c[1] - r + (b + 0.5) * h;
            if ((x - c[0]) * (x - c[0]) + y * y >= r * r) continue;
            if (std::abs(std::hypot(x, y) - 1.0) < delta) ++hits;
        }
    const double oracle = static_cast<double>(hits) * h * h;
    Rng rng(3);
    auto e = neighborhood_measure(make_sphere({0.0, 0.0}, 1.0, Metric::euclidean), c, r, delta, 1000000, rng);
    CHECK(std::abs(e.value - oracle) <= 3.0 * e.std_error + 1e-5);
}

TEST_CASE("neighborhood_measure argument checks") {
    Rng rng(4);
    CHECK_THROWS_AS(neighborhood_measure(make_points({{0.0}}), Vec{0.0}, 0.1, 0.1, 1000, rng), ArgumentError);
    CHECK_THROWS_AS(neighborhood_measure(make_points({{0.0, 0.0}}), Vec{0.0, 0.0}, 0.5, 0.1, 10, rng), ArgumentError);
}

TEST_CASE("property: exact 1-D path agrees with an independent Monte-Carlo oracle") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        SetModel m;
        if (t % 2 == 0) {
            std::vector<Vec> pts;
            const std::size_t n = 1 + rng.index(6);
            for (std::size_t k = 0; k < n; ++k) pts.push_back({rng.uniform()});
            m = make_points(pts);
        } else {
            m = make_ifs(IFS::middle_third_cantor());
        }
        const Vec c{rng.uniform()};
        const double r = rng.uniform(0.05, 0.5), delta = r * rng.uniform(0.01, 0.9);
        Rng er(t);
        const double exact = neighborhood_measure(m, c, r, delta, 1000, er).value;
        const std::size_t n = 20000;
        std::size_t hits = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const Vec x{c[0] + rng.uniform(-r, r)};
            if (within_distance(m, x, delta)) ++hits;
        }
        const double p = static_cast<double>(hits) / n;
        const double mc = p * 2 * r, se = 2 * r * std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(exact - mc) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("property: neighbourhood measure is monotone in delta and r") {
    Rng rng(6);
    const auto line = make_plane({0.5, 0.5}, {{1.0, 0.0}});
    const Vec c{0.5, 0.5};
    double prev = 0.0, prev_se = 0.0;
    for (double d : {0.01, 0.02, 0.04, 0.08}) {
        auto e = neighborhood_measure(line, c, 0.2, d, 100000, rng);
        CHECK(e.value + 3 * e.std_error >= prev - 3 * prev_se);
        prev = e.value;
        prev_se = e.std_error;
    }
    prev = prev_se = 0.0;
    for (double r : {0.1, 0.15, 0.2, 0.3}) {
        auto e = neighborhood_measure(line, c, r, 0.05, 100000, rng);
        CHECK(e.value + 3 * e.std_error >= prev - 3 * prev_se);
        prev = e.value;
        prev_se = e.std_error;
    }
}

TEST_CASE("fit_lsp_table recovers synthetic power laws") {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + static_cast<int>(rng.index(3));
        const double a = rng.uniform(0.1, 3.0), b = rng.uniform(0.0, 2.0), k = rng.uniform(0.5, 5.0);
        std::vector<LspCell> cells;
        for (double r : logspace(1e-3, 0.3, 6))
            for (double q : logspace(1e-3, 0.3, 6)) cells.push_back({r, q * r, k * std::pow(q * r, a) * std::pow(r, b), 0.0});
        auto f = fit_lsp_table(n, cells);
        CHECK(f.delta_coef == doctest::Approx(a).epsilon(1e-6));
        CHECK(f.r_coef == doctest::Approx(b).epsilon(1e-6));
        CHECK(f.kappa_hat == doctest::Approx(b / n).epsilon(1e-6));
    }
    std::vector<LspCell> flat;
    for (double q : {0.1, 0.2, 0.3}) flat.push_back({0.5, q * 0.5, q, 0.0});
    CHECK_THROWS_AS(fit_lsp_table(1, flat), ArgumentError);
}

TEST_CASE("fit_lsp: point and line") {
    Rng rng(8);
    const auto rg = logspace(0.01, 0.3, 6), qg = logspace(1e-3, 0.3, 6);
    auto p = fit_lsp(make_points({{0.5}}), rg, qg, 100000, rng);
    CHECK(std::abs(p.kappa_hat) <= 0.05);
    MESSAGE("point c4/c3 = " << p.c4_hat / p.c3_hat);
    CHECK(p.c4_hat / p.c3_hat < 10.0);
    auto line = make_plane({0.5, 0.5}, {{1.0, 0.0}});
    line.window = Box{{0.0, 0.0}, {1.0, 1.0}};
    auto l = fit_lsp(line, rg, qg, 20000, rng);
    CHECK(std::abs(l.kappa_hat - 0.5) <= 0.05);
    MESSAGE("line c4/c3 = " << l.c4_hat / l.c3_hat);
    CHECK(l.c4_hat / l.c3_hat < 10.0);
}

TEST_CASE("fit_lsp: Cantor set") {
    Rng rng(9);
    auto c = fit_lsp(make_ifs(IFS::middle_third_cantor()), logspace(1e-3, 0.3, 6), logspace(1e-3, 0.3, 6), 100000, rng, 32);
    CHECK(std::abs(c.kappa_hat - std::log(2.0) / std::log(3.0)) <= 0.05);
    MESSAGE("cantor c4/c3 = " << c.c4_hat / c.c3_hat);
    CHECK(c.c4_hat / c.c3_hat < 10.0);
}

std::vector<double> pow2_scales(int from, int to) {
    std::vector<double> s;
    for (int k = from; k <= to; ++k) s.push_back(std::ldexp(1.0, -k));
    return s;
}

TEST_CASE("box_dimensions: segment and point") {
    Rng rng(10);
    auto seg = box_dimensions(make_polyline({{0.0, 0.0}, {1.0, 0.0}}), pow2_scales(5, 12), 100000, rng);
    CHECK(std::abs(seg.central.exponent - 1.0) <= 0.05);
    CHECK(seg.lower.exponent <= seg.upper.exponent);
    auto pt = box_dimensions(make_points({{0.3, 0.3}}), pow2_scales(5, 12), 100000, rng);
    CHECK(std::abs(pt.central.exponent) <= 0.05);
}

TEST_CASE("box_dimensions argument checks") {
    Rng rng(11);
    const auto seg = make_polyline({{0.0, 0.0}, {1.0, 0.0}});
    CHECK_THROWS_AS(box_dimensions(seg, {0.1, 0.05, 0.02}, 1000, rng), ArgumentError);
    CHECK_THROWS_AS(box_dimensions(seg, pow2_scales(4, 8), 1000, rng), ArgumentError);  // under 2 decades
}

TEST_CASE("box_dimensions_from_table on exact power data") {
    std::vector<ScaleRow> rows;
    for (double d : logspace(1e-4, 1e-1, 8)) rows.push_back({d, {3.0 * std::pow(d, 2.0 - 1.3), 0.0, 0, MeasureMethod::exact_1d}});
    auto r = box_dimensions_from_table(2, rows);
    CHECK(r.central.exponent == doctest::Approx(1.3).epsilon(1e-9));
}

TEST_CASE("minkowski_content examples") {
    Rng rng(12);
    auto seg = minkowski_content(make_polyline({{0.0, 0.0}, {1.0, 0.0}}), 1.0, pow2_scales(5, 12), 100000, rng);
    CHECK(seg.lower == doctest::Approx(2.0).epsilon(0.1));
    CHECK(seg.upper == doctest::Approx(2.0).epsilon(0.1));
    auto pt = minkowski_content(make_points({{0.0}}), 0.0, logspace(1e-4, 1e-1, 6), 1000, rng);
    CHECK(pt.lower == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(pt.upper == doctest::Approx(2.0).epsilon(1e-9));
    auto k = minkowski_content(make_ifs(IFS::middle_third_cantor()), std::log(2.0) / std::log(3.0), logspace(1e-6, 1e-2, 9), 1000, rng);
    CHECK(k.lower > 0.0);
    CHECK(std::isfinite(k.upper));
    CHECK(k.upper / k.lower < 10.0);
}
