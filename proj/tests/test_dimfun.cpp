#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gen.hpp"
#include "mtp/dimfun.hpp"

using namespace mtp;

TEST_CASE("eval_gauge power and tabulated") {
    CHECK(eval_gauge(Gauge::power(1), 0.25) == 0.25);
    CHECK(eval_gauge(Gauge::power(2), 0.5) == 0.25);
    const Gauge t = Gauge::tabulated({{0.1, 0.01}, {1.0, 1.0}});
    // Log-linear midpoint: log r halfway gives log value halfway.
    CHECK(eval_gauge(t, std::sqrt(0.1)) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(eval_gauge(Gauge::power(1), 0.0), DomainError);
    CHECK_THROWS_AS(eval_gauge(Gauge::power(1), -1.0), DomainError);
    CHECK_THROWS_AS(eval_gauge(t, 2.0), RangeError);
    CHECK_THROWS_AS(eval_gauge(t, 0.05), RangeError);
}

TEST_CASE("tabulated gauge rejects decreasing values") {
    CHECK_THROWS_AS(Gauge::tabulated({{0.1, 1.0}, {1.0, 0.5}}), ArgumentError);
    CHECK_THROWS_AS(Gauge::tabulated({{0.1, 1.0}}), ArgumentError);
}

TEST_CASE("verify_gauge_pair examples") {
    const auto grid = logspace(1e-4, 1.0, 16);
    GaugePair p;
    p.f = Gauge::power(0.5);
    p.g = Gauge::power(1);
    auto rep = verify_gauge_pair(p, grid);
    CHECK(rep.monotone_ok);
    CHECK(rep.doubling_lambda_estimate == 2.0);
    CHECK(rep.ratio_direction == RatioDirection::increasing_as_r_to_0);

    p.g = Gauge::power(2);
    CHECK(verify_gauge_pair(p, grid).doubling_lambda_estimate == 4.0);

    p.f = Gauge::power(2);
    p.g = Gauge::power(1);
    p.kappa = 0.9;
    rep = verify_gauge_pair(p, grid);
    CHECK(rep.f_over_g_kappa_ok);
    // f / g^kappa = r^{1.1}
    CHECK(h_gauge(p, 0.3) == doctest::Approx(std::pow(0.3, 1.1)).epsilon(1e-12));

    CHECK_THROWS_AS(verify_gauge_pair(p, std::vector<double>{}), ArgumentError);
}

TEST_CASE("verify_gauge_pair flags a non-gauge ratio") {
    GaugePair p;
    p.f = Gauge::power(0.5);
    p.g = Gauge::power(1);
    p.kappa = 0.8;  // f / g^0.8 = r^{-0.3} grows as r -> 0
    CHECK_FALSE(verify_gauge_pair(p, logspace(1e-4, 1.0, 16)).f_over_g_kappa_ok);
}

TEST_CASE("property: doubling estimate of r^s is 2^s") {
    Rng rng(101);
    for (int k = 0; k < 50; ++k) {
        GaugePair p;
        const double s = rng.uniform(0.1, 4.0);
        p.f = Gauge::power(s);
        p.g = Gauge::power(s);
        CHECK(verify_gauge_pair(p).doubling_lambda_estimate == doctest::Approx(std::pow(2.0, s)).epsilon(1e-12));
    }
}

TEST_CASE("invert_gauge examples") {
    CHECK(invert_gauge(Gauge::power(2), 0.25) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(invert_gauge(Gauge::power(1), 0.7) == doctest::Approx(0.7).epsilon(1e-12));
    const Gauge t = Gauge::tabulated({{0.01, 1e-4}, {1.0, 1.0}});
    CHECK(invert_gauge(t, 0.01) == doctest::Approx(0.1).epsilon(1e-8));
    CHECK_THROWS_AS(invert_gauge(t, 2.0), RangeError);
}

TEST_CASE("property: invert_gauge undoes eval_gauge") {
    Rng rng(102);
    const Gauge t = Gauge::tabulated({{1e-6, 1e-9}, {1e-3, 1e-4}, {0.1, 0.02}, {1.0, 1.0}});
    for (int k = 0; k < 200; ++k) {
        const double r = gen::log_uniform(rng, 1e-6, 1.0);
        CHECK(invert_gauge(t, eval_gauge(t, r)) == doctest::Approx(r).epsilon(1e-6));
        const Gauge p = Gauge::power(rng.uniform(0.2, 3.0));
        CHECK(invert_gauge(p, eval_gauge(p, r)) == doctest::Approx(r).epsilon(1e-6));
    }
}

TEST_CASE("mtp_radius examples") {
    GaugePair p;
    p.f = Gauge::power(1);
    p.g = Gauge::power(1);
    CHECK(mtp_radius(p, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    p.f = Gauge::power(0.5);
    CHECK(mtp_radius(p, 0.04) == doctest::Approx(0.2).epsilon(1e-12));
    p.f = Gauge::power(1.5);
    p.g = Gauge::power(2);
    p.kappa = 0.5;
    CHECK(mtp_radius(p, 0.01) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mtp_radius on tabulated gauges agrees with the power closed form") {
    // Tabulated copies of f = r^{1/2}, g = r on a grid dense enough for log-linear exactness.
    std::vector<std::pair<double, double>> fs, gs;
    for (double r : logspace(1e-6, 1.0, 13)) {
        fs.emplace_back(r, std::sqrt(r));
        gs.emplace_back(r, r);
    }
    GaugePair p;
    p.f = Gauge::tabulated(fs);
    p.g = Gauge::tabulated(gs);
    CHECK(mtp_radius(p, 0.04) == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("power_transform_exponent examples") {
    CHECK(power_transform_exponent(0.5, 0.0, 1) == 0.5);
    CHECK(power_transform_exponent(1.5, 0.5, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(power_transform_exponent(1.0, 0.5, 2), ArgumentError);
}

TEST_CASE("property: power-law transform matches the closed-form exponent") {
    Rng rng(103);
    for (int k = 0; k < 100; ++k) {
        const auto c = gen::power_case(rng);
        const double want = std::pow(c.upsilon, power_transform_exponent(c.s, c.kappa, c.n));
        CHECK(mtp_radius(c.pair(), c.upsilon) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("property: f = g with kappa = 0 is the identity") {
    Rng rng(104);
    for (int k = 0; k < 100; ++k) {
        GaugePair p;
        p.f = p.g = Gauge::power(rng.uniform(0.1, 3.0), rng.uniform(0.5, 2.0));
        const double u = gen::log_uniform(rng, 1e-8, 1.0);
        CHECK(mtp_radius(p, u) == u);
    }
    GaugePair t;
    t.f = t.g = Gauge::tabulated({{1e-4, 1e-3}, {1e-2, 0.05}, {1.0, 1.0}});
    CHECK(mtp_radius(t, 3e-3) == 3e-3);
}
