#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gen.hpp"
#include "mtp/covering.hpp"

#include <algorithm>

using namespace mtp;

// O(n^2) oracle: selected balls pairwise disjoint, every input inside some 5-dilate.
bool five_r_oracle(const BallFamily& fam, const std::vector<std::size_t>& sel) {
    for (std::size_t a = 0; a < sel.size(); ++a)
        for (std::size_t b = a + 1; b < sel.size(); ++b) {
            const auto& x = fam.balls[sel[a]].ball;
            const auto& y = fam.balls[sel[b]].ball;
            if (fam.space.dist(x.center, y.center) < x.radius + y.radius) return false;
        }
    for (const auto& in : fam.balls) {
        bool inside = false;
        for (auto k : sel) {
            const auto& s = fam.balls[k].ball;
            if (fam.space.dist(in.ball.center, s.center) + in.ball.radius <= 5 * s.radius * (1 + 1e-12)) inside = true;
        }
        if (!inside) return false;
    }
    return true;
}

TEST_CASE("five_r examples") {
    BallFamily one;
    one.balls = {{{{0.0}, 1.0}, 0}};
    CHECK(five_r_select(one) == std::vector<std::size_t>{0});

    BallFamily three;
    three.balls = {{{{0.0}, 1.0}, 0}, {{{1.0}, 1.0}, 1}, {{{2.0}, 1.0}, 2}};
    CHECK(five_r_select(three) == std::vector<std::size_t>{0, 2});
    CHECK(five_r_cover(three).balls.size() == 2);

    Rng rng(3);
    auto fam = gen::ball_family(rng, 100, 2, 0.01, 0.05);
    CHECK(five_r_oracle(fam, five_r_select(fam)));
    CHECK_THROWS_AS(five_r_select(BallFamily{}), ArgumentError);
}

TEST_CASE("property: five_r on 200 random families") {
    Rng rng(301);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.index(3));
        const double lo = gen::log_uniform(rng, 1e-3, 0.1);
        auto fam = gen::ball_family(rng, 1 + rng.index(150), n, lo, lo * rng.uniform(1.0, 20.0),
                                    rng.index(2) ? Metric::sup : Metric::euclidean);
        fam.space.torus = rng.index(4) == 0;
        const auto sel = five_r_select(fam);
        CHECK(five_r_oracle(fam, sel));
        // Independent greedy: scan by non-increasing radius, keep if disjoint from all kept.
        std::vector<std::size_t> order(fam.balls.size()), kept;
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return fam.balls[a].ball.radius > fam.balls[b].ball.radius; });
        for (auto i : order) {
            bool free = true;
            for (auto k : kept) free = free && balls_disjoint(fam.balls[i].ball, fam.balls[k].ball, fam.space);
            if (free) kept.push_back(i);
        }
        std::sort(kept.begin(), kept.end());
        CHECK(sel == kept);
    }
}

TEST_CASE("separated_net examples") {
    Rng rng(302);
    const auto line = make_polyline({{-3.0}, {3.0}});
    const Ball region{{0.0}, 1.0};
    auto net = separated_net(line, region, 0.5, 10000, rng);
    CHECK(net.points.size() >= 3);
    CHECK(net.points.size() <= 5);
    CHECK(net.pool_maximal);
    for (std::size_t a = 0; a < net.points.size(); ++a)
        for (std::size_t b = a + 1; b < net.points.size(); ++b) CHECK(std::abs(net.points[a][0] - net.points[b][0]) > 0.5);
    // Maximal up to pool spacing: every point of F in the region is close to the net.
    for (double x = -0.999; x < 1.0; x += 0.001) {
        double best = 1e9;
        for (const auto& p : net.points) best = std::min(best, std::abs(p[0] - x));
        CHECK(best <= 0.5 + 0.01);
    }

    auto single = separated_net(make_points({{0.2, 0.3}}), Ball{{0.0, 0.0}, 1.0}, 0.1, 100, rng);
    REQUIRE(single.points.size() == 1);
    CHECK(single.points[0] == Vec{0.2, 0.3});

    auto wide = separated_net(line, region, 5.0, 1000, rng);
    CHECK(wide.points.size() == 1);

    auto none = separated_net(make_points({{5.0}}), region, 0.1, 100, rng);
    CHECK(none.points.empty());
}

TEST_CASE("build_caj: line, point, precondition") {
    Rng rng(303);
    const Ball A{{0.0, 0.0}, 1.0};
    const auto line = make_plane({0.0, 0.0}, {{1.0, 0.0}}, Metric::euclidean);
    auto c = build_caj(A, 1, line, 0.01, rng);
    const double packing = 1.0 / (6 * 0.01);
    CHECK(c.balls.size() >= packing / 2);
    CHECK(c.balls.size() <= packing * 2);
    const BallSpace sp{Metric::euclidean, false};
    for (const auto& b : c.balls) {
        CHECK(ball_contains(A, b.ball.dilate(3.0), sp));
        CHECK(b.ball.radius == 0.01);
        CHECK(distance_to_set(line, b.ball.center) <= 1e-12);
    }
    for (std::size_t a = 0; a < c.balls.size(); ++a)
        for (std::size_t b = a + 1; b < c.balls.size(); ++b)
            CHECK(balls_disjoint(c.balls[a].ball.dilate(3.0), c.balls[b].ball.dilate(3.0), sp));

    auto p = build_caj(A, 1, make_points({{0.0, 0.0}}), 0.1, rng);
    CHECK(p.balls.size() == 1);
    CHECK_THROWS_AS(build_caj(A, 1, line, 0.2, rng), ArgumentError);
}

TEST_CASE("build_caj on the Cantor set against a packing oracle") {
    // Oracle: greedy left-to-right packing of depth-10 cylinder endpoints in ½A,
    // which is a maximum 6Υ-separated packing in 1-D. A maximal net has at least half of it.
    const double ups = 1e-3, c0 = 1.0 / 3.0;
    std::vector<double> pts{0.0};
    double len = 1.0;
    for (int level = 0; level < 10; ++level) {
        len /= 3.0;
        std::vector<double> next;
        for (double a : pts) {
            next.push_back(a);
            next.push_back(a + 2 * len);
        }
        pts.swap(next);
    }
    std::vector<double> cand;
    for (double a : pts)
        for (double x : {a, a + len})
            if (std::abs(x - c0) < 0.5) cand.push_back(x);
    std::sort(cand.begin(), cand.end());
    std::size_t best = 0;
    double last = -1e9;
    for (double x : cand)
        if (x - last > 6 * ups) {
            ++best;
            last = x;
        }
    Rng rng(304);
    auto c = build_caj(Ball{{c0}, 1.0}, 1, make_ifs(IFS::middle_third_cantor()), ups, rng);
    CHECK(c.balls.size() <= best);
    CHECK(2 * c.balls.size() >= best);
    const double ref = std::pow(1.0 / ups, std::log(2.0) / std::log(3.0));
    MESSAGE("count " << c.balls.size() << " packing " << best << " reference " << ref);
    CHECK(c.balls.size() >= ref / 4);
    CHECK(c.balls.size() <= ref * 4);
}

TEST_CASE("build_kgb: van der Corput points") {
    Rng rng(305);
    SetSequence seq;
    const Ball B{{0.5}, 0.4};
    RadiusRule tilde{RadiusRule::Kind::power, 1.0, 1.0};
    auto k = build_kgb(B, 10, seq, tilde, 100000, 0.05, 1.0, rng);
    REQUIRE_FALSE(k.balls.empty());
    for (std::size_t a = 0; a < k.balls.size(); ++a) {
        const Ball A3 = k.balls[a].ball.dilate(3.0);
        CHECK(std::abs(A3.center[0] - B.center[0]) + A3.radius <= B.radius + 1e-15);
        for (std::size_t b = a + 1; b < k.balls.size(); ++b) {
            const Ball C3 = k.balls[b].ball.dilate(3.0);
            CHECK(std::abs(A3.center[0] - C3.center[0]) >= A3.radius + C3.radius);
        }
    }
    CHECK(k.achieved_fraction >= 0.05);
}

TEST_CASE("build_kgb: shortfall when F misses B") {
    Rng rng(306);
    SetSequence seq;
    seq.kind = SetSequence::Kind::constant;
    seq.model = make_points({{5.0}});
    try {
        build_kgb(Ball{{0.5}, 0.4}, 1, seq, RadiusRule{RadiusRule::Kind::power, 1.0, 1.0}, 1000, 0.05, 1.0, rng);
        FAIL("expected a coverage shortfall");
    } catch (const CoverageShortfall& e) {
        CHECK(e.achieved == 0.0);
    }
}

TEST_CASE("build_kgb: full line with geometric radii") {
    Rng rng(307);
    SetSequence seq;
    seq.kind = SetSequence::Kind::constant;
    seq.model = make_plane({0.0, 0.5}, {{1.0, 0.0}});
    seq.dim = 2;
    seq.box = Box{{0.0, 0.0}, {1.0, 1.0}};
    const Ball B{{0.5, 0.5}, 0.4};
    auto k = build_kgb(B, 1, seq, RadiusRule{RadiusRule::Kind::geometric, 1.0, 2.0}, 60, 0.05, 1.0, rng);
    CHECK(k.n0 <= 20);
    // Disjoint sup-norm squares: union area is the sum of the areas.
    double area = 0.0;
    for (const auto& b : k.balls) area += 4 * b.ball.radius * b.ball.radius;
    CHECK(area >= 0.05 * 4 * B.radius * B.radius);
}

TEST_CASE("radius rules and sequences") {
    RadiusRule p{RadiusRule::Kind::power, 2.0, 1.0};
    CHECK(p(5) == doctest::Approx(0.1));
    RadiusRule g{RadiusRule::Kind::geometric, 1.0, 2.0};
    CHECK(g(3) == doctest::Approx(0.125));
    CHECK(radical_inverse(1, 2) == 0.5);
    CHECK(radical_inverse(6, 2) == 0.375);
    CHECK(radical_inverse(5, 3) == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("property: BallIndex finds every intersecting ball") {
    Rng rng(308);
    for (int t = 0; t < 20; ++t) {
        const int n = 1 + static_cast<int>(rng.index(3));
        BallSpace sp{rng.index(2) ? Metric::sup : Metric::euclidean, rng.index(2) == 0};
        BallIndex idx(sp, n);
        std::vector<Ball> balls;
        for (int k = 0; k < 300; ++k) {
            Ball b{gen::point(rng, n), gen::log_uniform(rng, 1e-4, 0.05)};
            idx.insert(b.center, b.radius, balls.size());
            balls.push_back(b);
        }
        for (int q = 0; q < 100; ++q) {
            Ball d{gen::point(rng, n), gen::log_uniform(rng, 1e-4, 0.2)};
            bool brute = false;
            for (const auto& b : balls) brute = brute || !balls_disjoint(b, d, sp);
            CHECK(idx.any_intersect(d.center, d.radius) == brute);
        }
    }
}
