#include <chrono>
#include <cmath>
#include <map>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "ucplan/eikonal.hpp"

using namespace ucplan;

namespace {

double max_error(int n, Point src) {
    const GridSpec g = GridSpec::unit_square(n);
    const ScalarField one(g, 1.0);
    const ValueSolution s = solve_stationary(one, one, {src}, DomainMask(g));
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(s.u[k] - distance(g.node(k), src)));
    return err;
}

} // namespace

TEST_CASE("local update cases") {
    const double h = 0.1;
    CHECK(local_update({0.0, kInf, kInf, kInf}, 1.0, 1.0, h) == doctest::Approx(0.1));
    CHECK(local_update({0.0, kInf, 0.0, kInf}, 1.0, 1.0, h) == doctest::Approx(h / std::sqrt(2.0)));
    // Far apart neighbors: the one-sided update wins.
    CHECK(local_update({0.0, kInf, 1.0, kInf}, 1.0, 1.0, h) == doctest::Approx(0.1));
    CHECK(std::isinf(local_update({kInf, kInf, kInf, kInf}, 1.0, 1.0, h)));
    CHECK(local_update({0.0, kInf, kInf, kInf}, 2.0, 1.0, h) == doctest::Approx(0.05));
}

TEST_CASE("distance field accuracy and first-order convergence") {
    const auto t0 = std::chrono::steady_clock::now();
    const double e200 = max_error(201, {0.5, 0.5});
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 1.0);
    const double e100 = max_error(101, {0.5, 0.5});
    CHECK(e200 <= 0.01);
    CHECK(e100 / e200 >= 1.8);
    CHECK(e100 / e200 <= 2.2);
}

TEST_CASE("fast marching matches the sweeping fixed point") {
    const GridSpec g = GridSpec::unit_square(61);
    DomainMask mask(g);
    mask.carve_rectangle({0.3, 0.2}, {0.5, 0.9});
    const ScalarField speed = build_field(g, [](Point p) { return 1.2 + 0.5 * std::cos(5 * p.x) * std::sin(3 * p.y); });
    const ScalarField cost = build_field(g, [](Point p) { return 1.0 + p.x * p.y; });
    const ValueSolution s = solve_stationary(speed, cost, {{0.8, 0.5}}, mask);
    std::map<std::size_t, double> fixed;
    for (std::size_t k : s.sources) fixed[k] = 0.0;
    for (const auto& [k, v] : source_ball(speed, cost, s.sources, mask, kDefaultSourceRadius)) fixed[k] = v;
    const ScalarField ref = oracle::sweep_eikonal(speed, cost, mask, fixed);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!mask.inside(k)) {
            CHECK(std::isinf(s.u[k]));
            continue;
        }
        CHECK(std::abs(s.u[k] - ref[k]) <= 1e-9);
    }
    CHECK(s.max_residual < 1e-9);
}

TEST_CASE("faster speed never increases the value") {
    const GridSpec g = GridSpec::unit_square(41);
    const DomainMask mask(g);
    const ScalarField one(g, 1.0);
    const ScalarField slow = build_field(g, [](Point p) { return 1.0 + 0.3 * p.x; });
    const ScalarField fast = build_field(g, [](Point p) { return 1.5 + 0.3 * p.x; });
    const auto a = solve_stationary(slow, one, {{0.2, 0.2}}, mask);
    const auto b = solve_stationary(fast, one, {{0.2, 0.2}}, mask);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(b.u[k] <= a.u[k] + 1e-12);
}

TEST_CASE("acceptance order is nondecreasing") {
    const GridSpec g = GridSpec::unit_square(31);
    const ScalarField one(g, 1.0);
    MarchOptions opt;
    double last = -1.0;
    bool monotone = true;
    opt.on_accept = [&](std::size_t, double v) {
        monotone = monotone && v >= last;
        last = v;
    };
    solve_stationary(one, one, {{0.3, 0.6}}, DomainMask(g), opt);
    CHECK(monotone);
}

TEST_CASE("invalid inputs are rejected") {
    const GridSpec g = GridSpec::unit_square(11);
    const ScalarField one(g, 1.0);
    ScalarField bad = one;
    bad.at(3, 3) = 0.0;
    CHECK_THROWS_AS(solve_stationary(bad, one, {{0.5, 0.5}}, DomainMask(g)), InvalidInput);
    CHECK_THROWS_AS(solve_stationary(one, bad, {{0.5, 0.5}}, DomainMask(g)), InvalidInput);
    DomainMask mask(g);
    mask.carve_rectangle({0.3, 0.3}, {0.7, 0.7});
    CHECK_THROWS_AS(solve_stationary(one, one, {{0.5, 0.5}}, mask), InvalidInput);
}

TEST_CASE("obstacles make the far side unreachable when enclosed") {
    const GridSpec g = GridSpec::unit_square(21);
    DomainMask mask(g);
    mask.carve_rectangle({-0.1, 0.45}, {1.1, 0.55});
    const ScalarField one(g, 1.0);
    const auto s = solve_stationary(one, one, {{0.5, 0.2}}, mask);
    CHECK(std::isinf(s.u.at(10, 18)));
    CHECK_THROWS_AS(reachable_set(s, 0.0), InvalidInput);
}

TEST_CASE("parallel solves agree with sequential ones") {
    const GridSpec g = GridSpec::unit_square(41);
    const ScalarField one(g, 1.0);
    const std::vector<Point> src{{0.1, 0.1}, {0.9, 0.4}, {0.5, 0.8}};
    const auto par = solve_each(one, one, src, DomainMask(g), 3);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto seq = solve_stationary(one, one, {src[i]}, DomainMask(g));
        for (std::size_t k = 0; k < g.size(); ++k) CHECK(par[i].u[k] == seq.u[k]);
    }
}

TEST_CASE("traced trajectory cost matches the value") {
    const GridSpec g = GridSpec::unit_square(101);
    DomainMask mask(g);
    mask.carve_rectangle({0.45, 0.15}, {0.55, 0.85});
    const ScalarField speed = build_field(g, [](Point p) { return 1.0 + 0.2 * p.y; });
    const ScalarField one(g, 1.0);
    const auto s = solve_stationary(speed, one, {{0.8, 0.5}}, mask);
    const Point start{0.2, 0.5};
    const Trajectory t = trace_trajectory(s, speed, one, start);
    REQUIRE(t.points.size() > 2);
    CHECK(distance(t.points.back(), {0.8, 0.5}) < 0.03);
    CHECK(t.total_cost() == doctest::Approx(bilinear_sample(s.u, start)).epsilon(0.03));
    for (const Point& p : t.points) CHECK_FALSE((p.x > 0.455 && p.x < 0.545 && p.y > 0.155 && p.y < 0.845));
}
