#include <cmath>

#include "doctest.h"
#include "ucplan/time_marching.hpp"

using namespace ucplan;

namespace {

struct Box {
    GridSpec g = GridSpec::unit_square(51);
    DomainMask mask{g};
    ScalarField one{g, 1.0};
};

} // namespace

TEST_CASE("constant terminal value grows by the elapsed time") {
    Box b;
    const auto v = march_backward(ScalarField(b.g, 2.0), b.one, b.one, 0.3, 0.0, b.mask);
    REQUIRE(v.times.size() == v.slices.size());
    CHECK(v.times.front() == doctest::Approx(0.3));
    CHECK(v.times.back() == doctest::Approx(0.0));
    for (std::size_t n = 1; n < v.times.size(); ++n) CHECK(v.times[n] < v.times[n - 1]);
    for (std::size_t k = 0; k < b.g.size(); ++k) CHECK(v.initial()[k] == doctest::Approx(2.3));
}

TEST_CASE("time step respects the CFL factor") {
    Box b;
    const ScalarField fast(b.g, 3.0);
    const auto v = march_backward(ScalarField(b.g, 0.0), fast, b.one, 0.2, 0.0, b.mask);
    const double dt = v.times[0] - v.times[1];
    CHECK(dt <= kCflFactor * b.g.h() / 3.0 + 1e-15);
    const double steps = 0.2 / dt;
    CHECK(steps == doctest::Approx(std::round(steps)));
}

TEST_CASE("a linear terminal value is transported exactly away from the boundary") {
    Box b;
    const ScalarField g = build_field(b.g, [](Point p) { return p.x; });
    // The explicit stencil reaches tau / kCflFactor to the left.
    const double tau = 0.25;
    const auto v = march_backward(g, b.one, b.one, tau, 0.0, b.mask);
    for (int j = 0; j < b.g.ny(); ++j)
        for (int i = 0; i < b.g.nx(); ++i)
            if (b.g.node(i, j).x > tau / kCflFactor + b.g.h()) CHECK(v.initial().at(i, j) == doctest::Approx(b.g.node(i, j).x));
}

TEST_CASE("outside nodes stay infinite and the terminal slice is masked") {
    Box b;
    DomainMask mask = b.mask;
    mask.carve_rectangle({0.4, 0.4}, {0.6, 0.6});
    const auto v = march_backward(ScalarField(b.g, 1.0), b.one, b.one, 0.1, 0.0, mask);
    CHECK(std::isinf(v.terminal().at(25, 25)));
    CHECK(std::isinf(v.initial().at(25, 25)));
    CHECK(std::isfinite(v.initial().at(0, 0)));
    CHECK_THROWS_AS(march_backward(ScalarField(b.g, 1.0), b.one, b.one, 0.0, 0.1, mask), InvalidInput);
}

TEST_CASE("fixed-T plan picks the best reachable node") {
    Box b;
    const ScalarField q = build_field(b.g, [](Point p) { return distance(p, {0.9, 0.9}); });
    const auto start = solve_stationary(b.one, b.one, {{0.1, 0.1}}, b.mask);
    const FixedTPlan plan = plan_fixed_T(q, start.u, 0.4);
    CHECK(start.u[plan.waypoint.node] <= 0.4);
    CHECK(plan.expected_total == doctest::Approx(0.4 + q[plan.waypoint.node]));
    const DomainMask R = reachable_set(start, 0.4);
    for (std::size_t k = 0; k < b.g.size(); ++k)
        if (R.inside(k)) CHECK(q[k] >= plan.q_at_waypoint);
    // Straight line: total close to the full distance.
    CHECK(plan.expected_total == doctest::Approx(std::sqrt(2.0) * 0.8).epsilon(0.02));
    CHECK_THROWS_AS(plan_fixed_T(q, start.u, -1.0), InvalidInput);
}

TEST_CASE("discrete stage weights are conditional probabilities") {
    Box b;
    const auto stages = discrete_time_stages(b.one, DiscreteTimes{{0.1, 0.2, 0.4}, {0.2, 0.3, 0.5}});
    REQUIRE(stages.size() == 3);
    CHECK(stages[0].weight == doctest::Approx(0.2));
    CHECK(stages[1].weight == doctest::Approx(0.375));
    CHECK(stages[2].weight == doctest::Approx(1.0));
    CHECK_THROWS_AS(validate_time_model(DiscreteTimes{{0.2, 0.1}, {0.5, 0.5}}), InvalidInput);
    CHECK_THROWS_AS(validate_time_model(DiscreteTimes{{0.1, 0.2}, {0.5, 0.4}}), InvalidInput);
    CHECK_THROWS_AS(validate_time_model(FixedTime{0.0}), InvalidInput);
    CHECK_THROWS_AS(validate_time_model(ExponentialTime{-1.0}), InvalidInput);
}

TEST_CASE("single-stage chain reproduces the fixed-T value") {
    Box b;
    const ScalarField q = build_field(b.g, [](Point p) { return distance(p, {0.8, 0.7}); });
    const Point x0{0.2, 0.2};
    const auto start = solve_stationary(b.one, b.one, {x0}, b.mask);
    const FixedTPlan fixed = plan_fixed_T(q, start.u, 0.3, b.one, b.one, b.mask, x0);
    const ChainPlan chain = plan_discrete_T(q, DiscreteTimes{{0.3}, {1.0}}, b.one, b.one, b.mask, x0);
    REQUIRE(fixed.marched_total.has_value());
    CHECK(std::abs(chain.value_at_start - *fixed.marched_total) <= 1e-9);
    REQUIRE(chain.waypoints.size() == 1);
    CHECK(chain.waypoints[0] == fixed.waypoint.position);
}

TEST_CASE("two-stage chain waypoints stay reachable") {
    Box b;
    const ScalarField q = build_field(b.g, [](Point p) { return distance(p, {0.8, 0.7}); });
    const Point x0{0.2, 0.2};
    const ChainPlan chain = plan_discrete_T(q, DiscreteTimes{{0.15, 0.3}, {0.5, 0.5}}, b.one, b.one, b.mask, x0);
    REQUIRE(chain.waypoints.size() == 2);
    CHECK(distance(x0, chain.waypoints[0]) <= 0.15 + 2 * b.g.h());
    CHECK(distance(chain.waypoints[0], chain.waypoints[1]) <= 0.15 + 2 * b.g.h());
    // Moving toward the reward lowers it at each report.
    CHECK(bilinear_sample(q, chain.waypoints[1]) < bilinear_sample(q, chain.waypoints[0]));
    CHECK(bilinear_sample(q, chain.waypoints[0]) < bilinear_sample(q, x0));
}
