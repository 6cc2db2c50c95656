#include <cmath>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "ucplan/random_termination.hpp"

using namespace ucplan;

namespace {

struct Setup {
    GridSpec g = GridSpec::unit_square(61);
    DomainMask mask{g};
    ScalarField speed = build_field(g, [](Point p) { return 1.0 + 0.3 * std::cos(6 * p.x) * std::sin(6 * p.y); });
    // Two wells of different depth.
    ScalarField q = build_field(g, [](Point p) {
        return std::min(distance(p, {0.2, 0.3}) + 0.15, distance(p, {0.8, 0.7}));
    });
};

} // namespace

TEST_CASE("one-sided random termination update") {
    // lambda (v - q) + f (v - a) / h = K solved in closed form.
    const double q = 1.0, a = 0.5, f = 1.0, K = 0.0, lambda = 2.0, h = 0.1;
    const double v = rt_local_update({a, kInf, kInf, kInf}, q, f, K, lambda, h);
    CHECK(v == doctest::Approx((lambda * q + f * a / h + K) / (lambda + f / h)));
}

TEST_CASE("random termination matches the capped sweeping fixed point") {
    Setup s;
    for (double K : {0.0, 1.0}) {
        const ScalarField cost(s.g, K);
        for (double lambda : {1.0, 10.0}) {
            const auto sol = solve_random_termination(s.q, s.speed, lambda, s.mask, cost);
            const ScalarField ref = oracle::sweep_random_termination(s.q, s.speed, cost, lambda, s.mask);
            double gap = 0.0;
            for (std::size_t k = 0; k < s.g.size(); ++k) gap = std::max(gap, std::abs(sol.u[k] - ref[k]));
            CHECK(gap <= 1e-9);
            CHECK(sol.max_residual <= 1e-9);
        }
    }
}

TEST_CASE("value stays below q and motionless nodes are local minima") {
    Setup s;
    const ScalarField zero(s.g, 0.0);
    const auto sol = solve_random_termination(s.q, s.speed, 5.0, s.mask, zero);
    std::size_t motionless = 0;
    for (std::size_t k = 0; k < s.g.size(); ++k) {
        CHECK(sol.u[k] <= s.q[k] + 1e-12);
        if (!sol.motionless.inside(k)) continue;
        ++motionless;
        const NodeIndex n = s.g.index_of(k);
        for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}})
            if (s.g.in_range(n.i + di, n.j + dj)) CHECK(s.q.at(n.i + di, n.j + dj) >= s.q[k] - 1e-12);
    }
    CHECK(motionless >= 1);
}

TEST_CASE("small rate travels to the global minimum, large rate stays near") {
    Setup s;
    const ScalarField zero(s.g, 0.0);
    const Point x0{0.3, 0.35};
    const auto slow = solve_random_termination(s.q, s.speed, 0.5, s.mask, zero);
    const auto fast = solve_random_termination(s.q, s.speed, 50.0, s.mask, zero);
    const auto a = trace_exponential(slow, s.q, s.speed, zero, x0);
    const auto b = trace_exponential(fast, s.q, s.speed, zero, x0);
    CHECK(distance(a.terminal.position, {0.8, 0.7}) < 0.05);
    CHECK(distance(b.terminal.position, {0.2, 0.3}) < 0.05);
}

TEST_CASE("constrained solve restricts to the worst-case level set") {
    Setup s;
    const ScalarField zero(s.g, 0.0);
    const ScalarField qbar = build_field(s.g, [](Point p) { return p.x; });
    const auto sol = solve_random_termination_constrained(s.q, qbar, s.speed, 0.5, 0.5, s.mask, zero, {0.3, 0.35});
    for (std::size_t k = 0; k < s.g.size(); ++k)
        if (qbar[k] > 0.5) CHECK(std::isinf(sol.u[k]));
    const auto plan = trace_exponential(sol, qbar, s.speed, zero, {0.3, 0.35});
    CHECK(plan.worst_along_path <= 0.5 + 1e-12);
    CHECK_THROWS_AS(
        solve_random_termination_constrained(s.q, qbar, s.speed, 0.5, 0.2, s.mask, zero, {0.3, 0.35}), Infeasible);
}

TEST_CASE("exponential Pareto front is monotone") {
    Setup s;
    const ScalarField zero(s.g, 0.0);
    const ScalarField qbar = build_field(s.g, [](Point p) { return p.x + 0.2 * p.y; });
    const auto front =
        exponential_pareto(s.q, qbar, s.speed, 0.5, {0.3, 0.45, 0.6, 0.8, 1.5}, s.mask, zero, {0.3, 0.35});
    REQUIRE_FALSE(front.entries.empty());
    for (std::size_t n = 1; n < front.entries.size(); ++n) {
        CHECK(front.entries[n].worst > front.entries[n - 1].worst);
        CHECK(front.entries[n].avg < front.entries[n - 1].avg);
    }
}

TEST_CASE("rate and inputs are validated") {
    Setup s;
    const ScalarField zero(s.g, 0.0);
    CHECK_THROWS_AS(solve_random_termination(s.q, s.speed, 0.0, s.mask, zero), InvalidInput);
    CHECK_THROWS_AS(solve_random_termination(s.q, s.speed, 1.0, s.mask, ScalarField(s.g, -1.0)), InvalidInput);
}
