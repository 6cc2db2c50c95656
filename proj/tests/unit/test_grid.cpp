#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ucplan/grid.hpp"

using namespace ucplan;

TEST_CASE("unit square lattice geometry") {
    const GridSpec g = GridSpec::unit_square(5);
    CHECK(g.h() == doctest::Approx(0.25));
    CHECK(g.size() == 25);
    CHECK(g.linear(2, 3) == 17);
    CHECK(g.index_of(17) == NodeIndex{2, 3});
    CHECK(g.node(4, 4).x == doctest::Approx(1.0));
    CHECK(g.nearest({0.3, 0.9}) == NodeIndex{1, 4});
    CHECK(g.nearest({-5.0, 2.0}) == NodeIndex{0, 4});
    CHECK(g.contains({1.0, 0.0}));
    CHECK_FALSE(g.contains({1.01, 0.5}));
    CHECK_THROWS_AS(GridSpec(1, 5, {0, 0}, 0.1), InvalidInput);
    CHECK_THROWS_AS(GridSpec(5, 5, {0, 0}, 0.0), InvalidInput);
}

TEST_CASE("fields reject NaN and wrong sizes") {
    const GridSpec g = GridSpec::unit_square(3);
    CHECK_THROWS_AS(ScalarField(g, std::vector<double>(8, 0.0)), InvalidInput);
    CHECK_THROWS_AS(ScalarField(g, std::vector<double>(9, std::nan(""))), InvalidInput);
    CHECK_THROWS_AS(build_field(g, [](Point p) { return p.x > 0.7 ? std::nan("") : 1.0; }), InvalidInput);
}

TEST_CASE("rectangle carving keeps the boundary") {
    const GridSpec g = GridSpec::unit_square(11);
    DomainMask m(g);
    m.carve_rectangle({0.2, 0.2}, {0.6, 0.6});
    CHECK(m.inside(2, 2));
    CHECK(m.inside(6, 4));
    CHECK_FALSE(m.inside(3, 3));
    CHECK_FALSE(m.inside(5, 5));
    CHECK(m.count() == 121 - 9);
    CHECK_THROWS_AS(m.restrict_to([](std::size_t) { return false; }), Infeasible);
    const ScalarField f = apply_mask(ScalarField(g, 1.0), m);
    CHECK(std::isinf(f.at(4, 4)));
    CHECK(f.at(0, 0) == 1.0);
}

TEST_CASE("upwind gradient of linear fields is exact") {
    const GridSpec g = GridSpec::unit_square(11);
    const ScalarField u = build_field(g, [](Point p) { return 3.0 * p.x - 4.0 * p.y; });
    CHECK(upwind_gradient_magnitude(u, 5, 5) == doctest::Approx(5.0));
    const Point grad = upwind_gradient(u, 5, 5);
    CHECK(grad.x == doctest::Approx(3.0));
    CHECK(grad.y == doctest::Approx(-4.0));
    CHECK(bilinear_sample(u, {0.33, 0.71}) == doctest::Approx(3 * 0.33 - 4 * 0.71));
    CHECK_THROWS_AS(bilinear_sample(u, {1.5, 0.5}), InvalidInput);
    CHECK_THROWS_AS(upwind_gradient_magnitude(u, 11, 0), InvalidInput);
}

TEST_CASE("upwind slopes take the upwind side at a kink") {
    const GridSpec g = GridSpec::unit_square(11);
    // Ridge |x - 0.5|: both one-sided slopes point away from the node.
    const ScalarField ridge = build_field(g, [](Point p) { return std::abs(p.x - 0.5); });
    CHECK(upwind_slopes(ridge, 5, 5).x == doctest::Approx(0.0));
    // Valley 0.5 - |x - 0.5| has both neighbors below: slope 1.
    const ScalarField valley = build_field(g, [](Point p) { return 0.5 - std::abs(p.x - 0.5); });
    CHECK(upwind_slopes(valley, 5, 5).x == doctest::Approx(1.0));
}

TEST_CASE("field CSV round trip is exact") {
    const GridSpec g(4, 3, {0.1, -0.2}, 0.05);
    ScalarField f = build_field(g, [](Point p) { return std::sin(7 * p.x) / 3.0 + p.y; });
    f.at(1, 1) = kInf;
    std::stringstream s;
    write_field_csv(s, f, 0.25);
    std::optional<double> t;
    const ScalarField back = read_field_csv(s, &t);
    REQUIRE(t.has_value());
    CHECK(*t == 0.25);
    CHECK(back.spec() == g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back[k] == f[k]);
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(kInf) == "inf");
}
