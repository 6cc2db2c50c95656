#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ucplan/contour.hpp"
#include "ucplan/eikonal.hpp"

using namespace ucplan;

TEST_CASE("constant field has no contours") {
    const GridSpec g = GridSpec::unit_square(11);
    CHECK(extract_contours(ScalarField(g, 1.0), {0.5, 2.0}).empty());
    CHECK_THROWS_AS(extract_contours(ScalarField(g, 1.0), {kInf}), InvalidInput);
}

TEST_CASE("linear field gives one straight polyline") {
    const GridSpec g = GridSpec::unit_square(11);
    const ScalarField f = build_field(g, [](Point p) { return p.x + 0.5 * p.y; });
    const auto lines = extract_contours(f, {0.62});
    REQUIRE(lines.size() == 1);
    CHECK_FALSE(lines[0].closed);
    for (const Point& p : lines[0].points) CHECK(p.x + 0.5 * p.y == doctest::Approx(0.62));
}

TEST_CASE("distance level set is a closed curve near the reachable boundary") {
    const GridSpec g = GridSpec::unit_square(101);
    const ScalarField one(g, 1.0);
    const auto s = solve_stationary(one, one, {{0.5, 0.5}}, DomainMask(g));
    const auto lines = extract_contours(s.u, {0.3});
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].closed);
    const DomainMask R = reachable_set(s, 0.3);
    for (const Point& p : lines[0].points) {
        double nearest = kInf;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!R.inside(k)) continue;
            const NodeIndex n = g.index_of(k);
            bool boundary = false;
            for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}})
                boundary = boundary || !R.inside(n.i + di, n.j + dj);
            if (boundary) nearest = std::min(nearest, distance(p, g.node(k)));
        }
        CHECK(nearest <= 2 * g.h());
    }
    std::ostringstream csv;
    write_contours_csv(csv, lines);
    const std::string text = csv.str();
    CHECK(text.rfind("level,polyline,x,y\n", 0) == 0);
    const auto rows = std::count(text.begin(), text.end(), '\n');
    CHECK(rows == static_cast<long>(lines[0].points.size()) + 2);
}

TEST_CASE("saddle cells split consistently") {
    const GridSpec g = GridSpec::unit_square(2);
    ScalarField f(g, std::vector<double>{1.0, 0.0, 0.0, 1.0});
    const auto lines = extract_contours(f, {0.5});
    CHECK(lines.size() == 2);
}
