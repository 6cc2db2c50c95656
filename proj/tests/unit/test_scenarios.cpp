#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ucplan/scenarios.hpp"

using namespace ucplan;

TEST_CASE("built-in scenarios validate and round trip through JSON") {
    for (const auto& name : builtin_scenario_names()) {
        CAPTURE(name);
        const ScenarioDef def = builtin_scenario(name);
        CHECK_NOTHROW(validate_scenario(def));
        const std::string text = scenario_to_json(def);
        CHECK(scenario_to_json(scenario_from_json(text)) == text);
    }
    CHECK_THROWS_AS(builtin_scenario("nope"), InvalidInput);
}

TEST_CASE("shipped config files match the built-ins") {
    const std::filesystem::path dir = UCPLAN_SCENARIO_DIR;
    for (const auto& name : builtin_scenario_names()) {
        CAPTURE(name);
        const auto path = dir / (name + ".json");
        REQUIRE(std::filesystem::exists(path));
        CHECK(scenario_to_json(load_scenario(path.string())) == scenario_to_json(builtin_scenario(name)));
    }
}

TEST_CASE("malformed configs are rejected") {
    CHECK_THROWS_AS(scenario_from_json("{"), InvalidInput);
    CHECK_THROWS_AS(scenario_from_json("[]"), InvalidInput);
    std::string text = scenario_to_json(paper_main_scenario());
    CHECK_THROWS_AS(scenario_from_json(text.substr(0, text.size() - 3) + ", \"bogus\": 1}"), InvalidInput);
    ScenarioDef def = paper_main_scenario();
    def.probs = {0.5, 0.5, 0.5, -0.5};
    CHECK_THROWS_AS(validate_scenario(def), InvalidInput);
    def = paper_main_scenario();
    def.start = {0.5, 0.5};
    CHECK_THROWS_AS(validate_scenario(def), InvalidInput);
    def = paper_main_scenario();
    def.grid = 1;
    CHECK_THROWS_AS(validate_scenario(def), InvalidInput);
    CHECK_THROWS_AS(load_scenario("/nonexistent/config.json"), InvalidInput);
}

TEST_CASE("main scenario geometry") {
    const Scenario sc = build_scenario(paper_main_scenario());
    CHECK(sc.grid.nx() == 201);
    CHECK_FALSE(sc.mask.inside(sc.grid.nearest({0.5, 0.5})));
    CHECK(sc.mask.inside(sc.grid.nearest({0.3, 0.2})));
    const double f = sc.speed[sc.grid.linear(0, 0)];
    CHECK(f == doctest::Approx(1.4));
}

TEST_CASE("storm costs peak at the center and vanish outside") {
    const StormSpec s = StormSpec::from_axes({0.5, 0.5}, 0.2, 0.1, 0.3);
    CHECK(s.cost({0.5, 0.5}) == doctest::Approx(1.0 + s.alpha));
    CHECK(s.cost({0.9, 0.9}) == doctest::Approx(1.0));
    // Along the rotated major axis the boundary sits at distance 0.2.
    CHECK(s.quadratic_form({0.5 + 0.2 * std::cos(0.3), 0.5 + 0.2 * std::sin(0.3)}) == doctest::Approx(1.0));
    StormSpec bad = s;
    bad.a12 = 100.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("storm ensemble solves with one field per storm") {
    ScenarioDef def = storm_scenario();
    def.grid = 61;
    const Scenario sc = build_scenario(def);
    const TargetEnsemble e = solve_ensemble(sc);
    REQUIRE(e.size() == 3);
    const Point x0 = def.start;
    // Storms only add cost, so every hypothesis is at least the straight distance.
    for (const auto& f : e.fields) CHECK(bilinear_sample(f, x0) >= distance(x0, def.targets[0]) - 0.02);
}

TEST_CASE("drone arrival times and stages") {
    const ScenarioDef def = drone_rescue_scenario();
    const auto times = drone_arrival_times(def);
    REQUIRE(times.size() == 3);
    for (std::size_t k = 1; k < times.size(); ++k) CHECK(times[k] > times[k - 1]);
    const DroneSpec& d = *def.drone;
    CHECK(times[0] == doctest::Approx(distance(def.start, def.targets[d.visit_order[0]]) / d.speed));
    ScenarioDef small = def;
    small.grid = 51;
    const Scenario sc = build_scenario(small);
    const auto stages = drone_stages(small, solve_ensemble(sc));
    REQUIRE(stages.size() == 3);
    CHECK(stages.back().weight == doctest::Approx(1.0));
    CHECK(stages[0].weight == doctest::Approx(def.probs[d.visit_order[0]]));
}
