#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ucplan/eikonal.hpp"
#include "ucplan/robust.hpp"
#include "ucplan/time_marching.hpp"

namespace ucplan {

/// f(x, y) = base + amplitude * cos(2 pi x) * sin(2 pi y).
struct SpeedSpec {
    double base = 1.0;
    double amplitude = 0.0;

    double operator()(Point p) const;
};

struct RectObstacle {
    Point lo;
    Point hi;
};

/// Elliptic storm {(x - c)^T A (x - c) < 1} with cost
/// 1 + alpha (1 - (x - c)^T A (x - c))^gamma inside and 1 outside.
struct StormSpec {
    Point center;
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;
    double alpha = 2.0;
    double gamma = 2.5;

    /// Shape matrix for an ellipse with semi-axes (major, minor), the major
    /// axis rotated by `angle` radians from the x axis.
    static StormSpec from_axes(Point center, double major, double minor, double angle);
    double quadratic_form(Point p) const;
    double cost(Point p) const;
    /// Throws InvalidInput unless A is positive definite and alpha, gamma > 0.
    void validate() const;
};

/// Drones fly straight from the start to targets[visit_order[k]] at `speed`
/// and report on arrival. The last unvisited target is resolved at the final
/// report.
struct DroneSpec {
    double speed = 5.0 / 3.0;
    std::vector<std::size_t> visit_order;
};

/// Criterion parameters attached to a scenario; CLI flags override them.
struct ScenarioParams {
    std::optional<double> C;
    std::optional<double> epsilon;
    std::optional<double> beta;
    std::optional<double> delta;
    std::vector<double> delta_sweep;
    std::vector<double> C_sweep;
    std::vector<double> lambdas;
};

struct ScenarioDef {
    std::string name;
    int grid = 201;
    SpeedSpec speed;
    std::vector<RectObstacle> obstacles;
    Point start;
    /// Potential targets, or the single known target when storms are given.
    std::vector<Point> targets;
    /// Cost hypotheses; empty for target-uncertainty scenarios.
    std::vector<StormSpec> storms;
    /// Probabilities over targets, or over storms.
    std::vector<double> probs;
    CertaintyTimeModel time_model = FixedTime{0.4};
    std::optional<DroneSpec> drone;
    ScenarioParams params;

    std::size_t hypotheses() const { return storms.empty() ? targets.size() : storms.size(); }
};

/// Throws InvalidInput describing the first violated invariant.
void validate_scenario(const ScenarioDef& def);

ScenarioDef paper_main_scenario();
ScenarioDef storm_scenario(const std::vector<double>& probs = {0.8, 0.1, 0.1});
ScenarioDef drone_rescue_scenario();
ScenarioDef bad_dr_scenario();

std::vector<std::string> builtin_scenario_names();
/// Throws InvalidInput for an unknown name.
ScenarioDef builtin_scenario(const std::string& name);

/// Arrival times |targets[k] - start| / speed in visit order.
std::vector<double> drone_arrival_times(const ScenarioDef& def);

std::string scenario_to_json(const ScenarioDef& def);
/// Throws InvalidInput on malformed JSON, unknown keys or invalid values.
ScenarioDef scenario_from_json(const std::string& text);
/// A built-in name, or a path to a JSON config.
ScenarioDef load_scenario(const std::string& name_or_path);

/// Lattice realization of a scenario.
struct Scenario {
    ScenarioDef def;
    GridSpec grid;
    DomainMask mask;
    ScalarField speed;
    /// Unit cost, used for the start solve and target hypotheses.
    ScalarField unit_cost;
    /// One cost field per storm hypothesis.
    std::vector<ScalarField> storm_costs;
};

Scenario build_scenario(const ScenarioDef& def);

/// Per-hypothesis value fields. Target hypotheses solve from each target
/// with unit cost; storm hypotheses solve from the single target with each
/// storm cost.
TargetEnsemble solve_ensemble(const Scenario& scenario, std::vector<double>* residuals = nullptr);

/// Travel time from the start (unit cost).
ValueSolution solve_from_start(const Scenario& scenario);

/// Terminal-condition chain for the drone search: at each drone report the
/// found target's value with its conditional probability, and at the last
/// report the conditional mix of the two remaining targets.
std::vector<Stage> drone_stages(const ScenarioDef& def, const TargetEnsemble& ensemble);

} // namespace ucplan
