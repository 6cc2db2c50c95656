#include "ucplan/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ucplan {

using nlohmann::json;

double SpeedSpec::operator()(Point p) const {
    return base + amplitude * std::cos(2.0 * std::numbers::pi * p.x) * std::sin(2.0 * std::numbers::pi * p.y);
}

StormSpec StormSpec::from_axes(Point center, double major, double minor, double angle) {
    if (!(major > 0.0) || !(minor > 0.0)) throw InvalidInput("storm semi-axes must be positive");
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double iM = 1.0 / (major * major);
    const double im = 1.0 / (minor * minor);
    StormSpec st;
    st.center = center;
    st.a11 = c * c * iM + s * s * im;
    st.a12 = c * s * (iM - im);
    st.a22 = s * s * iM + c * c * im;
    return st;
}

double StormSpec::quadratic_form(Point p) const {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return a11 * dx * dx + 2.0 * a12 * dx * dy + a22 * dy * dy;
}

double StormSpec::cost(Point p) const {
    const double d = quadratic_form(p);
    return d < 1.0 ? 1.0 + alpha * std::pow(1.0 - d, gamma) : 1.0;
}

void StormSpec::validate() const {
    if (!(a11 > 0.0) || !(a11 * a22 - a12 * a12 > 0.0)) throw InvalidInput("storm shape matrix must be positive definite");
    if (!(alpha > 0.0) || !(gamma > 0.0)) throw InvalidInput("storm alpha and gamma must be positive");
}

namespace {

bool finite_point(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

bool in_unit_square(Point p) { return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0; }

bool strictly_inside(const RectObstacle& r, Point p) {
    return p.x > r.lo.x && p.x < r.hi.x && p.y > r.lo.y && p.y < r.hi.y;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
    return out;
}

std::vector<Point> main_targets() { return {{0.5, 0.95}, {0.9, 0.5}, {0.5, 0.05}, {0.1, 0.5}}; }

} // namespace

void validate_scenario(const ScenarioDef& def) {
    if (def.name.empty()) throw InvalidInput("scenario name is empty");
    if (def.grid < 2) throw InvalidInput("grid must have at least 2 nodes per side");
    if (!(def.speed.base - std::abs(def.speed.amplitude) > 0.0) || !std::isfinite(def.speed.base) ||
        !std::isfinite(def.speed.amplitude))
        throw InvalidInput("speed must stay positive: base must exceed |amplitude|");
    for (const auto& r : def.obstacles)
        if (!finite_point(r.lo) || !finite_point(r.hi) || !(r.lo.x < r.hi.x) || !(r.lo.y < r.hi.y))
            throw InvalidInput("obstacle corners must satisfy lo < hi");
    auto check_point = [&](Point p, const std::string& what) {
        if (!finite_point(p) || !in_unit_square(p)) throw InvalidInput(what + " must lie in the unit square");
        for (const auto& r : def.obstacles)
            if (strictly_inside(r, p)) throw InvalidInput(what + " lies inside an obstacle");
    };
    check_point(def.start, "start");
    if (def.targets.empty()) throw InvalidInput("scenario needs at least one target");
    for (const Point& t : def.targets) check_point(t, "target");
    if (!def.storms.empty() && def.targets.size() != 1)
        throw InvalidInput("storm scenarios take exactly one target");
    for (const auto& s : def.storms) s.validate();
    if (def.probs.size() != def.hypotheses())
        throw InvalidInput("probs must have one entry per " + std::string(def.storms.empty() ? "target" : "storm"));
    validate_probabilities(def.probs, "scenario probabilities");
    validate_time_model(def.time_model);
    if (def.drone) {
        const auto& d = *def.drone;
        if (!def.storms.empty()) throw InvalidInput("drone search applies to target uncertainty only");
        if (!(d.speed > 0.0) || !std::isfinite(d.speed)) throw InvalidInput("drone speed must be positive");
        if (d.visit_order.size() + 1 != def.targets.size())
            throw InvalidInput("drones must visit all targets but one");
        std::set<std::size_t> seen(d.visit_order.begin(), d.visit_order.end());
        if (seen.size() != d.visit_order.size() || *seen.rbegin() >= def.targets.size())
            throw InvalidInput("drone visit order must list distinct target indices");
        const auto* model = std::get_if<DiscreteTimes>(&def.time_model);
        if (!model) throw InvalidInput("drone search needs a discrete time model");
        const auto times = drone_arrival_times(def);
        for (std::size_t j = 0; j < times.size(); ++j)
            if (std::abs(times[j] - model->times[j]) > 1e-12)
                throw InvalidInput("discrete times must equal the drone arrival times");
    }
    const auto& pr = def.params;
    if (pr.epsilon && !(*pr.epsilon >= 0.0 && *pr.epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
    if (pr.beta && !(*pr.beta > 0.0)) throw InvalidInput("beta must be positive");
    if (pr.delta && !(*pr.delta >= 0.0)) throw InvalidInput("delta must be nonnegative");
    for (double d : pr.delta_sweep)
        if (!(d >= 0.0)) throw InvalidInput("delta sweep values must be nonnegative");
    for (double l : pr.lambdas)
        if (!(l > 0.0)) throw InvalidInput("lambda values must be positive");
    if (pr.C && !std::isfinite(*pr.C)) throw InvalidInput("C must be finite");
    for (double c : pr.C_sweep)
        if (!std::isfinite(c)) throw InvalidInput("C sweep values must be finite");
}

ScenarioDef paper_main_scenario() {
    ScenarioDef d;
    d.name = "paper_main";
    d.speed = {1.4, 0.6};
    d.obstacles = {{{0.45, 0.15}, {0.55, 0.85}}};
    d.start = {0.3, 0.2};
    d.targets = main_targets();
    d.probs = {0.2, 0.3, 0.2, 0.3};
    d.time_model = FixedTime{0.4};
    d.params.C = 0.56;
    d.params.epsilon = 0.25;
    d.params.beta = 200.0;
    d.params.delta = 0.02;
    d.params.delta_sweep = linspace(0.0, 0.8, 40);
    d.params.C_sweep = linspace(0.66, 0.81, 16);
    d.params.lambdas = {2.5, 30.0};
    return d;
}

ScenarioDef storm_scenario(const std::vector<double>& probs) {
    ScenarioDef d;
    d.name = "storm";
    d.speed = {1.0, 0.0};
    d.start = {0.1, 0.1};
    d.targets = {{0.9, 0.9}};
    d.storms = {StormSpec::from_axes({0.6, 0.6}, 0.2, 0.1, -std::numbers::pi / 4.0),
                StormSpec::from_axes({0.35, 0.75}, 0.18, 0.1, 0.0),
                StormSpec::from_axes({0.75, 0.35}, 0.18, 0.1, std::numbers::pi / 2.0)};
    d.probs = probs;
    d.time_model = FixedTime{0.4};
    return d;
}

ScenarioDef drone_rescue_scenario() {
    ScenarioDef d = paper_main_scenario();
    d.name = "drone_rescue";
    d.params = {};
    d.drone = DroneSpec{5.0 / 3.0, {2, 3, 1}};
    const auto times = drone_arrival_times(d);
    const auto& p = d.probs;
    d.time_model = DiscreteTimes{times, {p[2], p[3], p[0] + p[1]}};
    return d;
}

ScenarioDef bad_dr_scenario() {
    ScenarioDef d;
    d.name = "bad_dr";
    d.speed = {1.4, -0.6};
    d.obstacles = {{{0.45, 0.15}, {0.55, 0.85}}};
    d.start = {0.3, 0.2};
    d.targets = main_targets();
    d.targets[0] = {0.45, 0.95};
    d.probs = {0.17, 0.35, 0.3, 0.18};
    d.time_model = FixedTime{0.4};
    d.params.C = 0.53;
    d.params.delta_sweep = linspace(0.0, 1.0, 100);
    return d;
}

std::vector<std::string> builtin_scenario_names() { return {"paper_main", "storm", "drone_rescue", "bad_dr"}; }

ScenarioDef builtin_scenario(const std::string& name) {
    if (name == "paper_main") return paper_main_scenario();
    if (name == "storm") return storm_scenario();
    if (name == "drone_rescue") return drone_rescue_scenario();
    if (name == "bad_dr") return bad_dr_scenario();
    throw InvalidInput("unknown scenario '" + name + "'");
}

std::vector<double> drone_arrival_times(const ScenarioDef& def) {
    if (!def.drone) throw InvalidInput("scenario has no drones");
    std::vector<double> out;
    for (std::size_t k : def.drone->visit_order) {
        if (k >= def.targets.size()) throw InvalidInput("drone visit index out of range");
        out.push_back(distance(def.targets[k], def.start) / def.drone->speed);
    }
    return out;
}

// --- JSON ------------------------------------------------------------------

namespace {

json point_json(Point p) { return json::array({p.x, p.y}); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
            throw InvalidInput("unknown key '" + it.key() + "' in " + where);
    }
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InvalidInput("missing key '" + std::string(key) + "' in " + where);
    return j.at(key);
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw InvalidInput(what + " must be a number");
    return j.get<double>();
}

Point point(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw InvalidInput(what + " must be [x, y]");
    return {number(j[0], what), number(j[1], what)};
}

std::vector<double> numbers(const json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + " must be an array");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(number(e, what));
    return out;
}

json time_model_json(const CertaintyTimeModel& m) {
    if (const auto* f = std::get_if<FixedTime>(&m)) return {{"type", "fixed"}, {"T", f->T}};
    if (const auto* d = std::get_if<DiscreteTimes>(&m))
        return {{"type", "discrete"}, {"times", d->times}, {"probs", d->probs}};
    return {{"type", "exponential"}, {"lambda", std::get<ExponentialTime>(m).lambda}};
}

CertaintyTimeModel time_model_from(const json& j) {
    const std::string where = "time_model";
    const json& type = require(j, "type", where);
    if (!type.is_string()) throw InvalidInput("time_model.type must be a string");
    const auto t = type.get<std::string>();
    if (t == "fixed") {
        check_keys(j, {"type", "T"}, where);
        return FixedTime{number(require(j, "T", where), "time_model.T")};
    }
    if (t == "discrete") {
        check_keys(j, {"type", "times", "probs"}, where);
        return DiscreteTimes{numbers(require(j, "times", where), "time_model.times"),
                             numbers(require(j, "probs", where), "time_model.probs")};
    }
    if (t == "exponential") {
        check_keys(j, {"type", "lambda"}, where);
        return ExponentialTime{number(require(j, "lambda", where), "time_model.lambda")};
    }
    throw InvalidInput("unknown time_model type '" + t + "'");
}

} // namespace

std::string scenario_to_json(const ScenarioDef& def) {
    json j;
    j["name"] = def.name;
    j["grid"] = def.grid;
    j["speed"] = {{"base", def.speed.base}, {"amplitude", def.speed.amplitude}};
    j["obstacles"] = json::array();
    for (const auto& r : def.obstacles) j["obstacles"].push_back({{"lo", point_json(r.lo)}, {"hi", point_json(r.hi)}});
    j["start"] = point_json(def.start);
    j["targets"] = json::array();
    for (const Point& t : def.targets) j["targets"].push_back(point_json(t));
    j["storms"] = json::array();
    for (const auto& s : def.storms)
        j["storms"].push_back({{"center", point_json(s.center)},
                               {"A", {s.a11, s.a12, s.a22}},
                               {"alpha", s.alpha},
                               {"gamma", s.gamma}});
    j["probs"] = def.probs;
    j["time_model"] = time_model_json(def.time_model);
    if (def.drone) j["drone"] = {{"speed", def.drone->speed}, {"visit_order", def.drone->visit_order}};
    json p = json::object();
    const auto& pr = def.params;
    if (pr.C) p["C"] = *pr.C;
    if (pr.epsilon) p["epsilon"] = *pr.epsilon;
    if (pr.beta) p["beta"] = *pr.beta;
    if (pr.delta) p["delta"] = *pr.delta;
    if (!pr.delta_sweep.empty()) p["delta_sweep"] = pr.delta_sweep;
    if (!pr.C_sweep.empty()) p["C_sweep"] = pr.C_sweep;
    if (!pr.lambdas.empty()) p["lambdas"] = pr.lambdas;
    j["params"] = p;
    return j.dump(2) + "\n";
}

ScenarioDef scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("malformed scenario JSON: ") + e.what());
    }
    const std::string top = "scenario";
    check_keys(j, {"name", "grid", "speed", "obstacles", "start", "targets", "storms", "probs", "time_model", "drone",
                   "params"},
               top);
    ScenarioDef d;
    const json& name = require(j, "name", top);
    if (!name.is_string()) throw InvalidInput("name must be a string");
    d.name = name.get<std::string>();
    if (j.contains("grid")) {
        if (!j["grid"].is_number_integer()) throw InvalidInput("grid must be an integer");
        d.grid = j["grid"].get<int>();
    }
    const json& sp = require(j, "speed", top);
    check_keys(sp, {"base", "amplitude"}, "speed");
    d.speed.base = number(require(sp, "base", "speed"), "speed.base");
    d.speed.amplitude = sp.contains("amplitude") ? number(sp["amplitude"], "speed.amplitude") : 0.0;
    if (j.contains("obstacles")) {
        if (!j["obstacles"].is_array()) throw InvalidInput("obstacles must be an array");
        for (const auto& o : j["obstacles"]) {
            check_keys(o, {"lo", "hi"}, "obstacle");
            d.obstacles.push_back({point(require(o, "lo", "obstacle"), "obstacle.lo"),
                                   point(require(o, "hi", "obstacle"), "obstacle.hi")});
        }
    }
    d.start = point(require(j, "start", top), "start");
    const json& targets = require(j, "targets", top);
    if (!targets.is_array()) throw InvalidInput("targets must be an array");
    for (const auto& t : targets) d.targets.push_back(point(t, "target"));
    if (j.contains("storms")) {
        if (!j["storms"].is_array()) throw InvalidInput("storms must be an array");
        for (const auto& s : j["storms"]) {
            check_keys(s, {"center", "A", "alpha", "gamma"}, "storm");
            StormSpec st;
            st.center = point(require(s, "center", "storm"), "storm.center");
            const auto A = numbers(require(s, "A", "storm"), "storm.A");
            if (A.size() != 3) throw InvalidInput("storm.A must be [a11, a12, a22]");
            st.a11 = A[0];
            st.a12 = A[1];
            st.a22 = A[2];
            if (s.contains("alpha")) st.alpha = number(s["alpha"], "storm.alpha");
            if (s.contains("gamma")) st.gamma = number(s["gamma"], "storm.gamma");
            d.storms.push_back(st);
        }
    }
    d.probs = numbers(require(j, "probs", top), "probs");
    if (j.contains("time_model")) d.time_model = time_model_from(j["time_model"]);
    if (j.contains("drone")) {
        const json& dr = j["drone"];
        check_keys(dr, {"speed", "visit_order"}, "drone");
        DroneSpec spec;
        spec.speed = number(require(dr, "speed", "drone"), "drone.speed");
        const json& order = require(dr, "visit_order", "drone");
        if (!order.is_array()) throw InvalidInput("drone.visit_order must be an array");
        for (const auto& k : order) {
            if (!k.is_number_unsigned()) throw InvalidInput("drone.visit_order entries must be target indices");
            spec.visit_order.push_back(k.get<std::size_t>());
        }
        d.drone = spec;
    }
    if (j.contains("params")) {
        const json& p = j["params"];
        check_keys(p, {"C", "epsilon", "beta", "delta", "delta_sweep", "C_sweep", "lambdas"}, "params");
        auto& pr = d.params;
        if (p.contains("C")) pr.C = number(p["C"], "params.C");
        if (p.contains("epsilon")) pr.epsilon = number(p["epsilon"], "params.epsilon");
        if (p.contains("beta")) pr.beta = number(p["beta"], "params.beta");
        if (p.contains("delta")) pr.delta = number(p["delta"], "params.delta");
        if (p.contains("delta_sweep")) pr.delta_sweep = numbers(p["delta_sweep"], "params.delta_sweep");
        if (p.contains("C_sweep")) pr.C_sweep = numbers(p["C_sweep"], "params.C_sweep");
        if (p.contains("lambdas")) pr.lambdas = numbers(p["lambdas"], "params.lambdas");
    }
    validate_scenario(d);
    return d;
}

ScenarioDef load_scenario(const std::string& name_or_path) {
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_scenario(name_or_path);
    std::ifstream in(name_or_path);
    if (!in) throw InvalidInput("no built-in scenario or readable file named '" + name_or_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

// --- Lattice realization -------------------------------------------------------

Scenario build_scenario(const ScenarioDef& def) {
    validate_scenario(def);
    const GridSpec grid = GridSpec::unit_square(def.grid);
    DomainMask mask(grid);
    for (const auto& r : def.obstacles) mask.carve_rectangle(r.lo, r.hi);
    auto check = [&](Point p, const char* what) {
        if (!mask.inside(grid.nearest(p)))
            throw InvalidInput(std::string(what) + " does not snap to an inside node on this grid");
    };
    check(def.start, "start");
    for (const Point& t : def.targets) check(t, "target");
    Scenario s{def, grid, mask, build_field(grid, def.speed), ScalarField(grid, 1.0), {}};
    for (const auto& st : def.storms)
        s.storm_costs.push_back(build_field(grid, [&](Point p) { return st.cost(p); }));
    return s;
}

TargetEnsemble solve_ensemble(const Scenario& scenario, std::vector<double>* residuals) {
    const ScenarioDef& def = scenario.def;
    std::vector<ValueSolution> sols =
        def.storms.empty() ? solve_each(scenario.speed, scenario.unit_cost, def.targets, scenario.mask)
                           : solve_each(scenario.speed, scenario.storm_costs, def.targets.front(), scenario.mask);
    TargetEnsemble e;
    e.probs = def.probs;
    for (std::size_t i = 0; i < sols.size(); ++i) {
        e.targets.push_back(def.storms.empty() ? def.targets[i] : def.targets.front());
        if (residuals) residuals->push_back(sols[i].max_residual);
        e.fields.push_back(std::move(sols[i].u));
    }
    return e;
}

ValueSolution solve_from_start(const Scenario& scenario) {
    return solve_stationary(scenario.speed, scenario.unit_cost, {scenario.def.start}, scenario.mask);
}

std::vector<Stage> drone_stages(const ScenarioDef& def, const TargetEnsemble& ensemble) {
    if (!def.drone) throw InvalidInput("scenario has no drones");
    validate_ensemble(ensemble);
    const auto times = drone_arrival_times(def);
    const auto& order = def.drone->visit_order;
    const auto& p = ensemble.probs;
    const GridSpec& spec = ensemble.spec();
    std::vector<bool> remaining(ensemble.size(), true);
    double mass = 1.0;
    std::vector<Stage> stages;
    for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        const std::size_t k = order[j];
        stages.push_back({times[j], p[k] / mass, ensemble.fields[k]});
        remaining[k] = false;
        mass -= p[k];
    }
    // The last report settles between the final drone site and the unvisited one.
    double tail = 0.0;
    for (std::size_t i = 0; i < ensemble.size(); ++i)
        if (remaining[i]) tail += p[i];
    ScalarField mix(spec, 0.0);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            if (!remaining[i]) continue;
            const double v = ensemble.fields[i][k];
            acc = std::isfinite(v) ? acc + p[i] / tail * v : kInf;
            if (!std::isfinite(acc)) break;
        }
        mix[k] = acc;
    }
    stages.push_back({times.back(), 1.0, std::move(mix)});
    return stages;
}

} // namespace ucplan
