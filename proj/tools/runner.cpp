#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ucplan/contour.hpp"
#include "ucplan/random_termination.hpp"
#include "ucplan/scenarios.hpp"

namespace ucplan::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
    std::string command;
    std::string scenario = "paper_main";
    std::optional<int> grid;
    std::optional<double> T;
    std::vector<double> times;
    std::vector<double> time_probs;
    std::optional<double> lambda;
    std::optional<double> beta;
    std::optional<double> C;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::vector<double> probs;
    std::optional<double> cell;
    std::string out = "out";
};

class Outputs {
public:
    void add(const std::string& name, std::string body) { files_[name] = std::move(body); }

    void commit(const fs::path& dir) const {
        fs::create_directories(dir);
        for (const auto& [name, body] : files_) {
            const fs::path target = dir / name;
            const fs::path tmp = dir / ("." + name + ".tmp");
            {
                std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
                if (!f) throw std::runtime_error("cannot write " + tmp.string());
                f << body;
                if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
            }
            fs::rename(tmp, target);
        }
    }

private:
    std::map<std::string, std::string> files_;
};

std::string field_csv(const ScalarField& f, std::optional<double> t = std::nullopt) {
    std::ostringstream s;
    write_field_csv(s, f, t);
    return s.str();
}

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream s;
    s << "x,y,cumulative_cost\n";
    for (std::size_t k = 0; k < tr.points.size(); ++k)
        s << format_number(tr.points[k].x) << ',' << format_number(tr.points[k].y) << ','
          << format_number(tr.cumulative_cost[k]) << '\n';
    return s.str();
}

std::string contour_csv(const ScalarField& f, const std::vector<double>& levels) {
    std::ostringstream s;
    write_contours_csv(s, extract_contours(f, levels));
    return s.str();
}

std::string pareto_csv(const ParetoFront& front, const GridSpec& spec) {
    std::ostringstream s;
    s << "worst,avg,i,j\n";
    for (const auto& e : front.entries) {
        const NodeIndex n = spec.index_of(e.node);
        s << format_number(e.worst) << ',' << format_number(e.avg) << ',' << n.i << ',' << n.j << '\n';
    }
    return s.str();
}

json num(double v) { return std::isfinite(v) ? json(v) : json("inf"); }

json point_json(Point p) { return {{"x", p.x}, {"y", p.y}}; }

json waypoint_json(const Waypoint& w, const GridSpec& spec) {
    const NodeIndex n = spec.index_of(w.node);
    return {{"x", w.position.x}, {"y", w.position.y}, {"i", n.i}, {"j", n.j}};
}

std::vector<double> auto_levels(const ScalarField& f, const DomainMask& mask, int count) {
    double lo = kInf;
    double hi = -kInf;
    for (std::size_t k = 0; k < f.spec().size(); ++k) {
        if (!mask.inside(k) || !std::isfinite(f[k])) continue;
        lo = std::min(lo, f[k]);
        hi = std::max(hi, f[k]);
    }
    std::vector<double> out;
    if (!(hi > lo)) return out;
    for (int k = 1; k <= count; ++k) out.push_back(lo + (hi - lo) * k / (count + 1));
    return out;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve",        "plan-fixed",  "plan-discrete", "plan-exponential",
                                                "robust-worst", "robust-risk", "robust-hard",   "robust-chance",
                                                "robust-dr",    "pareto",      "coarsen-check"};
    return names;
}

/// Resolved inputs shared by every command.
struct Job {
    Options opt;
    ScenarioDef def;
    std::optional<Scenario> sc;
    std::optional<TargetEnsemble> ensemble;
    std::optional<ValueSolution> start;
    std::vector<double> target_residuals;
    json summary;
    Outputs files;

    const Scenario& scenario() {
        if (!sc) sc = build_scenario(def);
        return *sc;
    }
    const TargetEnsemble& targets() {
        if (!ensemble) {
            ensemble = solve_ensemble(scenario(), &target_residuals);
            json r = json::array();
            for (double v : target_residuals) r.push_back(v);
            summary["max_residuals"]["targets"] = r;
        }
        return *ensemble;
    }
    const ValueSolution& from_start() {
        if (!start) {
            start = solve_from_start(scenario());
            summary["max_residuals"]["start"] = start->max_residual;
        }
        return *start;
    }
};

double require_value(const std::optional<double>& flag, const std::optional<double>& fallback, const char* what) {
    if (flag) return *flag;
    if (fallback) return *fallback;
    throw InvalidInput(std::string("missing --") + what);
}

double certainty_T(const Job& job) {
    if (job.opt.T) return *job.opt.T;
    if (const auto* f = std::get_if<FixedTime>(&job.def.time_model)) return f->T;
    throw InvalidInput("missing --T (scenario has no fixed certainty time)");
}

double rate_lambda(const Job& job) {
    if (job.opt.lambda) return *job.opt.lambda;
    if (const auto* e = std::get_if<ExponentialTime>(&job.def.time_model)) return e->lambda;
    if (!job.def.params.lambdas.empty()) return job.def.params.lambdas.front();
    throw InvalidInput("missing --lambda");
}

/// Checks every parameter the command will use before any solve starts.
void validate(Job& job) {
    const Options& o = job.opt;
    const std::string& c = o.command;
    auto positive = [](const std::optional<double>& v, const char* what) {
        if (v && !(*v > 0.0 && std::isfinite(*v))) throw InvalidInput(std::string("--") + what + " must be positive");
    };
    positive(o.T, "T");
    positive(o.lambda, "lambda");
    positive(o.beta, "beta");
    positive(o.cell, "cell");
    if (o.C && !std::isfinite(*o.C)) throw InvalidInput("--C must be finite");
    if (o.epsilon && !(*o.epsilon >= 0.0 && *o.epsilon <= 1.0)) throw InvalidInput("--epsilon must lie in [0, 1]");
    if (o.delta && !(*o.delta >= 0.0 && std::isfinite(*o.delta))) throw InvalidInput("--delta must be nonnegative");
    if (o.grid && *o.grid < 2) throw InvalidInput("--grid must be at least 2");
    if (o.grid) job.def.grid = *o.grid;
    if (!o.probs.empty()) {
        job.def.probs = o.probs;
        if (job.def.drone) {
            const auto& p = job.def.probs;
            if (p.size() != job.def.targets.size()) throw InvalidInput("--probs must have one entry per target");
            auto& model = std::get<DiscreteTimes>(job.def.time_model);
            double rest = 1.0;
            for (std::size_t j = 0; j + 1 < model.probs.size(); ++j) {
                model.probs[j] = p.at(job.def.drone->visit_order[j]);
                rest -= model.probs[j];
            }
            model.probs.back() = rest;
        }
    }
    if (!o.times.empty() || !o.time_probs.empty()) {
        if (c != "plan-discrete") throw InvalidInput("--times and --time-probs apply to plan-discrete only");
        if (job.def.drone) throw InvalidInput("drone scenarios derive their times from geometry");
        job.def.time_model = DiscreteTimes{o.times, o.time_probs};
    }
    validate_scenario(job.def);

    if (c == "plan-fixed" || c == "robust-worst" || c == "robust-risk" || c == "robust-hard" ||
        c == "robust-chance" || c == "robust-dr" || c == "coarsen-check" || (c == "pareto" && !o.lambda))
        certainty_T(job);
    if (c == "plan-discrete" && !std::holds_alternative<DiscreteTimes>(job.def.time_model))
        throw InvalidInput("plan-discrete needs --times and --time-probs");
    if (c == "plan-exponential") rate_lambda(job);
    if (c == "robust-risk") require_value(o.beta, job.def.params.beta, "beta");
    if (c == "robust-hard") require_value(o.C, job.def.params.C, "C");
    if (c == "robust-chance") {
        require_value(o.C, job.def.params.C, "C");
        require_value(o.epsilon, job.def.params.epsilon, "epsilon");
    }
    if (c == "robust-dr" && !o.delta && !job.def.params.delta && job.def.params.delta_sweep.empty())
        throw InvalidInput("missing --delta");
    if (c == "pareto" && o.lambda && job.def.params.C_sweep.empty())
        throw InvalidInput("exponential Pareto front needs a C sweep in the scenario params");
    if (c == "coarsen-check" && !job.def.storms.empty())
        throw InvalidInput("coarsen-check applies to target ensembles only");
}

void run_solve(Job& job) {
    const auto& e = job.targets();
    const auto& s = job.from_start();
    const Scenario& sc = job.scenario();
    const ScalarField q = expected_field(e);
    job.files.add("start.csv", field_csv(s.u));
    job.files.add("q.csv", field_csv(q));
    job.files.add("qbar.csv", field_csv(worst_field(e)));
    for (std::size_t i = 0; i < e.size(); ++i) job.files.add("u_" + std::to_string(i + 1) + ".csv", field_csv(e.fields[i]));
    job.files.add("q_contours.csv", contour_csv(q, auto_levels(q, sc.mask, 12)));
    json traj = json::array();
    for (std::size_t i = 0; i < e.size() && job.def.storms.empty(); ++i) {
        const auto sol = solve_stationary(sc.speed, sc.unit_cost, {job.def.targets[i]}, sc.mask);
        const Trajectory t = trace_trajectory(sol, sc.speed, sc.unit_cost, job.def.start);
        job.files.add("trajectory_" + std::to_string(i + 1) + ".csv", trajectory_csv(t));
        traj.push_back({{"target", i + 1}, {"traced_cost", t.total_cost()}, {"value", num(bilinear_sample(e.fields[i], job.def.start))}});
    }
    if (!traj.empty()) job.summary["trajectories"] = traj;
}

Trajectory path_to(Job& job, Point from, Point to, const ScalarField& cost) {
    const Scenario& sc = job.scenario();
    const auto sol = solve_stationary(sc.speed, cost, {to}, sc.mask);
    return trace_trajectory(sol, sc.speed, cost, from);
}

void run_plan_fixed(Job& job) {
    const double T = certainty_T(job);
    const Scenario& sc = job.scenario();
    const ScalarField q = expected_field(job.targets());
    const auto& s = job.from_start();
    const FixedTPlan plan = plan_fixed_T(q, s.u, T, sc.speed, sc.unit_cost, sc.mask, job.def.start);
    job.summary["T"] = T;
    job.summary["waypoint"] = waypoint_json(plan.waypoint, sc.grid);
    job.summary["q_at_waypoint"] = plan.q_at_waypoint;
    job.summary["qbar_at_waypoint"] = num(worst_field(job.targets())[plan.waypoint.node]);
    job.summary["expected_total"] = plan.expected_total;
    job.summary["marched_total"] = num(*plan.marched_total);
    job.files.add("trajectory.csv", trajectory_csv(path_to(job, job.def.start, plan.waypoint.position, sc.unit_cost)));
    job.files.add("reach_contour.csv", contour_csv(s.u, {T}));
    job.files.add("q.csv", field_csv(q));
}

void run_plan_discrete(Job& job) {
    const Scenario& sc = job.scenario();
    const auto& e = job.targets();
    const auto& model = std::get<DiscreteTimes>(job.def.time_model);
    const std::vector<Stage> stages =
        job.def.drone ? drone_stages(job.def, e) : discrete_time_stages(expected_field(e), model);
    const ChainPlan plan = plan_stage_chain(stages, sc.speed, sc.unit_cost, sc.mask, job.def.start);
    json st = json::array();
    for (std::size_t j = 0; j < stages.size(); ++j) {
        const Point w = plan.waypoints[j];
        st.push_back({{"time", stages[j].time}, {"weight", stages[j].weight}, {"waypoint", point_json(w)}});
        job.files.add("stage_" + std::to_string(j + 1) + ".csv",
                      field_csv(plan.values[j].terminal(), plan.values[j].times.front()));
    }
    job.summary["stages"] = st;
    job.summary["value_at_start"] = plan.value_at_start;
    job.files.add("trajectory.csv", trajectory_csv(plan.path));
}

void run_plan_exponential(Job& job) {
    const Scenario& sc = job.scenario();
    const double lambda = rate_lambda(job);
    const auto& e = job.targets();
    const ScalarField q = expected_field(e);
    const ScalarField qbar = worst_field(e);
    const ScalarField zero(sc.grid, 0.0);
    const auto C = job.opt.C;
    const RandomTerminationSolution sol =
        C ? solve_random_termination_constrained(q, qbar, sc.speed, lambda, *C, sc.mask, zero, job.def.start)
          : solve_random_termination(q, sc.speed, lambda, sc.mask, zero);
    const ExponentialPlan plan = trace_exponential(sol, qbar, sc.speed, zero, job.def.start);
    job.summary["lambda"] = lambda;
    if (C) job.summary["C"] = *C;
    job.summary["max_residuals"]["random_termination"] = sol.max_residual;
    job.summary["motionless_nodes"] = sol.motionless.count();
    job.summary["terminal_waypoint"] = waypoint_json(plan.terminal, sc.grid);
    job.summary["value_at_start"] = plan.value_at_start;
    job.summary["worst_along_path"] = plan.worst_along_path;
    job.files.add("u_lambda.csv", field_csv(sol.u));
    job.files.add("trajectory.csv", trajectory_csv(plan.path));
}

void run_pareto(Job& job) {
    const Scenario& sc = job.scenario();
    const auto& e = job.targets();
    const ScalarField q = expected_field(e);
    const ScalarField qbar = worst_field(e);
    ParetoFront front;
    if (job.opt.lambda) {
        const ScalarField zero(sc.grid, 0.0);
        front = exponential_pareto(q, qbar, sc.speed, *job.opt.lambda, job.def.params.C_sweep, sc.mask, zero,
                                   job.def.start);
        job.summary["lambda"] = *job.opt.lambda;
        job.summary["C_sweep"] = job.def.params.C_sweep;
    } else {
        const double T = certainty_T(job);
        front = pareto_front(q, qbar, reachable_set(job.from_start(), T));
        job.summary["T"] = T;
    }
    job.summary["front_size"] = front.entries.size();
    job.files.add("pareto.csv", pareto_csv(front, sc.grid));
}

DomainMask reach(Job& job) { return reachable_set(job.from_start(), certainty_T(job)); }

void run_robust_worst(Job& job) {
    const auto& e = job.targets();
    const DomainMask R = reach(job);
    const ScalarField qbar = worst_field(e);
    const ScalarField q = expected_field(e);
    const Waypoint w = waypoint_argmin(qbar, R);
    job.summary["T"] = certainty_T(job);
    job.summary["waypoint"] = waypoint_json(w, qbar.spec());
    job.summary["qbar_at_waypoint"] = qbar[w.node];
    job.summary["q_at_waypoint"] = q[w.node];
    job.files.add("qbar.csv", field_csv(qbar));
}

void run_robust_risk(Job& job) {
    const auto& e = job.targets();
    const double beta = require_value(job.opt.beta, job.def.params.beta, "beta");
    const DomainMask R = reach(job);
    const ScalarField ce = risk_sensitive_field(e, beta);
    const Waypoint w = waypoint_argmin(ce, R);
    job.summary["T"] = certainty_T(job);
    job.summary["beta"] = beta;
    job.summary["waypoint"] = waypoint_json(w, ce.spec());
    job.summary["certainty_equivalent"] = ce[w.node];
    job.summary["q_at_waypoint"] = expected_field(e)[w.node];
    job.summary["qbar_at_waypoint"] = worst_field(e)[w.node];
    job.files.add("certainty_equivalent.csv", field_csv(ce));
}

void run_robust_hard(Job& job) {
    const auto& e = job.targets();
    const double C = require_value(job.opt.C, job.def.params.C, "C");
    const DomainMask R = reach(job);
    const ScalarField q = expected_field(e);
    const ScalarField qbar = worst_field(e);
    const Waypoint w = hard_constrained_waypoint(q, qbar, R, C);
    job.summary["T"] = certainty_T(job);
    job.summary["C"] = C;
    job.summary["waypoint"] = waypoint_json(w, q.spec());
    job.summary["q_at_waypoint"] = q[w.node];
    job.summary["qbar_at_waypoint"] = qbar[w.node];
    job.files.add("trajectory.csv", trajectory_csv(path_to(job, job.def.start, w.position, job.scenario().unit_cost)));
}

void run_robust_chance(Job& job) {
    const auto& e = job.targets();
    const double C = require_value(job.opt.C, job.def.params.C, "C");
    const double eps = require_value(job.opt.epsilon, job.def.params.epsilon, "epsilon");
    const DomainMask R = reach(job);
    const ScalarField q = expected_field(e);
    const HullChain chain = risk_hull(e, q, R, C);
    const WaypointPolicy policy = policy_from_hull(chain, eps, q.spec());
    json atoms = json::array();
    for (const auto& a : policy.atoms)
        atoms.push_back({{"x", a.waypoint.position.x}, {"y", a.waypoint.position.y}, {"probability", a.probability}});
    const json pj = {{"atoms", atoms}, {"objective", policy.objective}, {"risk", policy.risk}};
    job.files.add("policy.json", pj.dump(2) + "\n");
    std::ostringstream hull;
    hull << "risk,value,i,j\n";
    for (const auto& v : chain.vertices) {
        const NodeIndex n = q.spec().index_of(v.node);
        hull << format_number(v.risk) << ',' << format_number(v.value) << ',' << n.i << ',' << n.j << '\n';
    }
    job.files.add("hull.csv", hull.str());
    job.files.add("risk.csv", field_csv(risk_field(e, C, R)));
    job.summary["T"] = certainty_T(job);
    job.summary["C"] = C;
    job.summary["epsilon"] = eps;
    job.summary["policy"] = pj;
}

void run_robust_dr(Job& job) {
    const auto& e = job.targets();
    const DomainMask R = reach(job);
    const ScalarField q = expected_field(e);
    const ScalarField qbar = worst_field(e);
    job.summary["T"] = certainty_T(job);
    const std::optional<double> delta = job.opt.delta ? job.opt.delta : job.def.params.delta;
    if (delta) {
        const ScalarField dr = dr_field(e, *delta);
        const Waypoint w = waypoint_argmin(dr, R);
        job.summary["delta"] = *delta;
        job.summary["waypoint"] = waypoint_json(w, q.spec());
        job.summary["dr_value"] = dr[w.node];
        job.summary["q_at_waypoint"] = q[w.node];
        job.summary["qbar_at_waypoint"] = qbar[w.node];
    }
    if (!job.opt.delta && !job.def.params.delta_sweep.empty()) {
        std::ostringstream s;
        s << "delta,x,y,dr_value,q,qbar\n";
        for (double d : job.def.params.delta_sweep) {
            const ScalarField dr = dr_field(e, d);
            const Waypoint w = waypoint_argmin(dr, R);
            s << format_number(d) << ',' << format_number(w.position.x) << ',' << format_number(w.position.y) << ','
              << format_number(dr[w.node]) << ',' << format_number(q[w.node]) << ',' << format_number(qbar[w.node])
              << '\n';
        }
        job.files.add("dr_sweep.csv", s.str());
    }
}

void run_coarsen_check(Job& job) {
    const Scenario& sc = job.scenario();
    const auto& e = job.targets();
    const double cell = job.opt.cell.value_or(0.05);
    // 3x3 cluster per coarse target; the corners sit exactly `cell` away.
    const double r = cell / std::sqrt(2.0);
    std::vector<FineTarget> fine;
    std::vector<Point> locations;
    for (std::size_t i = 0; i < e.size(); ++i) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const Point p{e.targets[i].x + di * r, e.targets[i].y + dj * r};
                if (!sc.grid.contains(p) || !sc.mask.inside(sc.grid.nearest(p)))
                    throw InvalidInput("fine target cluster leaves the domain; reduce --cell");
                fine.push_back({p, e.probs[i] / 9.0, i});
                locations.push_back(p);
            }
        }
    }
    const auto sols = solve_each(sc.speed, sc.unit_cost, locations, sc.mask);
    std::vector<ScalarField> fields;
    for (const auto& s : sols) fields.push_back(s.u);
    double f_low = kInf;
    for (std::size_t k = 0; k < sc.grid.size(); ++k)
        if (sc.mask.inside(k)) f_low = std::min(f_low, sc.speed[k]);
    const CoarseningReport rep = coarsening_check(fine, fields, e, reach(job), f_low, cell);
    job.summary["T"] = certainty_T(job);
    job.summary["cell_size"] = cell;
    job.summary["speed_floor"] = f_low;
    job.summary["max_gap"] = rep.max_gap;
    job.summary["gap_bound"] = rep.gap_bound;
    job.summary["suboptimality"] = rep.suboptimality;
    job.summary["suboptimality_bound"] = rep.suboptimality_bound;
    job.summary["within_bounds"] = rep.within_bounds();
    job.summary["coarse_waypoint"] = waypoint_json(rep.coarse_waypoint, sc.grid);
    job.summary["fine_waypoint"] = waypoint_json(rep.fine_waypoint, sc.grid);
}

void dispatch(Job& job) {
    const std::string& c = job.opt.command;
    if (c == "solve") return run_solve(job);
    if (c == "plan-fixed") return run_plan_fixed(job);
    if (c == "plan-discrete") return run_plan_discrete(job);
    if (c == "plan-exponential") return run_plan_exponential(job);
    if (c == "pareto") return run_pareto(job);
    if (c == "robust-worst") return run_robust_worst(job);
    if (c == "robust-risk") return run_robust_risk(job);
    if (c == "robust-hard") return run_robust_hard(job);
    if (c == "robust-chance") return run_robust_chance(job);
    if (c == "robust-dr") return run_robust_dr(job);
    if (c == "coarsen-check") return run_coarsen_check(job);
    throw InvalidInput("unknown command '" + c + "'");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"Path planning under delayed target certainty", "ucplan"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--scenario", opt.scenario, "built-in scenario name or JSON config path");
    app.add_option("--grid", opt.grid, "nodes per side of the unit-square lattice");
    app.add_option("--T", opt.T, "fixed certainty time");
    app.add_option("--times", opt.times, "discrete certainty times")->delimiter(',');
    app.add_option("--time-probs", opt.time_probs, "probabilities of the discrete times")->delimiter(',');
    app.add_option("--lambda", opt.lambda, "rate of the exponential certainty time");
    app.add_option("--beta", opt.beta, "risk sensitivity");
    app.add_option("--C", opt.C, "worst-case or deadline level");
    app.add_option("--epsilon", opt.epsilon, "chance-constraint risk level");
    app.add_option("--delta", opt.delta, "total-variation ambiguity radius");
    app.add_option("--probs", opt.probs, "hypothesis probabilities")->delimiter(',');
    app.add_option("--cell", opt.cell, "coarsening cell size (coarsen-check)");
    app.add_option("--out", opt.out, "output directory");
    for (const auto& name : command_names()) app.add_subcommand(name, "")->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    }
    opt.command = app.get_subcommands().front()->get_name();

    Job job;
    job.opt = opt;
    try {
        job.def = load_scenario(opt.scenario);
        validate(job);
        job.summary["command"] = opt.command;
        job.summary["scenario"] = job.def.name;
        job.summary["grid"] = job.def.grid;
        job.summary["max_residuals"] = json::object();
        dispatch(job);
        job.files.add("summary.json", job.summary.dump(2) + "\n");
        job.files.commit(opt.out);
    } catch (const Infeasible& e) {
        err << "error: infeasible: " << e.what() << '\n';
        return 1;
    } catch (const InvalidInput& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: runtime: " << e.what() << '\n';
        return 3;
    }
    out << "wrote " << (fs::path(opt.out) / "summary.json").string() << '\n';
    return 0;
}

} // namespace ucplan::cli
