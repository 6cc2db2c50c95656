#include "ucplan/time_marching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ucplan {

namespace {

double sample_or_inf(const ScalarField& f, Point p) {
    return f.spec().contains(p) ? bilinear_sample(f, p) : kInf;
}

double sample_or_node(const ScalarField& f, Point p) {
    const double v = sample_or_inf(f, p);
    return std::isfinite(v) ? v : f.at(f.spec().nearest(p));
}

void append_path(Trajectory& path, const Trajectory& piece) {
    if (piece.points.empty()) return;
    const double offset = path.total_cost();
    std::size_t first = 0;
    if (!path.points.empty() && path.points.back() == piece.points.front()) first = 1;
    for (std::size_t k = first; k < piece.points.size(); ++k) {
        path.points.push_back(piece.points[k]);
        path.cumulative_cost.push_back(offset + piece.cumulative_cost[k]);
    }
}

bool unit_cost(const ScalarField& cost, const DomainMask& mask) {
    for (std::size_t k = 0; k < cost.spec().size(); ++k)
        if (mask.inside(k) && cost[k] != 1.0) return false;
    return true;
}

} // namespace

void validate_time_model(const CertaintyTimeModel& model) {
    if (const auto* f = std::get_if<FixedTime>(&model)) {
        if (!(f->T > 0.0) || !std::isfinite(f->T)) throw InvalidInput("certainty time T must be positive");
    } else if (const auto* d = std::get_if<DiscreteTimes>(&model)) {
        if (d->times.empty() || d->times.size() != d->probs.size())
            throw InvalidInput("discrete certainty times and probabilities must be non-empty and of equal length");
        for (std::size_t j = 0; j < d->times.size(); ++j) {
            if (!(d->times[j] > 0.0) || !std::isfinite(d->times[j]) || (j > 0 && !(d->times[j] > d->times[j - 1])))
                throw InvalidInput("certainty times must be positive and strictly increasing");
        }
        validate_probabilities(d->probs, "certainty time probabilities");
    } else {
        const auto& e = std::get<ExponentialTime>(model);
        if (!(e.lambda > 0.0) || !std::isfinite(e.lambda)) throw InvalidInput("rate lambda must be positive");
    }
}

TimeSlicedValue march_backward(const ScalarField& terminal, const ScalarField& speed, const ScalarField& cost,
                               double t_end, double t_start, const DomainMask& mask) {
    const GridSpec& spec = terminal.spec();
    if (!(speed.spec() == spec) || !(cost.spec() == spec) || !(mask.spec() == spec))
        throw InvalidInput("march_backward: fields use different grids");
    if (!(t_start < t_end)) throw InvalidInput("march_backward: t_start must precede t_end");
    double max_f = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (!mask.inside(k)) continue;
        if (!(speed[k] > 0.0) || !std::isfinite(speed[k])) throw InvalidInput("speed must be positive and finite inside");
        if (!(cost[k] >= 0.0) || !std::isfinite(cost[k])) throw InvalidInput("cost must be nonnegative and finite inside");
        max_f = std::max(max_f, speed[k]);
    }
    const double h = spec.h();
    const double span = t_end - t_start;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / (kCflFactor * h / max_f) - 1e-9)));
    const double dt = span / static_cast<double>(steps);
    if (dt * max_f * std::sqrt(2.0) > h) throw InvalidInput("time step violates the stability bound");

    TimeSlicedValue out{spec, {}, {}};
    out.times.reserve(steps + 1);
    out.slices.reserve(steps + 1);
    out.times.push_back(t_end);
    out.slices.push_back(apply_mask(terminal, mask));
    for (std::size_t s = 1; s <= steps; ++s) {
        const ScalarField& prev = out.slices.back();
        ScalarField next = prev;
        for (int j = 0; j < spec.ny(); ++j) {
            for (int i = 0; i < spec.nx(); ++i) {
                const std::size_t k = spec.linear(i, j);
                if (!mask.inside(k) || !std::isfinite(prev[k])) continue;
                next[k] = prev[k] - dt * (speed[k] * upwind_gradient_magnitude(prev, i, j) - cost[k]);
            }
        }
        out.times.push_back(s == steps ? t_start : t_end - static_cast<double>(s) * dt);
        out.slices.push_back(std::move(next));
    }
    return out;
}

FixedTPlan plan_fixed_T(const ScalarField& q, const ScalarField& u_from_start, double T) {
    const DomainMask reach = reachable_set(u_from_start, T);
    FixedTPlan plan;
    plan.waypoint = waypoint_argmin(q, reach);
    plan.q_at_waypoint = q[plan.waypoint.node];
    plan.expected_total = T + plan.q_at_waypoint;
    return plan;
}

FixedTPlan plan_fixed_T(const ScalarField& q, const ScalarField& u_from_start, double T, const ScalarField& speed,
                        const ScalarField& cost, const DomainMask& mask, Point x0) {
    FixedTPlan plan = plan_fixed_T(q, u_from_start, T);
    const TimeSlicedValue v = march_backward(q, speed, cost, T, 0.0, mask);
    plan.marched_total = sample_or_node(v.initial(), x0);
    return plan;
}

Point follow_flow(const TimeSlicedValue& value, const ScalarField& speed, const ScalarField& cost, Point start,
                  Trajectory& path) {
    if (path.points.empty()) {
        path.points.push_back(start);
        path.cumulative_cost.push_back(0.0);
    }
    Point p = start;
    double pending = 0.0;
    auto finite_at = [&](const ScalarField& v, Point q) { return std::isfinite(sample_or_inf(v, q)); };
    auto direction = [&](const ScalarField& v, Point q) -> std::optional<Point> {
        const Point g = interpolated_gradient(v, q);
        const double n = std::hypot(g.x, g.y);
        if (n < 1e-12) return std::nullopt;
        return Point{-g.x / n, -g.y / n};
    };

    for (std::size_t s = value.slices.size() - 1; s > 0; --s) {
        const ScalarField& v = value.slices[s];
        const double dt = value.times[s - 1] - value.times[s];
        pending += dt * sample_or_node(cost, p);
        auto d = direction(v, p);
        if (!d) continue;
        const double len = dt * sample_or_node(speed, p);
        const Point mid{p.x + 0.5 * len * d->x, p.y + 0.5 * len * d->y};
        if (finite_at(v, mid))
            if (auto dm = direction(v, mid)) d = dm;
        std::optional<Point> next;
        for (double l = len; l > len / 16.0 && !next; l *= 0.5) {
            const Point q{p.x + l * d->x, p.y + l * d->y};
            if (finite_at(v, q)) next = q;
        }
        if (!next) {
            // Slide along whichever axis lowers the value more.
            double best = sample_or_inf(v, p);
            for (int axis = 0; axis < 2; ++axis) {
                const double c = axis == 0 ? d->x : d->y;
                if (c == 0.0) continue;
                const double sl = c > 0 ? len : -len;
                const Point q = axis == 0 ? Point{p.x + sl, p.y} : Point{p.x, p.y + sl};
                const double w = sample_or_inf(v, q);
                if (std::isfinite(w) && w < best) {
                    best = w;
                    next = q;
                }
            }
        }
        if (!next) continue;
        p = *next;
        path.points.push_back(p);
        path.cumulative_cost.push_back(path.total_cost() + pending);
        pending = 0.0;
    }
    if (pending > 0.0) {
        path.points.push_back(p);
        path.cumulative_cost.push_back(path.total_cost() + pending);
    }
    return p;
}

ChainPlan plan_stage_chain(const std::vector<Stage>& stages, const ScalarField& speed, const ScalarField& cost,
                           const DomainMask& mask, Point x0) {
    if (stages.empty()) throw InvalidInput("stage chain is empty");
    const GridSpec& spec = speed.spec();
    for (std::size_t j = 0; j < stages.size(); ++j) {
        const Stage& st = stages[j];
        if (!(st.time > 0.0) || (j > 0 && !(st.time > stages[j - 1].time)))
            throw InvalidInput("stage times must be positive and strictly increasing");
        if (!(st.weight >= 0.0 && st.weight <= 1.0)) throw InvalidInput("stage weights must lie in [0, 1]");
        if (!(st.reward.spec() == spec)) throw InvalidInput("stage reward uses a different grid");
    }
    if (stages.back().weight != 1.0) throw InvalidInput("the last stage must have weight 1");
    if (!spec.contains(x0) || !mask.inside(spec.nearest(x0))) throw InvalidInput("start point lies outside the domain");

    const std::size_t r = stages.size();
    ChainPlan plan;
    plan.values.resize(r, TimeSlicedValue{spec, {}, {}});
    for (std::size_t j = r; j-- > 0;) {
        const Stage& st = stages[j];
        ScalarField terminal = st.reward;
        if (st.weight < 1.0) {
            const ScalarField& next = plan.values[j + 1].initial();
            for (std::size_t k = 0; k < spec.size(); ++k)
                terminal[k] = st.weight == 0.0 ? next[k] : (1.0 - st.weight) * next[k] + st.weight * st.reward[k];
        }
        const double t0 = j == 0 ? 0.0 : stages[j - 1].time;
        plan.values[j] = march_backward(terminal, speed, cost, st.time, t0, mask);
    }
    plan.value_at_start = sample_or_node(plan.values.front().initial(), x0);

    Point p = x0;
    plan.path.points.push_back(x0);
    plan.path.cumulative_cost.push_back(0.0);
    for (std::size_t j = 0; j + 1 < r; ++j) {
        p = follow_flow(plan.values[j], speed, cost, p, plan.path);
        plan.waypoints.push_back(p);
    }
    if (unit_cost(cost, mask)) {
        const double remaining = stages.back().time - (r > 1 ? stages[r - 2].time : 0.0);
        const ValueSolution from = solve_stationary(speed, cost, {p}, mask);
        const Waypoint w = waypoint_argmin(stages.back().reward, reachable_set(from, remaining));
        const ValueSolution to = solve_stationary(speed, cost, {w.position}, mask);
        append_path(plan.path, trace_trajectory(to, speed, cost, p));
        plan.waypoints.push_back(w.position);
    } else {
        plan.waypoints.push_back(follow_flow(plan.values.back(), speed, cost, p, plan.path));
    }
    return plan;
}

std::vector<Stage> discrete_time_stages(const ScalarField& q, const DiscreteTimes& model) {
    validate_time_model(model);
    std::vector<Stage> stages;
    double tail = 0.0;
    std::vector<double> weights(model.probs.size());
    for (std::size_t j = model.probs.size(); j-- > 0;) {
        tail += model.probs[j];
        weights[j] = j + 1 == model.probs.size() ? 1.0 : model.probs[j] / tail;
    }
    for (std::size_t j = 0; j < model.times.size(); ++j) stages.push_back({model.times[j], weights[j], q});
    return stages;
}

ChainPlan plan_discrete_T(const ScalarField& q, const DiscreteTimes& model, const ScalarField& speed,
                          const ScalarField& cost, const DomainMask& mask, Point x0) {
    return plan_stage_chain(discrete_time_stages(q, model), speed, cost, mask, x0);
}

} // namespace ucplan
