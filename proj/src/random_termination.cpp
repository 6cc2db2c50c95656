#include "ucplan/random_termination.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <utility>

namespace ucplan {

namespace {

using HeapEntry = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

constexpr int kDi[4] = {-1, 1, 0, 0};
constexpr int kDj[4] = {0, 0, -1, 1};

double two_sided_root(double a, double b, double c, double w, double lambda) {
    // Root of (v-a)^2 + (v-b)^2 = c^2 (w - lambda v)^2 on [b, w/lambda]. The
    // left side grows and the right side shrinks there, so it is unique.
    // Bisection keeps full precision even when the quadratic degenerates.
    const double hi = w / lambda;
    auto g = [&](double v) {
        const double r = w - lambda * v;
        return (v - a) * (v - a) + (v - b) * (v - b) - c * c * r * r;
    };
    double lo = b;
    double up = hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + up);
        if (mid <= lo || mid >= up) break;
        (g(mid) < 0.0 ? lo : up) = mid;
    }
    return 0.5 * (lo + up);
}

double rt_residual(const ScalarField& u, const ScalarField& q, const ScalarField& speed, const ScalarField& cost,
                   double lambda, int i, int j) {
    const double K = cost.at(i, j);
    const double r = lambda * (u.at(i, j) - q.at(i, j)) + speed.at(i, j) * upwind_gradient_magnitude(u, i, j) - K;
    return std::abs(r) / std::max(1.0, K);
}

} // namespace

double rt_local_update(const Neighbors& nb, double q, double f, double K, double lambda, double h) {
    double a = std::min(nb[0], nb[1]);
    double b = std::min(nb[2], nb[3]);
    if (a > b) std::swap(a, b);
    const double w = K + lambda * q;
    const double v0 = w / lambda;
    if (!std::isfinite(a) || v0 <= a) return v0;
    const double c = h / f;
    const double v1 = (a + w * c) / (1.0 + lambda * c);
    if (v1 <= b) return v1;
    return two_sided_root(a, b, c, w, lambda);
}

RandomTerminationSolution solve_random_termination(const ScalarField& q, const ScalarField& speed, double lambda,
                                                   const DomainMask& mask, const ScalarField& cost) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("rate lambda must be positive");
    const GridSpec& spec = mask.spec();
    if (!(q.spec() == spec) || !(speed.spec() == spec) || !(cost.spec() == spec))
        throw InvalidInput("q, speed, cost and mask must share one grid");
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (!mask.inside(k)) continue;
        if (!std::isfinite(q[k])) throw InvalidInput("q must be finite on inside nodes");
        if (!(speed[k] > 0.0) || !std::isfinite(speed[k])) throw InvalidInput("speed must be positive inside");
        if (!(cost[k] >= 0.0) || !std::isfinite(cost[k])) throw InvalidInput("cost must be nonnegative inside");
    }
    const double h = spec.h();

    ScalarField u(spec, kInf);
    std::vector<unsigned char> accepted(spec.size(), 0);
    MinHeap heap;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (!mask.inside(k)) continue;
        u[k] = q[k];
        heap.emplace(q[k], k);
    }
    auto known = [&](int i, int j) {
        if (!spec.in_range(i, j)) return kInf;
        const std::size_t k = spec.linear(i, j);
        return accepted[k] ? u[k] : kInf;
    };
    while (!heap.empty()) {
        const auto [value, k] = heap.top();
        heap.pop();
        if (accepted[k] || value != u[k]) continue;
        accepted[k] = 1;
        const NodeIndex n = spec.index_of(k);
        for (int d = 0; d < 4; ++d) {
            const int i = n.i + kDi[d];
            const int j = n.j + kDj[d];
            if (!spec.in_range(i, j)) continue;
            const std::size_t kn = spec.linear(i, j);
            if (!mask.inside(kn) || accepted[kn]) continue;
            const Neighbors nb{known(i - 1, j), known(i + 1, j), known(i, j - 1), known(i, j + 1)};
            const double cand = std::min(q[kn], rt_local_update(nb, q[kn], speed[kn], cost[kn], lambda, h));
            if (cand < u[kn]) {
                u[kn] = cand;
                heap.emplace(cand, kn);
            }
        }
    }

    std::vector<unsigned char> still(spec.size(), 0);
    double residual = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (!mask.inside(k)) continue;
        if (std::abs(u[k] - q[k]) <= kMotionlessTol) {
            still[k] = 1;
            continue;
        }
        const NodeIndex n = spec.index_of(k);
        residual = std::max(residual, rt_residual(u, q, speed, cost, lambda, n.i, n.j));
    }
    return {std::move(u), DomainMask(spec, std::move(still)), lambda, residual};
}

RandomTerminationSolution solve_random_termination_constrained(const ScalarField& q, const ScalarField& qbar,
                                                               const ScalarField& speed, double lambda, double C,
                                                               const DomainMask& mask, const ScalarField& cost,
                                                               Point x0) {
    if (std::isnan(C)) throw InvalidInput("constraint level C is NaN");
    const GridSpec& spec = mask.spec();
    if (!spec.contains(x0)) throw InvalidInput("start point lies outside the grid");
    const std::size_t start = spec.linear(spec.nearest(x0));
    if (!mask.inside(start) || !(qbar[start] <= C))
        throw Infeasible("start point violates the worst-case constraint qbar <= " + format_number(C));
    const DomainMask restricted = mask.restrict_to([&](std::size_t k) { return qbar[k] <= C; });
    return solve_random_termination(q, speed, lambda, restricted, cost);
}

ExponentialPlan trace_exponential(const RandomTerminationSolution& solution, const ScalarField& qbar,
                                  const ScalarField& speed, const ScalarField& cost, Point x0) {
    const GridSpec& spec = solution.u.spec();
    const StopRule stop = [&](Point p) { return solution.motionless.inside(spec.nearest(p)); };
    ExponentialPlan plan;
    plan.path = descend(solution.u, stop, speed, cost, x0, 0.5 * spec.h());
    const NodeIndex end = spec.nearest(plan.path.points.back());
    plan.terminal = {spec.linear(end), spec.node(end)};
    if (distance(plan.path.points.back(), plan.terminal.position) > 0.0) {
        const Point last = plan.path.points.back();
        const double rate = cost.at(end) / speed.at(end);
        plan.path.points.push_back(plan.terminal.position);
        plan.path.cumulative_cost.push_back(plan.path.total_cost() + distance(last, plan.terminal.position) * rate);
    }
    const double v = bilinear_sample(solution.u, x0);
    plan.value_at_start = std::isfinite(v) ? v : solution.u.at(spec.nearest(x0));
    plan.worst_along_path = 0.0;
    for (const Point& p : plan.path.points) {
        double w = bilinear_sample(qbar, p);
        if (!std::isfinite(w)) w = qbar.at(spec.nearest(p));
        plan.worst_along_path = std::max(plan.worst_along_path, w);
    }
    return plan;
}

ParetoFront exponential_pareto(const ScalarField& q, const ScalarField& qbar, const ScalarField& speed, double lambda,
                               const std::vector<double>& C_values, const DomainMask& mask, const ScalarField& cost,
                               Point x0) {
    std::vector<ParetoEntry> entries;
    for (double C : C_values) {
        if (!std::isfinite(C)) throw InvalidInput("C values must be finite");
        try {
            const auto sol = solve_random_termination_constrained(q, qbar, speed, lambda, C, mask, cost, x0);
            const auto plan = trace_exponential(sol, qbar, speed, cost, x0);
            entries.push_back({plan.worst_along_path, plan.value_at_start, plan.terminal.node});
        } catch (const Infeasible&) {
        }
    }
    return pareto_filter(std::move(entries));
}

} // namespace ucplan
