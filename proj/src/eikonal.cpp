#include "ucplan/eikonal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <utility>

namespace ucplan {

double local_update(const Neighbors& nb, double f, double K, double h) {
    double a = std::min(nb[0], nb[1]);
    double b = std::min(nb[2], nb[3]);
    if (a > b) std::swap(a, b);
    if (!std::isfinite(a)) return kInf;
    const double r = K * h / f;
    if (!std::isfinite(b) || b - a >= r) return a + r;
    const double d = a - b;
    return 0.5 * (a + b + std::sqrt(2.0 * r * r - d * d));
}

namespace {

void check_inputs(const ScalarField& speed, const ScalarField& cost, const DomainMask& mask) {
    if (!(speed.spec() == mask.spec()) || !(cost.spec() == mask.spec()))
        throw InvalidInput("speed, cost and mask must share one grid");
    for (std::size_t k = 0; k < mask.spec().size(); ++k) {
        if (!mask.inside(k)) continue;
        if (!(speed[k] > 0.0) || !std::isfinite(speed[k]) || !(cost[k] > 0.0) || !std::isfinite(cost[k])) {
            const auto n = mask.spec().index_of(k);
            throw InvalidInput("speed and cost must be positive and finite at inside node (" + std::to_string(n.i) +
                               "," + std::to_string(n.j) + ")");
        }
    }
}

using HeapEntry = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

constexpr int kDi[4] = {-1, 1, 0, 0};
constexpr int kDj[4] = {0, 0, -1, 1};

} // namespace

double stationary_residual(const ScalarField& u, const ScalarField& speed, const ScalarField& cost, int i, int j) {
    const double g = upwind_gradient_magnitude(u, i, j);
    const double K = cost.at(i, j);
    return std::abs(speed.at(i, j) * g - K) / K;
}

std::vector<std::pair<std::size_t, double>> source_ball(const ScalarField& speed, const ScalarField& cost,
                                                       const std::vector<std::size_t>& sources, const DomainMask& mask,
                                                       double radius) {
    const GridSpec& spec = mask.spec();
    std::vector<double> best(spec.size(), kInf);
    const int reach = static_cast<int>(std::floor(radius / spec.h()));
    if (reach < 1) return {};
    for (std::size_t s : sources) {
        const NodeIndex c = spec.index_of(s);
        const Point ps = spec.node(c);
        for (int j = c.j - reach; j <= c.j + reach; ++j) {
            for (int i = c.i - reach; i <= c.i + reach; ++i) {
                if (!spec.in_range(i, j) || (i == c.i && j == c.j)) continue;
                const std::size_t k = spec.linear(i, j);
                const Point p = spec.node(i, j);
                const double d = distance(p, ps);
                if (d > radius || !mask.inside(k)) continue;
                // The straight segment must stay on inside nodes.
                bool clear = true;
                for (int t = 1; t < 2 * reach && clear; ++t) {
                    const double a = static_cast<double>(t) / (2 * reach);
                    clear = mask.inside(spec.nearest({ps.x + a * (p.x - ps.x), ps.y + a * (p.y - ps.y)}));
                }
                if (!clear) continue;
                const double v = d * 0.5 * (cost[s] / speed[s] + cost[k] / speed[k]);
                best[k] = std::min(best[k], v);
            }
        }
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = 0; k < spec.size(); ++k)
        if (std::isfinite(best[k]) && std::find(sources.begin(), sources.end(), k) == sources.end())
            out.emplace_back(k, best[k]);
    return out;
}

ValueSolution solve_stationary(const ScalarField& speed, const ScalarField& cost, const std::vector<Point>& sources,
                               const DomainMask& mask, const MarchOptions& options) {
    check_inputs(speed, cost, mask);
    const GridSpec& spec = mask.spec();
    const double h = spec.h();

    ScalarField u(spec, kInf);
    std::vector<unsigned char> accepted(spec.size(), 0);
    std::vector<std::size_t> seeds;
    MinHeap heap;
    for (const Point& s : sources) {
        if (!spec.contains(s)) continue;
        const std::size_t k = spec.linear(spec.nearest(s));
        if (!mask.inside(k) || u[k] == 0.0) continue;
        u[k] = 0.0;
        seeds.push_back(k);
        heap.emplace(0.0, k);
    }
    if (seeds.empty()) throw InvalidInput("no source lies on an inside node");
    std::vector<unsigned char> fixed(spec.size(), 0);
    for (std::size_t k : seeds) fixed[k] = 1;
    const auto ball = source_ball(speed, cost, seeds, mask, options.source_radius);
    for (const auto& [k, v] : ball) {
        u[k] = v;
        fixed[k] = 1;
        heap.emplace(v, k);
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
        if (options.on_accept) options.on_accept(k, value);
        const NodeIndex n = spec.index_of(k);
        for (int d = 0; d < 4; ++d) {
            const int i = n.i + kDi[d];
            const int j = n.j + kDj[d];
            if (!spec.in_range(i, j)) continue;
            const std::size_t kn = spec.linear(i, j);
            if (!mask.inside(kn) || accepted[kn] || fixed[kn]) continue;
            const Neighbors nb{known(i - 1, j), known(i + 1, j), known(i, j - 1), known(i, j + 1)};
            const double cand = local_update(nb, speed[kn], cost[kn], h);
            if (cand < u[kn]) {
                u[kn] = cand;
                heap.emplace(cand, kn);
            }
        }
    }

    double residual = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (!accepted[k] || fixed[k]) continue;
        const NodeIndex n = spec.index_of(k);
        residual = std::max(residual, stationary_residual(u, speed, cost, n.i, n.j));
    }
    std::vector<std::size_t> ball_nodes;
    ball_nodes.reserve(ball.size());
    for (const auto& entry : ball) ball_nodes.push_back(entry.first);
    return ValueSolution{std::move(u), std::move(seeds), std::move(ball_nodes), residual};
}

unsigned planner_threads() {
    if (const char* env = std::getenv("PLANNER_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

template <class Job>
std::vector<ValueSolution> run_parallel(std::size_t count, unsigned threads, Job job) {
    std::vector<std::optional<ValueSolution>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t idx = next++; idx < count; idx = next++) {
            try {
                slots[idx] = job(idx);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads ? threads : planner_threads(), static_cast<unsigned>(count)));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<ValueSolution> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace

std::vector<ValueSolution> solve_each(const ScalarField& speed, const ScalarField& cost,
                                      const std::vector<Point>& sources, const DomainMask& mask, unsigned threads) {
    return run_parallel(sources.size(), threads,
                        [&](std::size_t i) { return solve_stationary(speed, cost, {sources[i]}, mask); });
}

std::vector<ValueSolution> solve_each(const ScalarField& speed, const std::vector<ScalarField>& costs, Point source,
                                      const DomainMask& mask, unsigned threads) {
    return run_parallel(costs.size(), threads,
                        [&](std::size_t i) { return solve_stationary(speed, costs[i], {source}, mask); });
}

DomainMask reachable_set(const ScalarField& u_from_start, double T) {
    if (!(T > 0.0)) throw InvalidInput("reachable-set horizon T must be positive");
    std::vector<unsigned char> inside(u_from_start.spec().size());
    for (std::size_t k = 0; k < inside.size(); ++k) inside[k] = u_from_start[k] <= T ? 1 : 0;
    return DomainMask(u_from_start.spec(), std::move(inside));
}

DomainMask reachable_set(const ValueSolution& from_start, double T) { return reachable_set(from_start.u, T); }

namespace {

double sample_or_inf(const ScalarField& f, Point p) {
    return f.spec().contains(p) ? bilinear_sample(f, p) : kInf;
}

double cost_rate(const ScalarField& speed, const ScalarField& cost, Point p) {
    double r = bilinear_sample(cost, p) / bilinear_sample(speed, p);
    if (!std::isfinite(r)) {
        const NodeIndex n = speed.spec().nearest(p);
        r = cost.at(n) / speed.at(n);
    }
    if (!std::isfinite(r) || r < 0.0) throw InvalidInput("cost/speed ratio is not finite along the path");
    return r;
}

Point unit(Point v) {
    const double n = std::hypot(v.x, v.y);
    return {v.x / n, v.y / n};
}

constexpr double kFlatGradient = 1e-12;

} // namespace

Trajectory descend(const ScalarField& value, const StopRule& stop, const ScalarField& speed, const ScalarField& cost,
                   Point start, double step) {
    const GridSpec& spec = value.spec();
    const double h = spec.h();
    if (!(step > 0.0) || step > h * (1.0 + 1e-12)) throw InvalidInput("descent step must lie in (0, h]");
    if (!spec.contains(start)) throw InvalidInput("descent start outside the grid");
    double current = bilinear_sample(value, start);
    if (!std::isfinite(current)) {
        current = value.at(spec.nearest(start));
        if (!std::isfinite(current)) throw InvalidInput("value at descent start is not finite");
    }

    Trajectory traj;
    traj.points.push_back(start);
    traj.cumulative_cost.push_back(0.0);
    auto append = [&](Point q) {
        const Point a = traj.points.back();
        const Point mid{0.5 * (a.x + q.x), 0.5 * (a.y + q.y)};
        traj.cumulative_cost.push_back(traj.cumulative_cost.back() + distance(a, q) * cost_rate(speed, cost, mid));
        traj.points.push_back(q);
    };

    auto acceptable = [&](Point q, double below) {
        const double v = sample_or_inf(value, q);
        return std::isfinite(v) && v < below;
    };

    auto try_step = [&](Point p) -> std::optional<Point> {
        const Point g = interpolated_gradient(value, p);
        if (std::hypot(g.x, g.y) < kFlatGradient) return std::nullopt;
        Point d = unit({-g.x, -g.y});
        const Point mid{p.x + 0.5 * step * d.x, p.y + 0.5 * step * d.y};
        if (std::isfinite(sample_or_inf(value, mid))) {
            const Point gm = interpolated_gradient(value, mid);
            if (std::hypot(gm.x, gm.y) >= kFlatGradient) d = unit({-gm.x, -gm.y});
        }
        for (double len = step; len > step / 16.0; len *= 0.5) {
            const Point q{p.x + len * d.x, p.y + len * d.y};
            if (acceptable(q, current)) return q;
        }
        // Slide along whichever axis still descends.
        std::optional<Point> best;
        double best_v = current;
        for (int axis = 0; axis < 2; ++axis) {
            const double comp = axis == 0 ? d.x : d.y;
            if (comp == 0.0) continue;
            const double s = comp > 0 ? step : -step;
            const Point q = axis == 0 ? Point{p.x + s, p.y} : Point{p.x, p.y + s};
            const double v = sample_or_inf(value, q);
            if (std::isfinite(v) && v < best_v) {
                best_v = v;
                best = q;
            }
        }
        return best;
    };

    const std::size_t max_steps = static_cast<std::size_t>(40.0 * (spec.nx() + spec.ny()) * h / step) + 100;
    for (std::size_t iter = 0; !stop(traj.points.back()); ++iter) {
        const Point p = traj.points.back();
        if (iter > max_steps)
            throw Stagnation("descent did not reach the stop set from (" + format_number(start.x) + "," +
                             format_number(start.y) + ")");
        if (auto q = try_step(p)) {
            append(*q);
            current = bilinear_sample(value, *q);
            continue;
        }
        // Hop on the lattice: nearest node, then its lowest neighbor.
        const NodeIndex n = spec.nearest(p);
        const Point pn = spec.node(n);
        const double vn = value.at(n);
        if (std::isfinite(vn) && vn < current && distance(p, pn) > 0.0) {
            append(pn);
            current = vn;
            continue;
        }
        std::optional<NodeIndex> best;
        double best_v = std::min(current, vn);
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                if (!di && !dj) continue;
                const int i = n.i + di;
                const int j = n.j + dj;
                if (!spec.in_range(i, j)) continue;
                const double v = value.at(i, j);
                if (std::isfinite(v) && v < best_v) {
                    best_v = v;
                    best = NodeIndex{i, j};
                }
            }
        }
        if (!best)
            throw Stagnation("descent stagnated at (" + format_number(p.x) + "," + format_number(p.y) + ")");
        if (distance(p, pn) > 0.0) append(pn);
        append(spec.node(*best));
        current = best_v;
    }
    return traj;
}

Trajectory trace_trajectory(const ValueSolution& solution, const ScalarField& speed, const ScalarField& cost,
                            Point start, double step) {
    const GridSpec& spec = solution.u.spec();
    if (step <= 0.0) step = 0.5 * spec.h();
    double threshold = kInf;
    for (std::size_t k : solution.sources) threshold = std::min(threshold, cost[k] * spec.h() / speed[k]);
    auto nearest_source = [&](Point p) {
        std::size_t best = solution.sources.front();
        for (std::size_t k : solution.sources)
            if (distance(spec.node(k), p) < distance(spec.node(best), p)) best = k;
        return best;
    };
    const StopRule stop = [&](Point p) {
        const std::size_t k = spec.linear(spec.nearest(p));
        if (std::find(solution.sources.begin(), solution.sources.end(), k) != solution.sources.end()) return true;
        const double v = bilinear_sample(solution.u, p);
        return std::isfinite(v) && v <= threshold;
    };
    Trajectory traj = descend(solution.u, stop, speed, cost, start, step);
    const Point last = traj.points.back();
    const Point src = spec.node(nearest_source(last));
    if (distance(last, src) > 0.0) {
        const Point mid{0.5 * (last.x + src.x), 0.5 * (last.y + src.y)};
        const double rate = cost_rate(speed, cost, mid);
        traj.cumulative_cost.push_back(traj.cumulative_cost.back() + distance(last, src) * rate);
        traj.points.push_back(src);
    }
    return traj;
}

} // namespace ucplan
