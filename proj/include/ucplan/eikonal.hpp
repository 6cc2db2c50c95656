#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "ucplan/grid.hpp"

namespace ucplan {

/// Converged stationary value function u with u = 0 on the sources.
struct ValueSolution {
    ScalarField u;
    std::vector<std::size_t> sources;
    /// Nodes initialized around the sources (see source_ball).
    std::vector<std::size_t> source_ball;
    /// Largest relative residual |f |grad u| - K| / K over marched nodes.
    double max_residual = 0.0;
};

struct Trajectory {
    std::vector<Point> points;
    std::vector<double> cumulative_cost;

    double total_cost() const { return cumulative_cost.empty() ? 0.0 : cumulative_cost.back(); }
};

/// Neighbor values around a node in the order left, right, down, up.
using Neighbors = std::array<double, 4>;

/// Smallest v with ((v-a)+)^2 + ((v-b)+)^2 = (K h / f)^2 where a, b are the
/// smaller neighbor per axis. Falls back to the one-sided update when the
/// two-sided root would not exceed both neighbors. +inf if all neighbors are.
double local_update(const Neighbors& nb, double f, double K, double h);

/// Nodes within this distance (domain units) of a source start from the
/// straight-line cost |x - s| * mean(K/f) instead of being marched. A fixed
/// physical radius removes the h log(1/h) point-source error.
inline constexpr double kDefaultSourceRadius = 0.02;

struct MarchOptions {
    double source_radius = kDefaultSourceRadius;
    /// Called with (linear index, value) in acceptance order.
    std::function<void(std::size_t, double)> on_accept;
};

/// Fixed values around the source nodes: every inside node within `radius`
/// whose straight segment to a source stays inside, valued by the trapezoid
/// rule on K/f along that segment. Source nodes themselves are excluded.
std::vector<std::pair<std::size_t, double>> source_ball(const ScalarField& speed, const ScalarField& cost,
                                                       const std::vector<std::size_t>& sources,
                                                       const DomainMask& mask, double radius);

/// Fast Marching solve of |grad u| f = K with u = 0 at the sources (snapped
/// to their nearest node) and u = +inf outside the mask.
/// Throws InvalidInput for nonpositive speed/cost on inside nodes or if no
/// source lands inside the mask.
ValueSolution solve_stationary(const ScalarField& speed, const ScalarField& cost, const std::vector<Point>& sources,
                               const DomainMask& mask, const MarchOptions& options = {});

/// Independent solves for each source, run on up to `threads` workers
/// (0 picks PLANNER_THREADS or the hardware concurrency).
std::vector<ValueSolution> solve_each(const ScalarField& speed, const ScalarField& cost,
                                      const std::vector<Point>& sources, const DomainMask& mask,
                                      unsigned threads = 0);
std::vector<ValueSolution> solve_each(const ScalarField& speed, const std::vector<ScalarField>& costs,
                                      Point source, const DomainMask& mask, unsigned threads = 0);

/// Worker count: PLANNER_THREADS if set and positive, else hardware concurrency.
unsigned planner_threads();

/// Residual of the discrete equation at a node, relative to K.
double stationary_residual(const ScalarField& u, const ScalarField& speed, const ScalarField& cost, int i, int j);

/// Nodes with u <= T (time units, i.e. u solved with K = 1).
DomainMask reachable_set(const ValueSolution& from_start, double T);
DomainMask reachable_set(const ScalarField& u_from_start, double T);

/// Stopping rule for descent: returns true once p has arrived.
using StopRule = std::function<bool(Point)>;

/// Midpoint-rule descent along the interpolated -grad value. Steps that
/// would land in a cell with a +inf corner are shortened or slid along an
/// axis; as a last resort the path hops to the lowest neighboring node.
/// cumulative_cost integrates cost/speed along the path.
/// Throws Stagnation when no descent direction exists away from the stop set.
Trajectory descend(const ScalarField& value, const StopRule& stop, const ScalarField& speed, const ScalarField& cost,
                   Point start, double step);

/// Descent on a stationary solution down to its nearest source. Default
/// step is h/2; arrival once u <= K h / f evaluated at the source.
Trajectory trace_trajectory(const ValueSolution& solution, const ScalarField& speed, const ScalarField& cost,
                            Point start, double step = 0.0);

} // namespace ucplan
