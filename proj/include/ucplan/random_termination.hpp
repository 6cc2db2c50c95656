#pragma once

#include <vector>

#include "ucplan/eikonal.hpp"
#include "ucplan/robust.hpp"

namespace ucplan {

/// Absolute tolerance on |u - q| marking a node as motionless.
inline constexpr double kMotionlessTol = 1e-9;

struct RandomTerminationSolution {
    ScalarField u;
    DomainMask motionless;
    double lambda = 0.0;
    /// Largest |lambda (u - q) + f |grad u| - K| / max(1, K) over non-motionless inside nodes.
    double max_residual = 0.0;
};

/// Candidate from lambda (v - q) + f sqrt(((v-a)+)^2 + ((v-b)+)^2) / h = K,
/// with a, b the smaller neighbor per axis (+inf when unavailable). Not
/// capped at q.
double rt_local_update(const Neighbors& nb, double q, double f, double K, double lambda, double h);

/// Marching solve of the randomly terminated problem with the cap u <= q.
/// Every inside node starts at q; accepted values are final.
/// Throws InvalidInput for lambda <= 0, nonpositive speed, negative cost or
/// q that is not finite inside the mask.
RandomTerminationSolution solve_random_termination(const ScalarField& q, const ScalarField& speed, double lambda,
                                                   const DomainMask& mask, const ScalarField& cost);

/// Same solve on the mask intersected with {qbar <= C}. Throws Infeasible
/// if x0 falls outside that set.
RandomTerminationSolution solve_random_termination_constrained(const ScalarField& q, const ScalarField& qbar,
                                                               const ScalarField& speed, double lambda, double C,
                                                               const DomainMask& mask, const ScalarField& cost,
                                                               Point x0);

struct ExponentialPlan {
    Trajectory path;
    /// Motionless node where the path ends.
    Waypoint terminal;
    double value_at_start = 0.0;
    /// max of qbar sampled along the path.
    double worst_along_path = 0.0;
};

/// Descends u from x0 until the path reaches a motionless node.
ExponentialPlan trace_exponential(const RandomTerminationSolution& solution, const ScalarField& qbar,
                                  const ScalarField& speed, const ScalarField& cost, Point x0);

/// One (worst along path, u(x0)) pair per feasible C, dominated pairs removed.
/// The node of each entry is the path's terminal node.
ParetoFront exponential_pareto(const ScalarField& q, const ScalarField& qbar, const ScalarField& speed, double lambda,
                               const std::vector<double>& C_values, const DomainMask& mask, const ScalarField& cost,
                               Point x0);

} // namespace ucplan
