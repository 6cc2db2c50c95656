#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ucplan/grid.hpp"

namespace ucplan {

/// Potential targets x_i with prior p_i and their value fields u_i.
struct TargetEnsemble {
    std::vector<Point> targets;
    std::vector<double> probs;
    std::vector<ScalarField> fields;

    std::size_t size() const { return fields.size(); }
    const GridSpec& spec() const { return fields.front().spec(); }
};

/// Throws InvalidInput unless every entry is positive and the sum is 1
/// (to 1e-9).
void validate_probabilities(std::span<const double> probs, const char* what = "probabilities");

/// Throws InvalidInput on shape mismatches or an invalid prior.
void validate_ensemble(const TargetEnsemble& ensemble);

struct Waypoint {
    std::size_t node = 0;
    Point position;
};

/// q = sum p_i u_i; +inf wherever any u_i is +inf.
ScalarField expected_field(const TargetEnsemble& ensemble);
ScalarField expected_field(std::span<const ScalarField> fields, std::span<const double> probs);

/// Pointwise max of the u_i.
ScalarField worst_field(const TargetEnsemble& ensemble);

/// Certainty equivalent log(sum p_i exp(beta u_i)) / beta, evaluated in a
/// shifted form so neither tiny nor huge beta loses precision. The result is
/// clamped into [q, max u_i], where it lies mathematically.
ScalarField risk_sensitive_field(const TargetEnsemble& ensemble, double beta);

/// Minimizer of field over the mask; ties go to the lowest linear index.
/// Throws Infeasible if the field is +inf on every masked node.
Waypoint waypoint_argmin(const ScalarField& field, const DomainMask& reachable);

/// argmin of q over reachable nodes with qbar <= C. Infeasible if none.
Waypoint hard_constrained_waypoint(const ScalarField& q, const ScalarField& qbar, const DomainMask& reachable,
                                   double C);

struct ParetoEntry {
    double worst = 0.0;
    double avg = 0.0;
    std::size_t node = 0;
};

/// Non-dominated (worst, avg) pairs sorted by worst ascending with avg
/// strictly decreasing.
struct ParetoFront {
    std::vector<ParetoEntry> entries;
};

/// Drops dominated entries; among exact duplicates the lowest node wins.
ParetoFront pareto_filter(std::vector<ParetoEntry> candidates);

/// Front of (qbar, q) over every reachable node with finite values.
ParetoFront pareto_front(const ScalarField& q, const ScalarField& qbar, const DomainMask& reachable);

/// r(x) = sum p_i [u_i(x) > C] on reachable nodes, +inf elsewhere.
ScalarField risk_field(const TargetEnsemble& ensemble, double C, const DomainMask& reachable);

struct HullVertex {
    double risk = 0.0;
    double value = 0.0;
    std::size_t node = 0;
};

/// Lower-left boundary of the convex hull of the (r, q) cloud, from the
/// min-risk point (lowest q among those) to the min-q point (lowest r among
/// those). Slopes are strictly increasing and nonpositive.
struct HullChain {
    std::vector<HullVertex> vertices;
};

/// Groups reachable nodes by the subset of targets missing the deadline C,
/// keeps the best q per distinct risk level and runs a monotone chain over
/// the risk-sorted group minima. Risk levels are produced pre-sorted by a
/// merge over subset sums when m <= 20.
HullChain risk_hull(const TargetEnsemble& ensemble, const ScalarField& q, const DomainMask& reachable, double C);

/// Monotone-chain lower hull of arbitrary (risk, value) points, truncated at
/// the lowest-value point. Exposed for tests.
HullChain lower_left_hull(std::vector<HullVertex> points);

struct PolicyAtom {
    Waypoint waypoint;
    double probability = 0.0;
};

/// Mixed strategy over waypoints.
struct WaypointPolicy {
    std::vector<PolicyAtom> atoms;
    double objective = 0.0;
    double risk = 0.0;
};

/// Reads the optimal mixed strategy for risk level epsilon off the chain.
/// Infeasible if epsilon is below the chain's minimal risk.
WaypointPolicy policy_from_hull(const HullChain& chain, double epsilon, const GridSpec& spec);

/// Minimize E[q] over mixed waypoint strategies subject to E[r] <= epsilon.
WaypointPolicy chance_constrained_policy(const TargetEnsemble& ensemble, const ScalarField& q,
                                         const DomainMask& reachable, double C, double epsilon);

/// Total variation distance 1/2 ||p - p'||_1. Throws on length mismatch.
double tv_distance(std::span<const double> p, std::span<const double> p_other);

/// Maximizer of sum p~_i values_i over the TV ball of radius delta around
/// probs: mass moves from the cheapest targets onto the costliest one
/// (ties by original index). Output is in the original target order.
std::vector<double> dr_worst_distribution(std::span<const double> probs, std::span<const double> values, double delta);

/// Node-wise max over the TV ball of the expected cost.
ScalarField dr_field(const TargetEnsemble& ensemble, double delta);

/// One point mass of a fine target cloud, assigned to a coarse cell.
struct FineTarget {
    Point location;
    double weight = 0.0;
    std::size_t cell = 0;
};

struct CoarseningReport {
    double max_gap = 0.0;             ///< max |xi - q| over reachable nodes
    double gap_bound = 0.0;           ///< cell_size / speed_floor + slack
    double suboptimality = 0.0;       ///< xi(s) - xi(s_mu)
    double suboptimality_bound = 0.0; ///< 2 cell_size / speed_floor + slack
    double slack = 0.0;
    Waypoint coarse_waypoint;
    Waypoint fine_waypoint;

    bool within_bounds() const { return max_gap <= gap_bound && suboptimality <= suboptimality_bound; }
};

/// Compares the fine expected field xi = sum w_y u(.; y) against the coarse
/// q on the reachable set. fine_fields[k] is the value field of fine[k].
/// cell_size bounds the path length from each fine target to its cell's
/// representative. Throws InvalidInput for unassigned or distant fine
/// targets and for cell weights that disagree with the coarse prior.
CoarseningReport coarsening_check(const std::vector<FineTarget>& fine, std::span<const ScalarField> fine_fields,
                                  const TargetEnsemble& coarse, const DomainMask& reachable, double speed_floor,
                                  double cell_size);

} // namespace ucplan
