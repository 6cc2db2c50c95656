#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "ucplan/eikonal.hpp"
#include "ucplan/robust.hpp"

namespace ucplan {

/// Slices of a time-dependent value function, latest time first.
struct TimeSlicedValue {
    GridSpec spec;
    std::vector<double> times;
    std::vector<ScalarField> slices;

    const ScalarField& terminal() const { return slices.front(); }
    const ScalarField& initial() const { return slices.back(); }
};

struct FixedTime {
    double T = 0.0;
};
struct DiscreteTimes {
    std::vector<double> times;
    std::vector<double> probs;
};
struct ExponentialTime {
    double lambda = 0.0;
};
using CertaintyTimeModel = std::variant<FixedTime, DiscreteTimes, ExponentialTime>;

/// Throws InvalidInput when the model violates its invariants.
void validate_time_model(const CertaintyTimeModel& model);

/// Time step factor: dt = kCflFactor * h / max f over inside nodes.
inline constexpr double kCflFactor = 0.4;

/// Explicit upwind scheme U^{n-1} = U^n - dt (f |grad U^n| - K) from t_end
/// back to t_start. dt is shrunk so the interval is an integer number of
/// steps. Outside nodes stay +inf; so do inside nodes that start at +inf.
TimeSlicedValue march_backward(const ScalarField& terminal, const ScalarField& speed, const ScalarField& cost,
                               double t_end, double t_start, const DomainMask& mask);

struct FixedTPlan {
    Waypoint waypoint;
    double q_at_waypoint = 0.0;
    /// T + q(waypoint).
    double expected_total = 0.0;
    /// Value at x0 of q marched back over [0, T], when requested.
    std::optional<double> marched_total;
};

/// Waypoint = argmin of q over nodes with u_from_start <= T.
FixedTPlan plan_fixed_T(const ScalarField& q, const ScalarField& u_from_start, double T);

/// Same, plus the marched value at x0 for cross-checking.
FixedTPlan plan_fixed_T(const ScalarField& q, const ScalarField& u_from_start, double T, const ScalarField& speed,
                        const ScalarField& cost, const DomainMask& mask, Point x0);

/// One stage of a terminal-condition chain: at `time`, the value becomes
/// (1 - weight) * v_next(time) + weight * reward. The last stage must have
/// weight 1.
struct Stage {
    double time = 0.0;
    double weight = 1.0;
    ScalarField reward;
};

struct ChainPlan {
    /// values[j] covers [T_{j-1}, T_j] with T_0 = 0.
    std::vector<TimeSlicedValue> values;
    /// Vehicle position at each stage time.
    std::vector<Point> waypoints;
    /// Path from x0 through every waypoint.
    Trajectory path;
    double value_at_start = 0.0;
};

/// Marches the stages from the last back to t = 0 and follows the optimal
/// flow forward from x0. With K identically 1 the final waypoint is the
/// argmin of the last reward over the set reachable from the previous
/// waypoint in the remaining time; otherwise it is the flow's position.
ChainPlan plan_stage_chain(const std::vector<Stage>& stages, const ScalarField& speed, const ScalarField& cost,
                           const DomainMask& mask, Point x0);

/// Stages for a discrete certainty time: reward q everywhere, weights
/// p_j / sum_{l >= j} p_l.
std::vector<Stage> discrete_time_stages(const ScalarField& q, const DiscreteTimes& model);

ChainPlan plan_discrete_T(const ScalarField& q, const DiscreteTimes& model, const ScalarField& speed,
                          const ScalarField& cost, const DomainMask& mask, Point x0);

/// Forward integration of the time-dependent optimal flow: from `start` at
/// value.times.back() to value.times.front(), moving at speed f along
/// -grad v. Appends to `path`, returns the final position.
Point follow_flow(const TimeSlicedValue& value, const ScalarField& speed, const ScalarField& cost, Point start,
                  Trajectory& path);

} // namespace ucplan
