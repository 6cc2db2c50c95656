#include "ucplan/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ucplan {

void validate_probabilities(std::span<const double> probs, const char* what) {
    if (probs.empty()) throw InvalidInput(std::string(what) + " must not be empty");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput(std::string(what) + " must be strictly positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput(std::string(what) + " must sum to 1");
}

void validate_ensemble(const TargetEnsemble& ensemble) {
    if (ensemble.fields.empty()) throw InvalidInput("target ensemble is empty");
    if (ensemble.probs.size() != ensemble.fields.size() ||
        (!ensemble.targets.empty() && ensemble.targets.size() != ensemble.fields.size()))
        throw InvalidInput("target ensemble lengths differ");
    for (const auto& f : ensemble.fields)
        if (!(f.spec() == ensemble.fields.front().spec())) throw InvalidInput("ensemble fields use different grids");
    validate_probabilities(ensemble.probs, "target probabilities");
}

namespace {

template <class NodeFn>
ScalarField map_nodes(const TargetEnsemble& e, NodeFn fn) {
    validate_ensemble(e);
    const GridSpec& spec = e.spec();
    ScalarField out(spec, 0.0);
    std::vector<double> vals(e.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        bool finite = true;
        for (std::size_t i = 0; i < e.size(); ++i) {
            vals[i] = e.fields[i][k];
            finite = finite && std::isfinite(vals[i]);
        }
        out[k] = finite ? fn(vals) : kInf;
    }
    return out;
}

} // namespace

ScalarField expected_field(std::span<const ScalarField> fields, std::span<const double> probs) {
    if (fields.empty() || fields.size() != probs.size()) throw InvalidInput("expected_field: length mismatch");
    const GridSpec& spec = fields.front().spec();
    ScalarField out(spec, 0.0);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const double v = fields[i][k];
            if (!std::isfinite(v)) {
                acc = kInf;
                break;
            }
            acc += probs[i] * v;
        }
        out[k] = acc;
    }
    return out;
}

ScalarField expected_field(const TargetEnsemble& ensemble) {
    validate_ensemble(ensemble);
    return expected_field(ensemble.fields, ensemble.probs);
}

ScalarField worst_field(const TargetEnsemble& ensemble) {
    return map_nodes(ensemble, [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); });
}

ScalarField risk_sensitive_field(const TargetEnsemble& ensemble, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInput("risk sensitivity beta must be positive");
    const auto& p = ensemble.probs;
    return map_nodes(ensemble, [&](const std::vector<double>& u) {
        double mean = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) mean += p[i] * u[i];
        const double top = *std::max_element(u.begin(), u.end());
        double ce;
        if (beta * (top - mean) <= 30.0) {
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += p[i] * std::expm1(beta * (u[i] - mean));
            ce = mean + std::log1p(s) / beta;
        } else {
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += p[i] * std::exp(beta * (u[i] - top));
            ce = top + std::log(s) / beta;
        }
        return std::clamp(ce, mean, top);
    });
}

Waypoint waypoint_argmin(const ScalarField& field, const DomainMask& reachable) {
    if (!(field.spec() == reachable.spec())) throw InvalidInput("field and mask grids differ");
    std::size_t best = field.spec().size();
    double best_v = kInf;
    for (std::size_t k = 0; k < field.spec().size(); ++k) {
        if (reachable.inside(k) && field[k] < best_v) {
            best_v = field[k];
            best = k;
        }
    }
    if (best == field.spec().size()) throw Infeasible("no finite value on the admissible set");
    return {best, field.spec().node(best)};
}

Waypoint hard_constrained_waypoint(const ScalarField& q, const ScalarField& qbar, const DomainMask& reachable,
                                   double C) {
    if (std::isnan(C)) throw InvalidInput("constraint level C is NaN");
    const DomainMask allowed = reachable.restrict_to([&](std::size_t k) { return qbar[k] <= C; });
    return waypoint_argmin(q, allowed);
}

ParetoFront pareto_filter(std::vector<ParetoEntry> candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const ParetoEntry& a, const ParetoEntry& b) {
        if (a.worst != b.worst) return a.worst < b.worst;
        if (a.avg != b.avg) return a.avg < b.avg;
        return a.node < b.node;
    });
    ParetoFront front;
    double best_avg = kInf;
    for (const auto& e : candidates) {
        if (e.avg < best_avg) {
            front.entries.push_back(e);
            best_avg = e.avg;
        }
    }
    return front;
}

ParetoFront pareto_front(const ScalarField& q, const ScalarField& qbar, const DomainMask& reachable) {
    std::vector<ParetoEntry> cands;
    for (std::size_t k = 0; k < q.spec().size(); ++k) {
        if (reachable.inside(k) && std::isfinite(q[k]) && std::isfinite(qbar[k])) cands.push_back({qbar[k], q[k], k});
    }
    return pareto_filter(std::move(cands));
}

namespace {

double subset_risk(std::span<const double> probs, unsigned mask) {
    double r = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (mask & (1u << i)) r += probs[i];
    return r;
}

unsigned miss_mask(const TargetEnsemble& e, std::size_t k, double C) {
    unsigned m = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e.fields[i][k] > C) m |= 1u << i;
    return m;
}

double cross(const HullVertex& o, const HullVertex& a, const HullVertex& b) {
    return (a.risk - o.risk) * (b.value - o.value) - (a.value - o.value) * (b.risk - o.risk);
}

// Subset masks ordered by subset sum, built by repeated merging.
std::vector<unsigned> masks_by_sum(std::span<const double> probs) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
    std::vector<std::pair<double, unsigned>> list{{0.0, 0u}};
    for (std::size_t i : order) {
        std::vector<std::pair<double, unsigned>> shifted;
        shifted.reserve(list.size());
        for (const auto& [s, m] : list) shifted.emplace_back(s + probs[i], m | (1u << i));
        std::vector<std::pair<double, unsigned>> merged(list.size() * 2);
        std::merge(list.begin(), list.end(), shifted.begin(), shifted.end(), merged.begin(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
        list = std::move(merged);
    }
    std::vector<unsigned> out;
    out.reserve(list.size());
    for (const auto& entry : list) out.push_back(entry.second);
    return out;
}

} // namespace

ScalarField risk_field(const TargetEnsemble& ensemble, double C, const DomainMask& reachable) {
    validate_ensemble(ensemble);
    if (!std::isfinite(C)) throw InvalidInput("deadline C must be finite");
    ScalarField r(ensemble.spec(), kInf);
    for (std::size_t k = 0; k < r.spec().size(); ++k) {
        if (!reachable.inside(k)) continue;
        double acc = 0.0;
        for (std::size_t i = 0; i < ensemble.size(); ++i)
            if (ensemble.fields[i][k] > C) acc += ensemble.probs[i];
        r[k] = acc;
    }
    return r;
}

HullChain lower_left_hull(std::vector<HullVertex> points) {
    if (points.empty()) return {};
    std::sort(points.begin(), points.end(), [](const HullVertex& a, const HullVertex& b) {
        if (a.risk != b.risk) return a.risk < b.risk;
        if (a.value != b.value) return a.value < b.value;
        return a.node < b.node;
    });
    // One candidate per risk level: the best value there.
    std::vector<HullVertex> groups;
    for (const auto& p : points)
        if (groups.empty() || p.risk != groups.back().risk) groups.push_back(p);
    // The chain stops at the lowest-value group (lowest risk on ties).
    std::size_t last = 0;
    for (std::size_t g = 1; g < groups.size(); ++g)
        if (groups[g].value < groups[last].value) last = g;
    groups.resize(last + 1);

    HullChain chain;
    for (const auto& p : groups) {
        while (chain.vertices.size() >= 2 &&
               cross(chain.vertices[chain.vertices.size() - 2], chain.vertices.back(), p) <= 0.0)
            chain.vertices.pop_back();
        chain.vertices.push_back(p);
    }
    return chain;
}

HullChain risk_hull(const TargetEnsemble& ensemble, const ScalarField& q, const DomainMask& reachable, double C) {
    validate_ensemble(ensemble);
    if (!std::isfinite(C)) throw InvalidInput("deadline C must be finite");
    const std::size_t m = ensemble.size();
    const GridSpec& spec = q.spec();
    std::vector<HullVertex> points;
    if (m <= 20) {
        const std::size_t groups = std::size_t{1} << m;
        std::vector<double> best(groups, kInf);
        std::vector<std::size_t> node(groups, 0);
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (!reachable.inside(k) || !std::isfinite(q[k])) continue;
            const unsigned g = miss_mask(ensemble, k, C);
            if (q[k] < best[g]) {
                best[g] = q[k];
                node[g] = k;
            }
        }
        for (unsigned g : masks_by_sum(ensemble.probs))
            if (std::isfinite(best[g])) points.push_back({subset_risk(ensemble.probs, g), best[g], node[g]});
    } else {
        for (std::size_t k = 0; k < spec.size(); ++k) {
            if (!reachable.inside(k) || !std::isfinite(q[k])) continue;
            double r = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (ensemble.fields[i][k] > C) r += ensemble.probs[i];
            points.push_back({r, q[k], k});
        }
    }
    if (points.empty()) throw Infeasible("reachable set has no finite expected value");
    return lower_left_hull(std::move(points));
}

WaypointPolicy policy_from_hull(const HullChain& chain, double epsilon, const GridSpec& spec) {
    const auto& v = chain.vertices;
    if (v.empty()) throw Infeasible("empty hull chain");
    if (epsilon < v.front().risk)
        throw Infeasible("epsilon " + format_number(epsilon) + " is below the minimal attainable risk " +
                         format_number(v.front().risk));
    auto single = [&](const HullVertex& h) {
        return WaypointPolicy{{PolicyAtom{{h.node, spec.node(h.node)}, 1.0}}, h.value, h.risk};
    };
    if (epsilon >= v.back().risk) return single(v.back());
    // First vertex with risk > epsilon; its predecessor has risk <= epsilon.
    const auto it = std::upper_bound(v.begin(), v.end(), epsilon,
                                     [](double e, const HullVertex& h) { return e < h.risk; });
    const HullVertex& hi = *it;
    const HullVertex& lo = *(it - 1);
    if (epsilon == lo.risk) return single(lo);
    const double theta = (epsilon - lo.risk) / (hi.risk - lo.risk);
    WaypointPolicy policy;
    policy.atoms.push_back({{lo.node, spec.node(lo.node)}, 1.0 - theta});
    policy.atoms.push_back({{hi.node, spec.node(hi.node)}, theta});
    policy.objective = (1.0 - theta) * lo.value + theta * hi.value;
    policy.risk = epsilon;
    return policy;
}

WaypointPolicy chance_constrained_policy(const TargetEnsemble& ensemble, const ScalarField& q,
                                         const DomainMask& reachable, double C, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
    return policy_from_hull(risk_hull(ensemble, q, reachable, C), epsilon, q.spec());
}

double tv_distance(std::span<const double> p, std::span<const double> p_other) {
    if (p.size() != p_other.size()) throw InvalidInput("tv_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - p_other[i]);
    return 0.5 * acc;
}

std::vector<double> dr_worst_distribution(std::span<const double> probs, std::span<const double> values,
                                          double delta) {
    if (probs.size() != values.size()) throw InvalidInput("dr_worst_distribution: length mismatch");
    if (!(delta >= 0.0)) throw InvalidInput("ambiguity radius delta must be nonnegative");
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> out(probs.begin(), probs.end());
    const std::size_t hardest = order.back();
    if (probs[hardest] + delta >= 1.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[hardest] = 1.0;
        return out;
    }
    out[hardest] = probs[hardest] + delta;
    double remaining = delta;
    for (std::size_t idx = 0; idx + 1 < order.size() && remaining > 0.0; ++idx) {
        const std::size_t i = order[idx];
        const double take = std::min(out[i], remaining);
        out[i] -= take;
        remaining -= take;
    }
    return out;
}

ScalarField dr_field(const TargetEnsemble& ensemble, double delta) {
    if (!(delta >= 0.0)) throw InvalidInput("ambiguity radius delta must be nonnegative");
    const auto& p = ensemble.probs;
    return map_nodes(ensemble, [&](const std::vector<double>& u) {
        const auto worst = dr_worst_distribution(p, u, delta);
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) acc += worst[i] * u[i];
        return acc;
    });
}

CoarseningReport coarsening_check(const std::vector<FineTarget>& fine, std::span<const ScalarField> fine_fields,
                                  const TargetEnsemble& coarse, const DomainMask& reachable, double speed_floor,
                                  double cell_size) {
    validate_ensemble(coarse);
    if (fine.empty() || fine.size() != fine_fields.size())
        throw InvalidInput("fine targets and fine fields must be non-empty and of equal length");
    if (!(speed_floor > 0.0)) throw InvalidInput("speed floor must be positive");
    if (!(cell_size >= 0.0)) throw InvalidInput("cell size must be nonnegative");
    const std::size_t m = coarse.size();
    std::vector<double> cell_mass(m, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < fine.size(); ++k) {
        const FineTarget& t = fine[k];
        if (t.cell >= m) throw InvalidInput("fine target " + std::to_string(k) + " is not assigned to a coarse cell");
        if (!(t.weight >= 0.0)) throw InvalidInput("fine target weights must be nonnegative");
        if (!coarse.targets.empty() && distance(t.location, coarse.targets[t.cell]) > cell_size * (1 + 1e-12) + 1e-15)
            throw InvalidInput("fine target " + std::to_string(k) + " lies farther than the cell size from its representative");
        cell_mass[t.cell] += t.weight;
        total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("fine target weights must sum to 1");
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(cell_mass[i] - coarse.probs[i]) > 1e-9)
            throw InvalidInput("coarse probability " + std::to_string(i) + " differs from its cell's fine mass");

    std::vector<double> weights;
    for (const auto& t : fine) weights.push_back(t.weight);
    const ScalarField xi = expected_field(fine_fields, weights);
    const ScalarField q = expected_field(coarse);

    CoarseningReport rep;
    for (std::size_t k = 0; k < q.spec().size(); ++k)
        if (reachable.inside(k) && std::isfinite(q[k]) && std::isfinite(xi[k]))
            rep.max_gap = std::max(rep.max_gap, std::abs(xi[k] - q[k]));
    rep.coarse_waypoint = waypoint_argmin(q, reachable);
    rep.fine_waypoint = waypoint_argmin(xi, reachable);
    rep.suboptimality = xi[rep.coarse_waypoint.node] - xi[rep.fine_waypoint.node];
    rep.slack = 4.0 * q.spec().h();
    rep.gap_bound = cell_size / speed_floor + rep.slack;
    rep.suboptimality_bound = 2.0 * cell_size / speed_floor + rep.slack;
    return rep;
}

} // namespace ucplan
