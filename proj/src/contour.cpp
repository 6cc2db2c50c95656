#include "ucplan/contour.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace ucplan {

namespace {

struct Segment {
    std::size_t a;
    std::size_t b;
};

// Edge ids: 2k for the edge from node k to its right neighbor, 2k+1 for the
// edge from node k to its upper neighbor.
Point edge_point(const ScalarField& f, std::size_t edge, double level) {
    const GridSpec& spec = f.spec();
    const std::size_t k0 = edge / 2;
    const NodeIndex n = spec.index_of(k0);
    const NodeIndex m = edge % 2 == 0 ? NodeIndex{n.i + 1, n.j} : NodeIndex{n.i, n.j + 1};
    const double va = f.at(n);
    const double vb = f.at(m);
    const double t = (level - va) / (vb - va);
    const Point pa = spec.node(n);
    const Point pb = spec.node(m);
    return {pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)};
}

std::vector<Polyline> contours_at(const ScalarField& f, double level) {
    const GridSpec& spec = f.spec();
    std::vector<Segment> segs;
    for (int j = 0; j + 1 < spec.ny(); ++j) {
        for (int i = 0; i + 1 < spec.nx(); ++i) {
            const std::array<double, 4> v{f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1), f.at(i, j + 1)};
            bool finite = true;
            int mask = 0;
            for (int c = 0; c < 4; ++c) {
                finite = finite && std::isfinite(v[c]);
                if (v[c] >= level) mask |= 1 << c;
            }
            if (!finite || mask == 0 || mask == 15) continue;
            const std::array<std::size_t, 4> e{2 * spec.linear(i, j), 2 * spec.linear(i + 1, j) + 1,
                                               2 * spec.linear(i, j + 1), 2 * spec.linear(i, j) + 1};
            if (mask == 5 || mask == 10) {
                const bool center_above = 0.25 * (v[0] + v[1] + v[2] + v[3]) >= level;
                if ((mask == 5) == center_above) {
                    segs.push_back({e[0], e[1]});
                    segs.push_back({e[2], e[3]});
                } else {
                    segs.push_back({e[3], e[0]});
                    segs.push_back({e[1], e[2]});
                }
                continue;
            }
            // Edge c connects corners c and c+1 (mod 4); it is crossed when they differ.
            std::array<std::size_t, 2> hit{};
            int n = 0;
            for (int c = 0; c < 4; ++c)
                if (((mask >> c) & 1) != ((mask >> ((c + 1) % 4)) & 1)) hit[n++] = e[c];
            segs.push_back({hit[0], hit[1]});
        }
    }

    std::unordered_map<std::size_t, std::vector<std::size_t>> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        by_edge[segs[s].a].push_back(s);
        by_edge[segs[s].b].push_back(s);
    }
    std::vector<bool> used(segs.size(), false);
    auto next_from = [&](std::size_t edge) -> std::optional<std::size_t> {
        for (std::size_t s : by_edge[edge])
            if (!used[s]) return s;
        return std::nullopt;
    };

    std::vector<Polyline> out;
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = true;
        std::deque<std::size_t> chain{segs[s0].a, segs[s0].b};
        while (auto s = next_from(chain.back())) {
            used[*s] = true;
            chain.push_back(segs[*s].a == chain.back() ? segs[*s].b : segs[*s].a);
        }
        while (auto s = next_from(chain.front())) {
            used[*s] = true;
            chain.push_front(segs[*s].a == chain.front() ? segs[*s].b : segs[*s].a);
        }
        Polyline line;
        line.level = level;
        line.closed = chain.size() > 2 && chain.front() == chain.back();
        if (line.closed) chain.pop_back();
        for (std::size_t edge : chain) line.points.push_back(edge_point(f, edge, level));
        out.push_back(std::move(line));
    }
    return out;
}

} // namespace

std::vector<Polyline> extract_contours(const ScalarField& field, const std::vector<double>& levels) {
    std::vector<Polyline> out;
    for (double level : levels) {
        if (!std::isfinite(level)) throw InvalidInput("contour levels must be finite");
        auto lines = contours_at(field, level);
        out.insert(out.end(), std::make_move_iterator(lines.begin()), std::make_move_iterator(lines.end()));
    }
    return out;
}

void write_contours_csv(std::ostream& out, const std::vector<Polyline>& lines) {
    out << "level,polyline,x,y\n";
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const Polyline& line = lines[k];
        auto row = [&](Point p) {
            out << format_number(line.level) << ',' << k << ',' << format_number(p.x) << ',' << format_number(p.y)
                << '\n';
        };
        for (const Point& p : line.points) row(p);
        if (line.closed && !line.points.empty()) row(line.points.front());
    }
}

} // namespace ucplan
