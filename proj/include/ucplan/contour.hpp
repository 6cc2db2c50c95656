#pragma once

#include <iosfwd>
#include <vector>

#include "ucplan/grid.hpp"

namespace ucplan {

struct Polyline {
    double level = 0.0;
    std::vector<Point> points;
    bool closed = false;
};

/// Marching squares on the node lattice. A node counts as above the level
/// when its value is >= level; cells with a +inf corner are skipped. Saddle
/// cells are split by the cell-center average. Segments sharing an edge
/// crossing are joined into polylines.
/// Throws InvalidInput for non-finite levels.
std::vector<Polyline> extract_contours(const ScalarField& field, const std::vector<double>& levels);

/// Rows `level,polyline,x,y`, one per vertex; a closed polyline repeats its
/// first vertex at the end.
void write_contours_csv(std::ostream& out, const std::vector<Polyline>& lines);

} // namespace ucplan
