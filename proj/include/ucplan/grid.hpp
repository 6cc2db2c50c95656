#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ucplan/errors.hpp"

namespace ucplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

/// Integer lattice coordinates of a node.
struct NodeIndex {
    int i = 0;
    int j = 0;

    friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

/// Uniform square lattice: node (i, j) sits at origin + (i*h, j*h).
class GridSpec {
public:
    GridSpec(int nx, int ny, Point origin, double h);

    /// nx-by-nx lattice covering the unit square.
    static GridSpec unit_square(int n);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    Point origin() const { return origin_; }
    double h() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    Point node(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
    Point node(std::size_t linear) const { return node(index_of(linear)); }
    Point node(NodeIndex n) const { return node(n.i, n.j); }

    /// Row-major by j, then i.
    std::size_t linear(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
    }
    std::size_t linear(NodeIndex n) const { return linear(n.i, n.j); }
    NodeIndex index_of(std::size_t linear) const {
        return {static_cast<int>(linear % static_cast<std::size_t>(nx_)),
                static_cast<int>(linear / static_cast<std::size_t>(nx_))};
    }

    bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
    /// Closed bounding box of the lattice.
    bool contains(Point p) const;
    /// Nearest lattice node, clamped to the box.
    NodeIndex nearest(Point p) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    int nx_;
    int ny_;
    Point origin_;
    double h_;
};

class ScalarField {
public:
    explicit ScalarField(GridSpec spec, double fill = 0.0);
    /// Throws InvalidInput on size mismatch or NaN entries.
    ScalarField(GridSpec spec, std::vector<double> values);

    const GridSpec& spec() const { return spec_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double operator[](std::size_t linear) const { return values_[linear]; }
    double& operator[](std::size_t linear) { return values_[linear]; }
    double at(int i, int j) const { return values_[spec_.linear(i, j)]; }
    double& at(int i, int j) { return values_[spec_.linear(i, j)]; }
    double at(NodeIndex n) const { return at(n.i, n.j); }

private:
    GridSpec spec_;
    std::vector<double> values_;
};

/// Nodes belonging to the domain minus obstacles.
class DomainMask {
public:
    /// All nodes inside.
    explicit DomainMask(GridSpec spec);
    /// Throws InvalidInput if no node is inside.
    DomainMask(GridSpec spec, std::vector<unsigned char> inside);

    const GridSpec& spec() const { return spec_; }
    bool inside(std::size_t linear) const { return inside_[linear] != 0; }
    bool inside(int i, int j) const { return spec_.in_range(i, j) && inside_[spec_.linear(i, j)] != 0; }
    bool inside(NodeIndex n) const { return inside(n.i, n.j); }
    std::size_t count() const;
    std::span<const unsigned char> raw() const { return inside_; }

    /// Node-wise conjunction; throws Infeasible if the result is empty.
    DomainMask intersect(const DomainMask& other) const;
    /// Keeps nodes where pred(linear) holds; throws Infeasible if empty.
    DomainMask restrict_to(const std::function<bool(std::size_t)>& pred) const;

    /// Clears every node strictly inside the open rectangle (lo, hi).
    /// Nodes on the rectangle boundary stay inside so paths may run along it.
    void carve_rectangle(Point lo, Point hi);

private:
    GridSpec spec_;
    std::vector<unsigned char> inside_;
};

/// Samples formula at every node. Throws InvalidInput naming the first node
/// where the formula returns NaN.
ScalarField build_field(const GridSpec& spec, const std::function<double(Point)>& formula);

/// Same as build_field, but nodes outside the mask are set to +inf.
ScalarField build_field(const DomainMask& mask, const std::function<double(Point)>& formula);

/// Copy of field with +inf on every node outside mask.
ScalarField apply_mask(ScalarField field, const DomainMask& mask);

/// One-sided upwind slopes along x and y at a node, each max{D-, -D+, 0}.
/// Neighbors that are +inf or off-grid are unavailable.
struct UpwindSlopes {
    double x = 0.0;
    double y = 0.0;
};
UpwindSlopes upwind_slopes(const ScalarField& u, int i, int j);

/// sqrt(sx^2 + sy^2) of the upwind slopes. +inf if the node value is +inf.
/// Throws InvalidInput if (i, j) is off the lattice.
double upwind_gradient_magnitude(const ScalarField& u, int i, int j);

/// Bilinear interpolation over the cell containing p. A +inf corner with
/// nonzero weight makes the sample +inf. Throws InvalidInput outside the box.
double bilinear_sample(const ScalarField& field, Point p);

/// Upwind gradient vector at a node: the component signs follow the side
/// selected by the upwind max, so -grad points along the characteristic.
Point upwind_gradient(const ScalarField& u, int i, int j);

/// Bilinear blend of the node upwind gradients over the cell containing p,
/// using only corners with finite values. Zero vector if no corner is finite.
Point interpolated_gradient(const ScalarField& u, Point p);

// --- CSV ---------------------------------------------------------------

/// Writes `# nx,ny,h,origin_x,origin_y[,t]` followed by one line per j.
void write_field_csv(std::ostream& out, const ScalarField& field, std::optional<double> time = std::nullopt);
ScalarField read_field_csv(std::istream& in, std::optional<double>* time = nullptr);

/// Shortest decimal text that reads back to the same double; "inf" for +inf.
std::string format_number(double v);

} // namespace ucplan
