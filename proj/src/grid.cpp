#include "ucplan/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace ucplan {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

GridSpec::GridSpec(int nx, int ny, Point origin, double h) : nx_(nx), ny_(ny), origin_(origin), h_(h) {
    if (nx < 2 || ny < 2) throw InvalidInput("grid needs at least 2 nodes per axis");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("grid spacing must be positive and finite");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) throw InvalidInput("grid origin must be finite");
}

GridSpec GridSpec::unit_square(int n) {
    if (n < 2) throw InvalidInput("grid needs at least 2 nodes per axis");
    return GridSpec(n, n, {0.0, 0.0}, 1.0 / (n - 1));
}

bool GridSpec::contains(Point p) const {
    const double tol = 1e-12 * h_;
    return p.x >= origin_.x - tol && p.y >= origin_.y - tol && p.x <= origin_.x + (nx_ - 1) * h_ + tol &&
           p.y <= origin_.y + (ny_ - 1) * h_ + tol;
}

NodeIndex GridSpec::nearest(Point p) const {
    const int i = static_cast<int>(std::lround((p.x - origin_.x) / h_));
    const int j = static_cast<int>(std::lround((p.y - origin_.y) / h_));
    return {std::clamp(i, 0, nx_ - 1), std::clamp(j, 0, ny_ - 1)};
}

ScalarField::ScalarField(GridSpec spec, double fill) : spec_(spec), values_(spec.size(), fill) {
    if (std::isnan(fill)) throw InvalidInput("field fill value is NaN");
}

ScalarField::ScalarField(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
    if (values_.size() != spec_.size()) throw InvalidInput("field length does not match grid");
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (std::isnan(values_[k])) {
            const auto n = spec_.index_of(k);
            throw InvalidInput("NaN field value at node (" + std::to_string(n.i) + "," + std::to_string(n.j) + ")");
        }
    }
}

DomainMask::DomainMask(GridSpec spec) : spec_(spec), inside_(spec.size(), 1) {}

DomainMask::DomainMask(GridSpec spec, std::vector<unsigned char> inside) : spec_(spec), inside_(std::move(inside)) {
    if (inside_.size() != spec_.size()) throw InvalidInput("mask length does not match grid");
    if (count() == 0) throw InvalidInput("mask has no inside node");
}

std::size_t DomainMask::count() const {
    return static_cast<std::size_t>(std::count_if(inside_.begin(), inside_.end(), [](unsigned char c) { return c != 0; }));
}

DomainMask DomainMask::intersect(const DomainMask& other) const {
    if (!(other.spec_ == spec_)) throw InvalidInput("mask grids differ");
    return restrict_to([&](std::size_t k) { return other.inside(k); });
}

DomainMask DomainMask::restrict_to(const std::function<bool(std::size_t)>& pred) const {
    std::vector<unsigned char> out(inside_.size(), 0);
    bool any = false;
    for (std::size_t k = 0; k < inside_.size(); ++k) {
        if (inside_[k] && pred(k)) {
            out[k] = 1;
            any = true;
        }
    }
    if (!any) throw Infeasible("restricted domain is empty");
    DomainMask m(spec_);
    m.inside_ = std::move(out);
    return m;
}

void DomainMask::carve_rectangle(Point lo, Point hi) {
    const double tol = 1e-9 * spec_.h();
    for (int j = 0; j < spec_.ny(); ++j) {
        for (int i = 0; i < spec_.nx(); ++i) {
            const Point p = spec_.node(i, j);
            if (p.x > lo.x + tol && p.x < hi.x - tol && p.y > lo.y + tol && p.y < hi.y - tol)
                inside_[spec_.linear(i, j)] = 0;
        }
    }
    if (count() == 0) throw InvalidInput("obstacles cover the whole grid");
}

ScalarField build_field(const GridSpec& spec, const std::function<double(Point)>& formula) {
    std::vector<double> values(spec.size());
    for (int j = 0; j < spec.ny(); ++j) {
        for (int i = 0; i < spec.nx(); ++i) {
            const double v = formula(spec.node(i, j));
            if (std::isnan(v))
                throw InvalidInput("formula returned NaN at node (" + std::to_string(i) + "," + std::to_string(j) + ")");
            values[spec.linear(i, j)] = v;
        }
    }
    return ScalarField(spec, std::move(values));
}

ScalarField build_field(const DomainMask& mask, const std::function<double(Point)>& formula) {
    const GridSpec& spec = mask.spec();
    return build_field(spec, [&](Point p) {
        const NodeIndex n = spec.nearest(p);
        return mask.inside(n) ? formula(p) : kInf;
    });
}

ScalarField apply_mask(ScalarField field, const DomainMask& mask) {
    if (!(field.spec() == mask.spec())) throw InvalidInput("mask grid differs from field grid");
    for (std::size_t k = 0; k < field.spec().size(); ++k)
        if (!mask.inside(k)) field[k] = kInf;
    return field;
}

namespace {

double neighbor(const ScalarField& u, int i, int j) {
    return u.spec().in_range(i, j) ? u.at(i, j) : kInf;
}

// Upwind slope along one axis; sign tells which side was selected
// (+1: backward difference, -1: forward difference, 0: none).
std::pair<double, int> axis_slope(double center, double lower, double upper, double h) {
    const double back = std::isfinite(lower) ? (center - lower) / h : -kInf;
    const double fwd = std::isfinite(upper) ? -(upper - center) / h : -kInf;
    if (back <= 0.0 && fwd <= 0.0) return {0.0, 0};
    if (back >= fwd) return {back, +1};
    return {fwd, -1};
}

} // namespace

UpwindSlopes upwind_slopes(const ScalarField& u, int i, int j) {
    const double h = u.spec().h();
    const double c = u.at(i, j);
    const auto [sx, dx] = axis_slope(c, neighbor(u, i - 1, j), neighbor(u, i + 1, j), h);
    const auto [sy, dy] = axis_slope(c, neighbor(u, i, j - 1), neighbor(u, i, j + 1), h);
    (void)dx;
    (void)dy;
    return {sx, sy};
}

double upwind_gradient_magnitude(const ScalarField& u, int i, int j) {
    if (!u.spec().in_range(i, j))
        throw InvalidInput("node (" + std::to_string(i) + "," + std::to_string(j) + ") is off the grid");
    if (!std::isfinite(u.at(i, j))) return kInf;
    const UpwindSlopes s = upwind_slopes(u, i, j);
    return std::hypot(s.x, s.y);
}

Point upwind_gradient(const ScalarField& u, int i, int j) {
    const double c = u.at(i, j);
    if (!std::isfinite(c)) return {0.0, 0.0};
    const double h = u.spec().h();
    const auto [sx, dx] = axis_slope(c, neighbor(u, i - 1, j), neighbor(u, i + 1, j), h);
    const auto [sy, dy] = axis_slope(c, neighbor(u, i, j - 1), neighbor(u, i, j + 1), h);
    // A forward pick means u decreases towards +x, i.e. the gradient is negative.
    return {dx >= 0 ? sx : -sx, dy >= 0 ? sy : -sy};
}

namespace {

struct Cell {
    int i0;
    int j0;
    double fx;
    double fy;
};

Cell locate(const GridSpec& spec, Point p) {
    const double tx = (p.x - spec.origin().x) / spec.h();
    const double ty = (p.y - spec.origin().y) / spec.h();
    const int i0 = std::clamp(static_cast<int>(std::floor(tx)), 0, spec.nx() - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(ty)), 0, spec.ny() - 2);
    return {i0, j0, std::clamp(tx - i0, 0.0, 1.0), std::clamp(ty - j0, 0.0, 1.0)};
}

} // namespace

double bilinear_sample(const ScalarField& field, Point p) {
    const GridSpec& spec = field.spec();
    if (!spec.contains(p)) throw InvalidInput("sample point outside the grid bounding box");
    const Cell c = locate(spec, p);
    const double w[4] = {(1 - c.fx) * (1 - c.fy), c.fx * (1 - c.fy), (1 - c.fx) * c.fy, c.fx * c.fy};
    const double v[4] = {field.at(c.i0, c.j0), field.at(c.i0 + 1, c.j0), field.at(c.i0, c.j0 + 1),
                         field.at(c.i0 + 1, c.j0 + 1)};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.0) continue;
        if (std::isinf(v[k])) return v[k] > 0 ? kInf : -kInf;
        acc += w[k] * v[k];
    }
    return acc;
}

Point interpolated_gradient(const ScalarField& u, Point p) {
    const GridSpec& spec = u.spec();
    if (!spec.contains(p)) throw InvalidInput("gradient point outside the grid bounding box");
    const Cell c = locate(spec, p);
    const int di[4] = {0, 1, 0, 1};
    const int dj[4] = {0, 0, 1, 1};
    const double w[4] = {(1 - c.fx) * (1 - c.fy), c.fx * (1 - c.fy), (1 - c.fx) * c.fy, c.fx * c.fy};
    double wsum = 0.0;
    Point g{0.0, 0.0};
    for (int k = 0; k < 4; ++k) {
        const int i = c.i0 + di[k];
        const int j = c.j0 + dj[k];
        if (!std::isfinite(u.at(i, j))) continue;
        const Point gk = upwind_gradient(u, i, j);
        g.x += w[k] * gk.x;
        g.y += w[k] * gk.y;
        wsum += w[k];
    }
    if (wsum <= 0.0) {
        // Point sits exactly on finite corners with zero weight; fall back to the nearest finite corner.
        for (int k = 0; k < 4; ++k) {
            const int i = c.i0 + di[k];
            const int j = c.j0 + dj[k];
            if (std::isfinite(u.at(i, j))) return upwind_gradient(u, i, j);
        }
        return {0.0, 0.0};
    }
    return {g.x / wsum, g.y / wsum};
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_number(const std::string& tok) {
    std::string t = tok;
    t.erase(0, t.find_first_not_of(" \t\r"));
    t.erase(t.find_last_not_of(" \t\r") + 1);
    if (t == "inf" || t == "+inf") return kInf;
    if (t == "-inf") return -kInf;
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw InvalidInput("bad number in CSV: '" + tok + "'");
    return v;
}

std::vector<double> split_numbers(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_number(tok));
    return out;
}

} // namespace

void write_field_csv(std::ostream& out, const ScalarField& field, std::optional<double> time) {
    const GridSpec& s = field.spec();
    out << "# " << s.nx() << ',' << s.ny() << ',' << format_number(s.h()) << ',' << format_number(s.origin().x) << ','
        << format_number(s.origin().y);
    if (time) out << ',' << format_number(*time);
    out << '\n';
    for (int j = 0; j < s.ny(); ++j) {
        for (int i = 0; i < s.nx(); ++i) {
            if (i) out << ',';
            out << format_number(field.at(i, j));
        }
        out << '\n';
    }
}

ScalarField read_field_csv(std::istream& in, std::optional<double>* time) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw InvalidInput("field CSV lacks '# ' header");
    const auto head = split_numbers(line.substr(2));
    if (head.size() != 5 && head.size() != 6) throw InvalidInput("field CSV header needs 5 or 6 entries");
    const GridSpec spec(static_cast<int>(head[0]), static_cast<int>(head[1]), {head[3], head[4]}, head[2]);
    if (time) *time = head.size() == 6 ? std::optional<double>(head[5]) : std::nullopt;
    std::vector<double> values;
    values.reserve(spec.size());
    for (int j = 0; j < spec.ny(); ++j) {
        if (!std::getline(in, line)) throw InvalidInput("field CSV truncated");
        const auto row = split_numbers(line);
        if (static_cast<int>(row.size()) != spec.nx()) throw InvalidInput("field CSV row has wrong length");
        values.insert(values.end(), row.begin(), row.end());
    }
    return ScalarField(spec, std::move(values));
}

} // namespace ucplan
