#pragma once

// Uniform 2-D lattice: domains as node masks, sampled scalar/vector fields,
// discrete gradients and region reductions.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "vec2.hpp"

namespace wolfflab {

enum class NodeType : std::uint8_t { exterior, boundary, interior };

enum class DomainKind { square, disk, half_disk, graph_domain, window, custom };

inline const char* to_string(DomainKind k)
{
    switch (k) {
    case DomainKind::square: return "square";
    case DomainKind::disk: return "disk";
    case DomainKind::half_disk: return "half_disk";
    case DomainKind::graph_domain: return "graph_domain";
    case DomainKind::window: return "window";
    case DomainKind::custom: return "custom";
    }
    return "custom";
}

inline DomainKind domain_kind_from_string(const std::string& s)
{
    if (s == "square") return DomainKind::square;
    if (s == "disk") return DomainKind::disk;
    if (s == "half_disk") return DomainKind::half_disk;
    if (s == "graph_domain") return DomainKind::graph_domain;
    if (s == "window") return DomainKind::window;
    if (s == "custom") return DomainKind::custom;
    throw Error(ErrorCode::parse, "unknown domain kind '" + s + "'");
}

// Node (i, j) sits at (origin + (i + i_off) h, origin + (j + j_off) h). Windows
// cut from a parent lattice keep the parent origin and shift the offsets, so a
// node has bit-identical coordinates in every window that contains it.
struct Lattice {
    int nx = 0;
    int ny = 0;
    double h = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int i_off = 0;
    int j_off = 0;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
    int i_of(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx)); }
    int j_of(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx)); }
    bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
    double x(int i) const { return origin_x + static_cast<double>(i + i_off) * h; }
    double y(int j) const { return origin_y + static_cast<double>(j + j_off) * h; }
    Point node(int i, int j) const { return {x(i), y(j)}; }
    Point node(std::size_t k) const { return node(i_of(k), j_of(k)); }
};

class Domain {
public:
    using NodePredicate = std::function<bool(int, int)>;

    // Interior nodes lie in the open set with all four axis neighbours in the
    // closed set; remaining closed-set nodes are boundary nodes.
    static Domain from_predicates(DomainKind kind, const Lattice& grid, const NodePredicate& open,
                                  const NodePredicate& closed)
    {
        if (grid.nx < 3 || grid.ny < 3)
            throw Error(ErrorCode::invalid_domain, "a domain needs at least 3 nodes per axis");
        if (!(grid.h > 0.0) || !std::isfinite(grid.h))
            throw Error(ErrorCode::invalid_domain, "grid spacing must be positive");
        Domain d;
        d.kind_ = kind;
        d.grid_ = grid;
        d.mask_.assign(grid.size(), NodeType::exterior);
        std::vector<char> in_closed(grid.size(), 0);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                in_closed[grid.index(i, j)] = closed(i, j) ? 1 : 0;
        for (int j = 0; j < grid.ny; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const std::size_t k = grid.index(i, j);
                if (!in_closed[k])
                    continue;
                bool interior = i > 0 && j > 0 && i + 1 < grid.nx && j + 1 < grid.ny && open(i, j);
                if (interior)
                    interior = in_closed[grid.index(i - 1, j)] && in_closed[grid.index(i + 1, j)] &&
                               in_closed[grid.index(i, j - 1)] && in_closed[grid.index(i, j + 1)];
                d.mask_[k] = interior ? NodeType::interior : NodeType::boundary;
            }
        }
        return d;
    }

    static Domain from_mask(DomainKind kind, const Lattice& grid, std::vector<NodeType> mask)
    {
        if (grid.nx < 3 || grid.ny < 3)
            throw Error(ErrorCode::invalid_domain, "a domain needs at least 3 nodes per axis");
        if (mask.size() != grid.size())
            throw Error(ErrorCode::invalid_domain, "mask size does not match lattice");
        Domain d;
        d.kind_ = kind;
        d.grid_ = grid;
        d.mask_ = std::move(mask);
        return d;
    }

    // [-L, L]^2 sampled by an odd number of nodes per axis (origin is a node).
    static Lattice centered_lattice(double half_width, int nodes_per_axis)
    {
        if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0)
            throw Error(ErrorCode::invalid_domain, "nodes per axis must be odd and at least 3");
        if (!(half_width > 0.0))
            throw Error(ErrorCode::invalid_domain, "half width must be positive");
        Lattice g;
        g.nx = g.ny = nodes_per_axis;
        g.h = 2.0 * half_width / static_cast<double>(nodes_per_axis - 1);
        const int half = (nodes_per_axis - 1) / 2;
        g.origin_x = g.origin_y = 0.0;
        g.i_off = g.j_off = -half;
        return g;
    }

    static Domain square(double half_width, int nodes_per_axis)
    {
        const Lattice g = centered_lattice(half_width, nodes_per_axis);
        const int last = g.nx - 1;
        Domain d = from_predicates(
            DomainKind::square, g, [&](int i, int j) { return i > 0 && j > 0 && i < last && j < last; },
            [](int, int) { return true; });
        d.half_width_ = half_width;
        return d;
    }

    static Domain disk(double radius, int nodes_per_axis)
    {
        const Lattice g = centered_lattice(radius, nodes_per_axis);
        const double r2 = radius * radius;
        Domain d = from_predicates(
            DomainKind::disk, g, [&](int i, int j) { return norm2(g.node(i, j)) < r2; },
            [&](int i, int j) { return norm2(g.node(i, j)) <= r2; });
        d.half_width_ = radius;
        return d;
    }

    // Upper half of the disk of the given radius; the flat side lies on y = 0.
    static Domain half_disk(double radius, int nodes_per_axis)
    {
        const Lattice g = centered_lattice(radius, nodes_per_axis);
        const double r2 = radius * radius;
        Domain d = from_predicates(
            DomainKind::half_disk, g,
            [&](int i, int j) { const Point p = g.node(i, j); return norm2(p) < r2 && p.y > 0.0; },
            [&](int i, int j) { const Point p = g.node(i, j); return norm2(p) <= r2 && p.y >= 0.0; });
        d.half_width_ = radius;
        return d;
    }

    // {(x, y) in (-L, L)^2 : y > chi(x)}; interiority is the strict inequality.
    static Domain graph(double half_width, int nodes_per_axis, std::function<double(double)> chi)
    {
        const Lattice g = centered_lattice(half_width, nodes_per_axis);
        const int last = g.nx - 1;
        std::vector<double> chi_at(static_cast<std::size_t>(g.nx));
        for (int i = 0; i < g.nx; ++i)
            chi_at[static_cast<std::size_t>(i)] = chi(g.x(i));
        Domain d = from_predicates(
            DomainKind::graph_domain, g,
            [&](int i, int j) { return i > 0 && j > 0 && i < last && j < last && g.y(j) > chi_at[static_cast<std::size_t>(i)]; },
            [&](int i, int j) { return g.y(j) >= chi_at[static_cast<std::size_t>(i)]; });
        d.half_width_ = half_width;
        d.chi_ = std::move(chi);
        return d;
    }

    // Sub-lattice window of `parent` covering the bounding box of B_{r+shell}(c).
    // The open set is parent-interior nodes with |x - c| < r (optionally
    // further restricted by `extra`); the closed set is parent non-exterior
    // nodes with |x - c| <= r + shell.
    static Domain ball_window(const Domain& parent, const Point& c, double r,
                              const std::function<bool(const Point&)>& extra = {}, double shell = 0.0)
    {
        const Lattice& pg = parent.grid();
        const double h = pg.h;
        const double ro = r + shell;
        const int i_lo = std::max(0, static_cast<int>(std::floor((c.x - ro - pg.x(0)) / h)) - 1);
        const int j_lo = std::max(0, static_cast<int>(std::floor((c.y - ro - pg.y(0)) / h)) - 1);
        const int i_hi = std::min(pg.nx - 1, static_cast<int>(std::ceil((c.x + ro - pg.x(0)) / h)) + 1);
        const int j_hi = std::min(pg.ny - 1, static_cast<int>(std::ceil((c.y + ro - pg.y(0)) / h)) + 1);
        Lattice g = pg;
        g.nx = i_hi - i_lo + 1;
        g.ny = j_hi - j_lo + 1;
        g.i_off = pg.i_off + i_lo;
        g.j_off = pg.j_off + j_lo;
        const double r2 = r * r, ro2 = ro * ro;
        auto parent_type = [&](int i, int j) { return parent.type(i + i_lo, j + j_lo); };
        Domain d = from_predicates(
            DomainKind::window, g,
            [&](int i, int j) {
                const Point p = g.node(i, j);
                return parent_type(i, j) == NodeType::interior && dist2(p, c) < r2 && (!extra || extra(p));
            },
            [&](int i, int j) {
                const Point p = g.node(i, j);
                return parent_type(i, j) != NodeType::exterior && dist2(p, c) <= ro2;
            });
        d.half_width_ = r;
        d.center_ = c;
        d.parent_i_off_ = i_lo;
        d.parent_j_off_ = j_lo;
        return d;
    }

    DomainKind kind() const { return kind_; }
    const Lattice& grid() const { return grid_; }
    double h() const { return grid_.h; }
    int nx() const { return grid_.nx; }
    int ny() const { return grid_.ny; }
    std::size_t size() const { return grid_.size(); }
    double half_width() const { return half_width_; }
    const Point& center() const { return center_; }
    const std::function<double(double)>& chi() const { return chi_; }
    int parent_i_offset() const { return parent_i_off_; }
    int parent_j_offset() const { return parent_j_off_; }

    NodeType type(std::size_t k) const { return mask_[k]; }
    NodeType type(int i, int j) const
    {
        return grid_.in_bounds(i, j) ? mask_[grid_.index(i, j)] : NodeType::exterior;
    }
    bool active(int i, int j) const { return type(i, j) != NodeType::exterior; }
    bool active(std::size_t k) const { return mask_[k] != NodeType::exterior; }
    const std::vector<NodeType>& mask() const { return mask_; }

    Point node(std::size_t k) const { return grid_.node(k); }
    Point node(int i, int j) const { return grid_.node(i, j); }

    std::size_t count(NodeType t) const { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), t)); }

    // Index of the node with the given global lattice coordinates, if present.
    bool locate_global(int gi, int gj, std::size_t& k) const
    {
        const int i = gi - grid_.i_off, j = gj - grid_.j_off;
        if (!grid_.in_bounds(i, j))
            return false;
        k = grid_.index(i, j);
        return true;
    }
    int global_i(std::size_t k) const { return grid_.i_of(k) + grid_.i_off; }
    int global_j(std::size_t k) const { return grid_.j_of(k) + grid_.j_off; }

private:
    DomainKind kind_ = DomainKind::custom;
    Lattice grid_;
    std::vector<NodeType> mask_;
    double half_width_ = 0.0;
    Point center_{};
    std::function<double(double)> chi_;
    int parent_i_off_ = 0;
    int parent_j_off_ = 0;
};

using DomainPtr = std::shared_ptr<const Domain>;

inline DomainPtr share(Domain d) { return std::make_shared<const Domain>(std::move(d)); }

inline constexpr double exterior_sentinel = std::numeric_limits<double>::quiet_NaN();

struct ScalarField {
    DomainPtr domain;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(DomainPtr d, double fill = 0.0) : domain(std::move(d))
    {
        values.assign(domain->size(), fill);
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!domain->active(k))
                values[k] = exterior_sentinel;
    }

    template <class F>
    static ScalarField sample(DomainPtr d, F&& f)
    {
        ScalarField s(std::move(d));
        for (std::size_t k = 0; k < s.values.size(); ++k)
            if (s.domain->active(k))
                s.values[k] = f(s.domain->node(k));
        return s;
    }

    double operator[](std::size_t k) const { return values[k]; }
    double& operator[](std::size_t k) { return values[k]; }
    double at(int i, int j) const { return values[domain->grid().index(i, j)]; }
    double magnitude(std::size_t k) const { return std::abs(values[k]); }
};

struct VectorField {
    DomainPtr domain;
    std::vector<Vec2> values;

    VectorField() = default;
    explicit VectorField(DomainPtr d) : domain(std::move(d))
    {
        values.assign(domain->size(), Vec2{});
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!domain->active(k))
                values[k] = {exterior_sentinel, exterior_sentinel};
    }

    template <class F>
    static VectorField sample(DomainPtr d, F&& f)
    {
        VectorField v(std::move(d));
        for (std::size_t k = 0; k < v.values.size(); ++k)
            if (v.domain->active(k))
                v.values[k] = f(v.domain->node(k));
        return v;
    }

    const Vec2& operator[](std::size_t k) const { return values[k]; }
    Vec2& operator[](std::size_t k) { return values[k]; }
    double magnitude(std::size_t k) const { return norm(values[k]); }
};

namespace detail {

// Derivative along one axis at node k from the values at offsets -2..2.
// Central where both neighbours are active, second-order one-sided where
// two nodes on one side are active, first order otherwise.
inline double axis_derivative(const ScalarField& f, int i, int j, int di, int dj)
{
    const Domain& d = *f.domain;
    const double h = d.h();
    auto val = [&](int s) { return f.at(i + s * di, j + s * dj); };
    auto ok = [&](int s) { return d.active(i + s * di, j + s * dj); };
    const bool p1 = ok(1), m1 = ok(-1);
    if (p1 && m1)
        return (val(1) - val(-1)) / (2.0 * h);
    if (p1) {
        if (ok(2))
            return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
        return (val(1) - val(0)) / h;
    }
    if (m1) {
        if (ok(-2))
            return (3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2.0 * h);
        return (val(0) - val(-1)) / h;
    }
    return 0.0;
}

} // namespace detail

inline VectorField gradient(const ScalarField& f)
{
    const Domain& d = *f.domain;
    if (d.nx() < 3 || d.ny() < 3)
        throw Error(ErrorCode::invalid_domain, "gradient needs at least 3 nodes per axis");
    VectorField g(f.domain);
    for (int j = 0; j < d.ny(); ++j) {
        for (int i = 0; i < d.nx(); ++i) {
            const std::size_t k = d.grid().index(i, j);
            if (!d.active(k))
                continue;
            g.values[k] = {detail::axis_derivative(f, i, j, 1, 0), detail::axis_derivative(f, i, j, 0, 1)};
        }
    }
    return g;
}

// A set of active node indices of one domain, in ascending index order.
struct Region {
    std::vector<std::size_t> nodes;
    bool empty() const { return nodes.empty(); }
    std::size_t size() const { return nodes.size(); }
};

// Active nodes within the closed ball |node - x|^2 <= r^2.
inline Region ball_region(const Domain& d, const Point& x, double r)
{
    Region reg;
    if (!(r >= 0.0))
        return reg;
    const Lattice& g = d.grid();
    const int i_lo = std::max(0, static_cast<int>(std::floor((x.x - r - g.x(0)) / g.h)) - 1);
    const int i_hi = std::min(g.nx - 1, static_cast<int>(std::ceil((x.x + r - g.x(0)) / g.h)) + 1);
    const int j_lo = std::max(0, static_cast<int>(std::floor((x.y - r - g.y(0)) / g.h)) - 1);
    const int j_hi = std::min(g.ny - 1, static_cast<int>(std::ceil((x.y + r - g.y(0)) / g.h)) + 1);
    const double r2 = r * r;
    for (int j = j_lo; j <= j_hi; ++j)
        for (int i = i_lo; i <= i_hi; ++i) {
            const std::size_t k = g.index(i, j);
            if (d.active(k) && dist2(g.node(i, j), x) <= r2)
                reg.nodes.push_back(k);
        }
    return reg;
}

template <class Pred>
Region region_where(const Domain& d, Pred&& keep)
{
    Region reg;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (d.active(k) && keep(d.node(k)))
            reg.nodes.push_back(k);
    return reg;
}

inline Region active_region(const Domain& d)
{
    return region_where(d, [](const Point&) { return true; });
}

// (mean over region of |f|^q)^(1/q); a quasi-norm for 0 < q < 1.
template <class Field>
double region_seminorm(const Field& f, const Region& region, double q)
{
    if (!(q > 0.0) || !std::isfinite(q))
        throw Error(ErrorCode::invalid_exponent, "power-mean exponent must be positive");
    if (region.empty())
        throw Error(ErrorCode::empty_region, "region contains no nodes");
    double acc = 0.0;
    if (q == 1.0) {
        for (std::size_t k : region.nodes)
            acc += f.magnitude(k);
        return acc / static_cast<double>(region.size());
    }
    // Rescale by the max to keep |f|^q in range for large or tiny q.
    double big = 0.0;
    for (std::size_t k : region.nodes)
        big = std::max(big, f.magnitude(k));
    if (big == 0.0)
        return 0.0;
    for (std::size_t k : region.nodes)
        acc += std::pow(f.magnitude(k) / big, q);
    return big * std::pow(acc / static_cast<double>(region.size()), 1.0 / q);
}

inline double region_mean(const ScalarField& f, const Region& region)
{
    if (region.empty())
        throw Error(ErrorCode::empty_region, "region contains no nodes");
    double acc = 0.0;
    for (std::size_t k : region.nodes)
        acc += f.values[k];
    return acc / static_cast<double>(region.size());
}

inline Vec2 region_mean(const VectorField& f, const Region& region)
{
    if (region.empty())
        throw Error(ErrorCode::empty_region, "region contains no nodes");
    Vec2 acc{};
    for (std::size_t k : region.nodes)
        acc += f.values[k];
    return (1.0 / static_cast<double>(region.size())) * acc;
}

inline double region_max(const VectorField& f, const Region& region)
{
    if (region.empty())
        throw Error(ErrorCode::empty_region, "region contains no nodes");
    double m = 0.0;
    for (std::size_t k : region.nodes)
        m = std::max(m, f.magnitude(k));
    return m;
}

// Ball average over B_r(x) intersected with the domain. With norm_power == 1
// a scalar field averages its raw (signed) values; otherwise the power mean
// of |f| is returned.
inline double ball_average(const ScalarField& f, const Point& x, double r, double norm_power = 1.0)
{
    const Region reg = ball_region(*f.domain, x, r);
    if (reg.empty())
        throw Error(ErrorCode::empty_region, "ball contains no domain nodes");
    if (norm_power == 1.0)
        return region_mean(f, reg);
    return region_seminorm(f, reg, norm_power);
}

inline double ball_average(const VectorField& f, const Point& x, double r, double norm_power = 1.0)
{
    const Region reg = ball_region(*f.domain, x, r);
    if (reg.empty())
        throw Error(ErrorCode::empty_region, "ball contains no domain nodes");
    return region_seminorm(f, reg, norm_power);
}

// ---------------------------------------------------------------------------
// CSV serialization: `nx,ny,h,kind` header, one line of header values, then
// `i,j,value[,value2]` rows for every active node. Doubles are written in
// shortest round-trip form so a write/read cycle is bit-exact.

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '\t'))
        ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
        --last;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw Error(ErrorCode::parse, "not a number: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    return out;
}

inline void write_header(std::ostream& os, const Domain& d)
{
    os << "nx,ny,h,kind\n" << d.nx() << ',' << d.ny() << ',' << format_double(d.h()) << ',' << to_string(d.kind()) << '\n';
}

struct CsvRows {
    Lattice grid;
    DomainKind kind = DomainKind::custom;
    std::vector<std::vector<std::string>> rows;
};

inline CsvRows read_rows(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("nx,ny,h,kind", 0) != 0)
        throw Error(ErrorCode::parse, "missing 'nx,ny,h,kind' header");
    if (!std::getline(is, line))
        throw Error(ErrorCode::parse, "missing header values");
    const auto head = split_csv(line);
    if (head.size() != 4)
        throw Error(ErrorCode::parse, "header needs 4 values");
    CsvRows out;
    const int nx = std::stoi(head[0]), ny = std::stoi(head[1]);
    const double h = parse_double(head[2]);
    std::string kind = head[3];
    while (!kind.empty() && (kind.back() == '\r' || kind.back() == ' '))
        kind.pop_back();
    out.kind = domain_kind_from_string(kind);
    out.grid.nx = nx;
    out.grid.ny = ny;
    out.grid.h = h;
    out.grid.i_off = -(nx - 1) / 2;
    out.grid.j_off = -(ny - 1) / 2;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r")
            continue;
        out.rows.push_back(split_csv(line));
    }
    return out;
}

// Active set = rows present; interior = all four neighbours present.
inline DomainPtr domain_from_rows(const CsvRows& csv)
{
    std::vector<char> present(csv.grid.size(), 0);
    for (const auto& r : csv.rows) {
        if (r.size() < 3)
            throw Error(ErrorCode::parse, "row needs i,j,value");
        const int i = std::stoi(r[0]), j = std::stoi(r[1]);
        if (!csv.grid.in_bounds(i, j))
            throw Error(ErrorCode::parse, "row index out of range");
        present[csv.grid.index(i, j)] = 1;
    }
    std::vector<NodeType> mask(csv.grid.size(), NodeType::exterior);
    const Lattice& g = csv.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            if (!present[k])
                continue;
            const bool inner = i > 0 && j > 0 && i + 1 < g.nx && j + 1 < g.ny && present[g.index(i - 1, j)] &&
                               present[g.index(i + 1, j)] && present[g.index(i, j - 1)] && present[g.index(i, j + 1)];
            mask[k] = inner ? NodeType::interior : NodeType::boundary;
        }
    return share(Domain::from_mask(csv.kind, csv.grid, std::move(mask)));
}

} // namespace detail

inline void write_csv(std::ostream& os, const ScalarField& f)
{
    const Domain& d = *f.domain;
    detail::write_header(os, d);
    for (std::size_t k = 0; k < d.size(); ++k)
        if (d.active(k))
            os << d.grid().i_of(k) << ',' << d.grid().j_of(k) << ',' << detail::format_double(f.values[k]) << '\n';
}

inline void write_csv(std::ostream& os, const VectorField& f)
{
    const Domain& d = *f.domain;
    detail::write_header(os, d);
    for (std::size_t k = 0; k < d.size(); ++k)
        if (d.active(k))
            os << d.grid().i_of(k) << ',' << d.grid().j_of(k) << ',' << detail::format_double(f.values[k].x) << ','
               << detail::format_double(f.values[k].y) << '\n';
}

// Reads a scalar field. When `domain` is given the rows are placed on it
// (lattice sizes must agree); otherwise the mask is rebuilt from the rows.
inline ScalarField read_scalar_csv(std::istream& is, DomainPtr domain = nullptr)
{
    const detail::CsvRows csv = detail::read_rows(is);
    if (!domain)
        domain = detail::domain_from_rows(csv);
    else if (domain->nx() != csv.grid.nx || domain->ny() != csv.grid.ny)
        throw Error(ErrorCode::parse, "field lattice does not match domain");
    ScalarField f(domain);
    for (const auto& r : csv.rows) {
        const std::size_t k = domain->grid().index(std::stoi(r[0]), std::stoi(r[1]));
        f.values[k] = detail::parse_double(r[2]);
    }
    return f;
}

inline VectorField read_vector_csv(std::istream& is, DomainPtr domain = nullptr)
{
    const detail::CsvRows csv = detail::read_rows(is);
    if (!domain)
        domain = detail::domain_from_rows(csv);
    else if (domain->nx() != csv.grid.nx || domain->ny() != csv.grid.ny)
        throw Error(ErrorCode::parse, "field lattice does not match domain");
    VectorField f(domain);
    for (const auto& r : csv.rows) {
        if (r.size() < 4)
            throw Error(ErrorCode::parse, "vector row needs i,j,value,value2");
        const std::size_t k = domain->grid().index(std::stoi(r[0]), std::stoi(r[1]));
        f.values[k] = {detail::parse_double(r[2]), detail::parse_double(r[3])};
    }
    return f;
}

} // namespace wolfflab
