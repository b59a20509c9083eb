#pragma once

// Signed Radon measures: point atoms plus an optional gridded density.

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "lattice.hpp"
#include "vec2.hpp"

namespace wolfflab {

struct Atom {
    Point at;
    double weight = 0.0;
};

namespace detail {

// Area of {(u, v) : u <= X, v <= Y, u^2 + v^2 <= t^2}.
inline double disk_quadrant_area(double X, double Y, double t)
{
    if (X <= -t || Y <= -t)
        return 0.0;
    X = std::min(X, t);
    Y = std::min(Y, t);
    const double t2 = t * t;
    // Antiderivative of sqrt(t^2 - u^2).
    auto S = [&](double u) {
        u = std::clamp(u, -t, t);
        return 0.5 * (u * std::sqrt(std::max(0.0, t2 - u * u)) + t2 * std::asin(std::clamp(u / t, -1.0, 1.0)));
    };
    const double w = std::sqrt(std::max(0.0, t2 - Y * Y));
    auto clip = [&](double a, double b) { return std::pair<double, double>{a, std::min(b, X)}; };
    double area = 0.0;
    if (Y >= 0.0) {
        // |u| >= w: full chord 2s; |u| < w: s + Y.
        auto [a1, b1] = clip(-t, -w);
        if (b1 > a1) area += 2.0 * (S(b1) - S(a1));
        auto [a2, b2] = clip(-w, w);
        if (b2 > a2) area += (S(b2) - S(a2)) + Y * (b2 - a2);
        auto [a3, b3] = clip(w, t);
        if (b3 > a3) area += 2.0 * (S(b3) - S(a3));
    } else {
        auto [a2, b2] = clip(-w, w);
        if (b2 > a2) area += (S(b2) - S(a2)) + Y * (b2 - a2);
    }
    return std::max(0.0, area);
}

// Area of the closed disk B_t(0) intersected with [x0, x1] x [y0, y1].
inline double disk_rect_area(double x0, double x1, double y0, double y1, double t)
{
    if (t <= 0.0)
        return 0.0;
    const double a = disk_quadrant_area(x1, y1, t) - disk_quadrant_area(x0, y1, t) - disk_quadrant_area(x1, y0, t) +
                     disk_quadrant_area(x0, y0, t);
    return std::clamp(a, 0.0, (x1 - x0) * (y1 - y0));
}

} // namespace detail

class RadonMeasure {
public:
    RadonMeasure() = default;
    explicit RadonMeasure(std::vector<Atom> atoms, std::optional<ScalarField> density = std::nullopt)
        : atoms_(std::move(atoms)), density_(std::move(density))
    {
        for (const Atom& a : atoms_)
            if (!std::isfinite(a.weight) || !std::isfinite(a.at.x) || !std::isfinite(a.at.y))
                throw Error(ErrorCode::invalid_parameter, "atom weights and positions must be finite");
        // Coincident atoms are one atom: |mu| must see their net weight.
        std::stable_sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) {
            return a.at.x < b.at.x || (a.at.x == b.at.x && a.at.y < b.at.y);
        });
        std::vector<Atom> merged;
        for (const Atom& a : atoms_) {
            if (!merged.empty() && merged.back().at == a.at)
                merged.back().weight += a.weight;
            else
                merged.push_back(a);
        }
        atoms_ = std::move(merged);
        if (density_) {
            for (std::size_t k = 0; k < density_->values.size(); ++k)
                if (density_->domain->active(k) && !std::isfinite(density_->values[k]))
                    throw Error(ErrorCode::invalid_parameter, "density values must be finite");
            build_prefix();
        }
    }

    static RadonMeasure dirac(const Point& at, double weight = 1.0) { return RadonMeasure({{at, weight}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::optional<ScalarField>& density() const { return density_; }
    bool is_atomic() const { return !density_.has_value(); }
    bool is_zero() const
    {
        for (const Atom& a : atoms_)
            if (a.weight != 0.0)
                return false;
        if (density_)
            for (std::size_t k = 0; k < density_->values.size(); ++k)
                if (density_->domain->active(k) && density_->values[k] != 0.0)
                    return false;
        return true;
    }

    // |mu| extended by zero outside the domain (the harness never places
    // mass outside it).
    bool extended_by_zero() const { return true; }

    double total_mass() const
    {
        double m = 0.0;
        for (const Atom& a : atoms_)
            m += a.weight;
        if (density_) {
            const double h2 = density_->domain->h() * density_->domain->h();
            for (std::size_t k = 0; k < density_->values.size(); ++k)
                if (density_->domain->active(k))
                    m += density_->values[k] * h2;
        }
        return m;
    }

    double total_variation() const
    {
        double m = 0.0;
        for (const Atom& a : atoms_)
            m += std::abs(a.weight);
        if (density_) {
            const double h2 = density_->domain->h() * density_->domain->h();
            for (std::size_t k = 0; k < density_->values.size(); ++k)
                if (density_->domain->active(k))
                    m += std::abs(density_->values[k]) * h2;
        }
        return m;
    }

    RadonMeasure scaled(double c) const
    {
        std::vector<Atom> a = atoms_;
        for (Atom& x : a)
            x.weight *= c;
        std::optional<ScalarField> d = density_;
        if (d)
            for (std::size_t k = 0; k < d->values.size(); ++k)
                if (d->domain->active(k))
                    d->values[k] *= c;
        return RadonMeasure(std::move(a), std::move(d));
    }

    // |mu|(closed B_t(x)); the density part is the node quadrature sum |f| h^2.
    double ball_mass(const Point& x, double t) const
    {
        if (!(t >= 0.0))
            throw Error(ErrorCode::invalid_parameter, "ball radius must be nonnegative");
        double m = 0.0;
        // Atoms compare the same rounded distance that breakpoints() reports.
        for (const Atom& a : atoms_)
            if (dist(a.at, x) <= t)
                m += std::abs(a.weight);
        if (density_) {
            const Region reg = ball_region(*density_->domain, x, t);
            const double h2 = density_->domain->h() * density_->domain->h();
            double acc = 0.0;
            for (std::size_t k : reg.nodes)
                acc += std::abs(density_->values[k]);
            m += acc * h2;
        }
        return m;
    }

    // |mu|(B_t(x)) with the density read as piecewise constant on the node
    // cells [x_i - h/2, x_i + h/2] x [y_j - h/2, y_j + h/2]. Continuous in t,
    // which is what the density potentials integrate.
    double cell_ball_mass(const Point& x, double t) const
    {
        double m = 0.0;
        for (const Atom& a : atoms_)
            if (dist(a.at, x) <= t)
                m += std::abs(a.weight);
        if (density_ && t > 0.0)
            m += density_cell_mass(x, t);
        return m;
    }

    // Largest radius below which the density part of cell_ball_mass(x, .) is
    // exactly K t^2: the smallest distance from x to a cell edge line that
    // does not pass through x.
    double density_quadratic_radius(const Point& x) const
    {
        if (!density_)
            return 0.0;
        const Lattice& g = density_->domain->grid();
        auto axis = [&](double c, double base) {
            const double s = (c - base) / g.h + 0.5; // cell edges at integer s
            const double frac = s - std::floor(s);
            double best = std::numeric_limits<double>::infinity();
            for (double d : {frac, 1.0 - frac})
                if (d > 1e-9)
                    best = std::min(best, d * g.h);
            return std::min(best, g.h);
        };
        return std::min(axis(x.x, g.x(0)), axis(x.y, g.y(0)));
    }

    // Sorted distinct distances from x to the atoms.
    std::vector<double> breakpoints(const Point& x) const
    {
        if (density_)
            throw Error(ErrorCode::unsupported_representation, "breakpoints need a purely atomic measure");
        std::vector<double> d;
        d.reserve(atoms_.size());
        for (const Atom& a : atoms_)
            d.push_back(dist(a.at, x));
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
        return d;
    }

    // (distance, |weight|) pairs sorted by distance, equal distances merged.
    std::vector<std::pair<double, double>> atom_profile(const Point& x) const
    {
        std::vector<std::pair<double, double>> d;
        d.reserve(atoms_.size());
        for (const Atom& a : atoms_)
            if (a.weight != 0.0)
                d.emplace_back(dist(a.at, x), std::abs(a.weight));
        std::sort(d.begin(), d.end());
        std::vector<std::pair<double, double>> out;
        for (const auto& e : d) {
            if (!out.empty() && out.back().first == e.first)
                out.back().second += e.second;
            else
                out.push_back(e);
        }
        return out;
    }

private:
    std::vector<Atom> atoms_;
    std::optional<ScalarField> density_;
    std::vector<double> row_prefix_; // per row: prefix sums of |f|, nx + 1 entries

    void build_prefix()
    {
        const Domain& d = *density_->domain;
        const std::size_t w = static_cast<std::size_t>(d.nx()) + 1;
        row_prefix_.assign(w * static_cast<std::size_t>(d.ny()), 0.0);
        for (int j = 0; j < d.ny(); ++j)
            for (int i = 0; i < d.nx(); ++i) {
                const std::size_t k = d.grid().index(i, j);
                const double v = d.active(k) ? std::abs(density_->values[k]) : 0.0;
                row_prefix_[static_cast<std::size_t>(j) * w + static_cast<std::size_t>(i) + 1] =
                    row_prefix_[static_cast<std::size_t>(j) * w + static_cast<std::size_t>(i)] + v;
            }
    }

    double density_cell_mass(const Point& x, double t) const
    {
        const Domain& d = *density_->domain;
        const Lattice& g = d.grid();
        const double h = g.h;
        const std::size_t w = static_cast<std::size_t>(g.nx) + 1;
        // Cell (i, j) spans [x(i) - h/2, x(i) + h/2] x [y(j) - h/2, y(j) + h/2].
        const int j_lo = std::max(0, static_cast<int>(std::floor((x.y - t - g.y(0)) / h + 0.5)) - 1);
        const int j_hi = std::min(g.ny - 1, static_cast<int>(std::ceil((x.y + t - g.y(0)) / h - 0.5)) + 1);
        double mass = 0.0;
        for (int j = j_lo; j <= j_hi; ++j) {
            const double y0 = g.y(j) - 0.5 * h - x.y, y1 = g.y(j) + 0.5 * h - x.y;
            if (y0 > t || y1 < -t)
                continue;
            const double ymin2 = (y0 <= 0.0 && y1 >= 0.0) ? 0.0 : std::min(y0 * y0, y1 * y1);
            const double ymax2 = std::max(y0 * y0, y1 * y1);
            const double l_out = std::sqrt(std::max(0.0, t * t - ymin2));
            const double l_in = ymax2 <= t * t ? std::sqrt(t * t - ymax2) : -1.0;
            const int i_lo = std::max(0, static_cast<int>(std::floor((x.x - l_out - g.x(0)) / h + 0.5)) - 1);
            const int i_hi = std::min(g.nx - 1, static_cast<int>(std::ceil((x.x + l_out - g.x(0)) / h - 0.5)) + 1);
            // Cells fully inside: x-interval within [-l_in, l_in].
            int f_lo = 1, f_hi = 0;
            if (l_in >= 0.0) {
                f_lo = std::max(i_lo, static_cast<int>(std::ceil((x.x - l_in - g.x(0)) / h + 0.5)));
                f_hi = std::min(i_hi, static_cast<int>(std::floor((x.x + l_in - g.x(0)) / h - 0.5)));
                while (f_lo <= f_hi && g.x(f_lo) - 0.5 * h - x.x < -l_in) ++f_lo;
                while (f_hi >= f_lo && g.x(f_hi) + 0.5 * h - x.x > l_in) --f_hi;
            }
            const double* pre = &row_prefix_[static_cast<std::size_t>(j) * w];
            if (f_lo <= f_hi)
                mass += (pre[f_hi + 1] - pre[f_lo]) * h * h;
            for (int i = i_lo; i <= i_hi; ++i) {
                if (i >= f_lo && i <= f_hi)
                    continue;
                const double v = pre[i + 1] - pre[i];
                if (v == 0.0)
                    continue;
                const double x0 = g.x(i) - 0.5 * h - x.x, x1 = g.x(i) + 0.5 * h - x.x;
                mass += v * detail::disk_rect_area(x0, x1, y0, y1, t);
            }
        }
        return mass;
    }
};

// Load vector of the weak form: atoms go to their nearest node with weight
// w / h^2 (ties to the lexicographically smallest (i, j)); density is copied
// node-wise.
inline ScalarField discretize(const RadonMeasure& mu, const DomainPtr& dom)
{
    ScalarField load(dom, 0.0);
    const Lattice& g = dom->grid();
    const double h2 = g.h * g.h;
    for (const Atom& a : mu.atoms()) {
        const double si = (a.at.x - g.x(0)) / g.h, sj = (a.at.y - g.y(0)) / g.h;
        const int i0 = static_cast<int>(std::floor(si)), j0 = static_cast<int>(std::floor(sj));
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = i0 - 1; i <= i0 + 2; ++i)
            for (int j = j0 - 1; j <= j0 + 2; ++j) {
                if (!g.in_bounds(i, j))
                    continue;
                const double d2 = dist2(g.node(i, j), a.at);
                if (d2 < best || (d2 == best && std::tie(i, j) < std::tie(bi, bj))) {
                    best = d2;
                    bi = i;
                    bj = j;
                }
            }
        if (bi < 0 || dom->type(bi, bj) != NodeType::interior)
            throw Error(ErrorCode::atom_on_boundary, "atom at (" + detail::format_double(a.at.x) + ", " +
                                                         detail::format_double(a.at.y) + ") is nearest a non-interior node");
        load.values[g.index(bi, bj)] += a.weight / h2;
    }
    if (mu.density()) {
        const ScalarField& f = *mu.density();
        const Domain& fd = *f.domain;
        if (fd.h() != g.h)
            throw Error(ErrorCode::invalid_domain, "density lattice spacing differs from the target domain");
        for (std::size_t k = 0; k < fd.size(); ++k) {
            if (!fd.active(k))
                continue;
            std::size_t t = 0;
            if (dom->locate_global(fd.global_i(k), fd.global_j(k), t) && dom->active(t))
                load.values[t] += f.values[k];
        }
    }
    return load;
}

} // namespace wolfflab
