#pragma once

// Matrix coefficient fields a(x), ellipticity checks, L^2 mean-oscillation
// moduli, Dini integrals and geometric tails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "lattice.hpp"
#include "numerics.hpp"
#include "vec2.hpp"

namespace wolfflab {

struct CoefficientField {
    DomainPtr domain;
    std::vector<Mat2> a; // per node; exterior nodes hold the identity
    double lambda = 1.0;

    const Mat2& operator[](std::size_t k) const { return a[k]; }
    bool is_constant() const
    {
        const Mat2* first = nullptr;
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (!domain->active(k))
                continue;
            if (!first)
                first = &a[k];
            else if (!(a[k] == *first))
                return false;
        }
        return true;
    }
    bool is_symmetric() const
    {
        for (std::size_t k = 0; k < a.size(); ++k)
            if (domain->active(k) && a[k].xy != a[k].yx)
                return false;
        return true;
    }
};

template <class F>
CoefficientField sample_coefficient(DomainPtr d, double lambda, F&& f)
{
    CoefficientField c;
    c.domain = std::move(d);
    c.lambda = lambda;
    c.a.assign(c.domain->size(), Mat2::identity());
    for (std::size_t k = 0; k < c.a.size(); ++k)
        if (c.domain->active(k))
            c.a[k] = f(c.domain->node(k));
    return c;
}

// The same field seen on a window of its lattice (matched by global index).
inline CoefficientField restrict_to(const CoefficientField& c, const DomainPtr& window)
{
    CoefficientField out;
    out.domain = window;
    out.lambda = c.lambda;
    out.a.assign(window->size(), Mat2::identity());
    for (std::size_t k = 0; k < window->size(); ++k) {
        std::size_t pk = 0;
        if (c.domain->locate_global(window->global_i(k), window->global_j(k), pk))
            out.a[k] = c.a[pk];
    }
    return out;
}

// Entrywise average of a over the active nodes of the closed ball B_r(x).
inline Mat2 ball_average(const CoefficientField& c, const Point& x, double r)
{
    const Region reg = ball_region(*c.domain, x, r);
    if (reg.empty())
        throw Error(ErrorCode::empty_region, "ball contains no domain nodes");
    Mat2 acc{0.0, 0.0, 0.0, 0.0};
    for (std::size_t k : reg.nodes)
        acc = acc + c.a[k];
    return (1.0 / static_cast<double>(reg.size())) * acc;
}

struct EllipticityReport {
    double lambda_min = 0.0; // smallest eigenvalue of the symmetric part
    double lambda_max = 0.0; // largest eigenvalue of the symmetric part
    double max_entry = 0.0;  // max |a_ij|
};

inline EllipticityReport ellipticity_check(const CoefficientField& c, double tol = 1e-12)
{
    EllipticityReport rep;
    rep.lambda_min = std::numeric_limits<double>::infinity();
    rep.lambda_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < c.a.size(); ++k) {
        if (!c.domain->active(k))
            continue;
        const Mat2& m = c.a[k];
        if (!std::isfinite(m.xx) || !std::isfinite(m.xy) || !std::isfinite(m.yx) || !std::isfinite(m.yy))
            throw Error(ErrorCode::ellipticity_violation, "non-finite coefficient at node " + std::to_string(k));
        const Mat2 sym{m.xx, 0.5 * (m.xy + m.yx), 0.5 * (m.xy + m.yx), m.yy};
        const auto ev = sym.sym_eigenvalues();
        const double emax = m.max_abs_entry();
        if (ev[0] < 1.0 / c.lambda - tol || emax > c.lambda + tol) {
            const int i = c.domain->grid().i_of(k), j = c.domain->grid().j_of(k);
            throw Error(ErrorCode::ellipticity_violation,
                        "node (" + std::to_string(i) + ", " + std::to_string(j) + "): eigenvalue " +
                            detail::format_double(ev[0]) + ", max entry " + detail::format_double(emax) +
                            ", lambda " + detail::format_double(c.lambda));
        }
        rep.lambda_min = std::min(rep.lambda_min, ev[0]);
        rep.lambda_max = std::max(rep.lambda_max, ev[1]);
        rep.max_entry = std::max(rep.max_entry, emax);
        any = true;
    }
    if (!any)
        throw Error(ErrorCode::empty_region, "coefficient field has no active nodes");
    return rep;
}

enum class ModulusFlavor { interior, boundary, chart, combined };

inline const char* to_string(ModulusFlavor f)
{
    switch (f) {
    case ModulusFlavor::interior: return "omega";
    case ModulusFlavor::boundary: return "varrho";
    case ModulusFlavor::chart: return "varrho0";
    case ModulusFlavor::combined: return "varrho1";
    }
    return "omega";
}

struct OscillationModulus {
    std::vector<double> radii;  // increasing
    std::vector<double> values; // >= 0
    ModulusFlavor flavor = ModulusFlavor::interior;

    // Piecewise power law between samples (linear where a value is zero),
    // power-law continuation below the grid, constant above it.
    double operator()(double r) const
    {
        if (radii.empty())
            return 0.0;
        if (r >= radii.back())
            return values.back();
        if (r <= radii.front()) {
            if (radii.size() < 2 || values[0] <= 0.0 || values[1] <= 0.0)
                return values.front();
            const double b = std::max(0.0, std::log(values[1] / values[0]) / std::log(radii[1] / radii[0]));
            return values[0] * std::pow(r / radii[0], b);
        }
        const auto it = std::upper_bound(radii.begin(), radii.end(), r);
        const std::size_t k = static_cast<std::size_t>(it - radii.begin()) - 1;
        const double r0 = radii[k], r1 = radii[k + 1], w0 = values[k], w1 = values[k + 1];
        if (w0 > 0.0 && w1 > 0.0)
            return w0 * std::pow(r / r0, std::log(w1 / w0) / std::log(r1 / r0));
        return w0 + (w1 - w0) * (r - r0) / (r1 - r0);
    }
};

// n radii geometrically spaced on [r_lo, r_hi].
inline std::vector<double> geometric_radii(double r_lo, double r_hi, int n)
{
    if (n < 2 || !(r_lo > 0.0) || !(r_hi > r_lo))
        throw Error(ErrorCode::invalid_parameter, "geometric radii need 0 < r_lo < r_hi and n >= 2");
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        r[static_cast<std::size_t>(k)] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / (n - 1));
    r.back() = r_hi;
    return r;
}

namespace detail {

// Column prefix sums of the shifted entries a - ref, of |a - ref|_F^2 and of
// the active-node count, so any union of column intervals reduces in O(#cols).
struct ColumnPrefix {
    int nx = 0, ny = 0;
    std::vector<std::array<double, 6>> s; // xx, xy, yx, yy, |.|^2, count
    Mat2 ref{};

    ColumnPrefix(const Domain& d, const std::function<Mat2(std::size_t)>& value)
        : nx(d.nx()), ny(d.ny())
    {
        bool have_ref = false;
        for (std::size_t k = 0; k < d.size() && !have_ref; ++k)
            if (d.active(k)) {
                ref = value(k);
                have_ref = true;
            }
        s.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny + 1), {0, 0, 0, 0, 0, 0});
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                const std::size_t k = d.grid().index(i, j);
                std::array<double, 6> v{0, 0, 0, 0, 0, 0};
                if (d.active(k)) {
                    const Mat2 m = value(k) - ref;
                    v = {m.xx, m.xy, m.yx, m.yy, m.frobenius2(), 1.0};
                }
                auto& next = at(i, j + 1);
                const auto& prev = at(i, j);
                for (int e = 0; e < 6; ++e)
                    next[e] = prev[e] + v[e];
            }
    }
    std::array<double, 6>& at(int i, int j) { return s[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny + 1) + static_cast<std::size_t>(j)]; }
    const std::array<double, 6>& at(int i, int j) const { return s[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny + 1) + static_cast<std::size_t>(j)]; }

    void add(std::array<double, 6>& acc, int i, int j_lo, int j_hi) const
    {
        if (j_lo > j_hi)
            return;
        const auto& hi = at(i, j_hi + 1);
        const auto& lo = at(i, j_lo);
        for (int e = 0; e < 6; ++e)
            acc[e] += hi[e] - lo[e];
    }

    static double oscillation(const std::array<double, 6>& acc)
    {
        if (acc[5] <= 0.0)
            return -1.0;
        const double n = acc[5];
        const double m2 = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2] + acc[3] * acc[3]) / (n * n);
        return std::sqrt(std::max(0.0, acc[4] / n - m2));
    }
};

// Rows j with |y(j) - c| <= w, adjusted to agree with the direct predicate.
template <class Inside>
inline void column_range(const Lattice& g, double c, double w, Inside&& inside, int& j_lo, int& j_hi)
{
    j_lo = std::max(0, static_cast<int>(std::ceil((c - w - g.y(0)) / g.h)) - 1);
    j_hi = std::min(g.ny - 1, static_cast<int>(std::floor((c + w - g.y(0)) / g.h)) + 1);
    while (j_lo <= j_hi && !inside(j_lo)) ++j_lo;
    while (j_hi >= j_lo && !inside(j_hi)) --j_hi;
}

inline bool is_center(const Domain& d, std::size_t k)
{
    return d.active(k) && d.global_i(k) % 2 == 0 && d.global_j(k) % 2 == 0;
}

inline void check_radii(const std::vector<double>& radii, double h)
{
    if (radii.empty())
        throw Error(ErrorCode::insufficient_samples, "no radii given");
    for (double r : radii) {
        if (!(r > 0.0) || r > 1.0)
            throw Error(ErrorCode::invalid_parameter, "radii must lie in (0, 1]");
        if (r < 2.0 * h)
            throw Error(ErrorCode::under_resolved_radius, "radius " + format_double(r) + " is below 2h");
    }
}

} // namespace detail

// omega(r) = sup over centers (every second node) of the L^2 mean oscillation
// of a on B_r(x) intersected with the domain, Frobenius norm.
inline OscillationModulus oscillation_modulus(const CoefficientField& c, const std::vector<double>& radii,
                                              ModulusFlavor flavor = ModulusFlavor::interior)
{
    if (flavor == ModulusFlavor::chart || flavor == ModulusFlavor::combined)
        throw Error(ErrorCode::invalid_parameter, "chart moduli are computed by chart_modulus / combined_modulus");
    const Domain& d = *c.domain;
    const Lattice& g = d.grid();
    detail::check_radii(radii, g.h);
    const detail::ColumnPrefix pre(d, [&](std::size_t k) { return c.a[k]; });
    OscillationModulus m;
    m.flavor = flavor;
    m.radii = radii;
    std::sort(m.radii.begin(), m.radii.end());
    for (double r : m.radii) {
        const double r2 = r * r;
        double best = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!detail::is_center(d, k))
                continue;
            const Point x0 = d.node(k);
            const int i0 = g.i_of(k);
            const int span = static_cast<int>(std::floor(r / g.h)) + 1;
            std::array<double, 6> acc{0, 0, 0, 0, 0, 0};
            for (int i = std::max(0, i0 - span); i <= std::min(g.nx - 1, i0 + span); ++i) {
                const double dx = g.x(i) - x0.x;
                if (dx * dx > r2)
                    continue;
                int j_lo, j_hi;
                detail::column_range(g, x0.y, std::sqrt(r2 - dx * dx),
                                     [&](int j) { const double dy = g.y(j) - x0.y; return dx * dx + dy * dy <= r2; },
                                     j_lo, j_hi);
                pre.add(acc, i, j_lo, j_hi);
            }
            best = std::max(best, detail::ColumnPrefix::oscillation(acc));
        }
        m.values.push_back(best);
    }
    return m;
}

// Oscillation of chi' over 1-D balls |y' - x'| <= r, sampled on the lattice
// columns of `d` within |x'| <= chart_radius.
inline OscillationModulus chart_modulus(const std::function<double(double)>& chi, const Domain& d, double chart_radius,
                                        const std::vector<double>& radii)
{
    const Lattice& g = d.grid();
    detail::check_radii(radii, g.h);
    std::vector<double> xs, slope;
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        if (std::abs(x) > chart_radius)
            continue;
        const double e = 1e-6;
        xs.push_back(x);
        slope.push_back((chi(x + e) - chi(x - e)) / (2.0 * e));
    }
    const std::size_t n = xs.size();
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    const double ref = n ? slope[0] : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        s1[k + 1] = s1[k] + (slope[k] - ref);
        s2[k + 1] = s2[k] + (slope[k] - ref) * (slope[k] - ref);
    }
    OscillationModulus m;
    m.flavor = ModulusFlavor::chart;
    m.radii = radii;
    std::sort(m.radii.begin(), m.radii.end());
    for (double r : m.radii) {
        double best = 0.0;
        for (std::size_t c = 0; c < n; c += 2) {
            std::size_t lo = c, hi = c;
            while (lo > 0 && std::abs(xs[lo - 1] - xs[c]) <= r) --lo;
            while (hi + 1 < n && std::abs(xs[hi + 1] - xs[c]) <= r) ++hi;
            const double cnt = static_cast<double>(hi - lo + 1);
            const double mean = (s1[hi + 1] - s1[lo]) / cnt;
            const double var = (s2[hi + 1] - s2[lo]) / cnt - mean * mean;
            best = std::max(best, std::sqrt(std::max(0.0, var)));
        }
        m.values.push_back(best);
    }
    return m;
}

// Oscillation of the flattened coefficient DL a DL^T (DL the Jacobian of
// (x', x_n) -> (x', x_n - chi(x'))) over balls in the flattened variable,
// i.e. over the node sets {x : |L(x) - L(x0)| <= r}.
inline OscillationModulus combined_modulus(const CoefficientField& c, const std::function<double(double)>& chi,
                                           const std::vector<double>& radii)
{
    const Domain& d = *c.domain;
    const Lattice& g = d.grid();
    detail::check_radii(radii, g.h);
    std::vector<double> chi_at(static_cast<std::size_t>(g.nx)), dchi(static_cast<std::size_t>(g.nx));
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i), e = 1e-6;
        chi_at[static_cast<std::size_t>(i)] = chi(x);
        dchi[static_cast<std::size_t>(i)] = (chi(x + e) - chi(x - e)) / (2.0 * e);
    }
    const detail::ColumnPrefix pre(d, [&](std::size_t k) {
        const double s = dchi[static_cast<std::size_t>(g.i_of(k))];
        const Mat2 D{1.0, 0.0, -s, 1.0};
        return D * c.a[k] * D.transpose();
    });
    OscillationModulus m;
    m.flavor = ModulusFlavor::combined;
    m.radii = radii;
    std::sort(m.radii.begin(), m.radii.end());
    for (double r : m.radii) {
        const double r2 = r * r;
        double best = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (!detail::is_center(d, k))
                continue;
            const int i0 = g.i_of(k);
            const Point y0{g.x(i0), g.y(g.j_of(k)) - chi_at[static_cast<std::size_t>(i0)]};
            const int span = static_cast<int>(std::floor(r / g.h)) + 1;
            std::array<double, 6> acc{0, 0, 0, 0, 0, 0};
            for (int i = std::max(0, i0 - span); i <= std::min(g.nx - 1, i0 + span); ++i) {
                const double dx = g.x(i) - y0.x;
                if (dx * dx > r2)
                    continue;
                const double shift = chi_at[static_cast<std::size_t>(i)];
                int j_lo, j_hi;
                detail::column_range(g, y0.y + shift, std::sqrt(r2 - dx * dx),
                                     [&](int j) { const double dy = g.y(j) - shift - y0.y; return dx * dx + dy * dy <= r2; },
                                     j_lo, j_hi);
                pre.add(acc, i, j_lo, j_hi);
            }
            best = std::max(best, detail::ColumnPrefix::oscillation(acc));
        }
        m.values.push_back(best);
    }
    return m;
}

struct DiniResult {
    double value = 0.0;        // integral over [r_min, 1] of the interpolant
    double extrapolated = 0.0; // value plus the fitted tail over (0, r_min)
    double tail_exponent = 0.0;
    double limit_exponent = 0.0; // extrapolated local exponent as r -> 0
    bool dini_fails = false;
};

// Local exponent at which the tail is declared non-summable (b0 * q).
inline constexpr double dini_exponent_floor = 0.01;

inline DiniResult dini_integral(const OscillationModulus& m, double q, double r_min)
{
    if (!(q > 0.0))
        throw Error(ErrorCode::invalid_exponent, "Dini exponent must be positive");
    if (m.radii.size() < 3)
        throw Error(ErrorCode::insufficient_samples, "Dini integral needs at least 3 radii");
    if (!(r_min > 0.0) || r_min > 1.0)
        throw Error(ErrorCode::invalid_parameter, "r_min must lie in (0, 1]");
    const auto& r = m.radii;
    const auto& w = m.values;
    // Exact integral of m(t)^q / t between a and b inside one segment.
    auto segment = [&](double a, double b) {
        if (b <= a)
            return 0.0;
        const double wa = m(a), wb = m(b);
        if (wa <= 0.0 && wb <= 0.0)
            return 0.0;
        if (wa > 0.0 && wb > 0.0) {
            const double bq = q * std::log(wb / wa) / std::log(b / a);
            if (std::abs(bq) < 1e-14)
                return std::pow(wa, q) * std::log(b / a);
            return std::pow(wa, q) * std::expm1(bq * std::log(b / a)) / bq;
        }
        // Linear piece through a zero: Gauss-Legendre in log t.
        return gauss_integrate([&](double l) { return std::pow(m(std::exp(l)), q); }, std::log(a), std::log(b), 32);
    };
    DiniResult res;
    const double top = 1.0;
    // Segment breakpoints restricted to [r_min, 1].
    std::vector<double> cuts{r_min};
    for (double x : r)
        if (x > r_min && x < top)
            cuts.push_back(x);
    cuts.push_back(top);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        res.value += segment(cuts[k], cuts[k + 1]);

    // Local exponents on the sampled segments, regressed against
    // s = 1 / ln(e / r) over the smallest radii and extrapolated to s = 0.
    std::vector<double> s, b;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
        if (w[k] <= 0.0 || w[k + 1] <= 0.0)
            continue;
        const double rm = std::sqrt(r[k] * r[k + 1]);
        s.push_back(1.0 / std::log(std::exp(1.0) / rm));
        b.push_back(std::log(w[k + 1] / w[k]) / std::log(r[k + 1] / r[k]));
    }
    const double w_low = m(r_min);
    if (w_low <= 0.0) {
        res.extrapolated = res.value;
        return res;
    }
    if (s.empty()) {
        res.dini_fails = true;
        res.extrapolated = std::numeric_limits<double>::infinity();
        return res;
    }
    const std::size_t use = std::min<std::size_t>(s.size(), std::max<std::size_t>(3, s.size() / 2));
    double b0 = b.front();
    if (use >= 2) {
        const LinearFit fit = least_squares(std::vector<double>(s.begin(), s.begin() + static_cast<long>(use)),
                                            std::vector<double>(b.begin(), b.begin() + static_cast<long>(use)));
        b0 = fit.intercept;
    }
    res.limit_exponent = b0;
    res.tail_exponent = b.front();
    if (b0 * q <= dini_exponent_floor || res.tail_exponent * q <= dini_exponent_floor) {
        res.dini_fails = true;
        res.extrapolated = std::numeric_limits<double>::infinity();
        return res;
    }
    res.extrapolated = res.value + std::pow(w_low, q) / (res.tail_exponent * q);
    return res;
}

// sum_{i>=1} eps^(a1 i) g(eps^-i t) with g capped at g(R/2) once eps^-i t > R/2;
// the capped part is summed in closed form.
template <class G>
double capped_geometric_sum(G&& g, double eps, double alpha1, double R, double t)
{
    if (!(eps > 0.0 && eps < 1.0) || !(alpha1 > 0.0 && alpha1 < 1.0))
        throw Error(ErrorCode::invalid_parameter, "need eps, alpha1 in (0, 1)");
    if (!(R > 0.0) || !(t > 0.0) || t > R)
        throw Error(ErrorCode::invalid_parameter, "need 0 < t <= R");
    const double ratio = std::pow(eps, alpha1);
    double sum = 0.0, weight = 1.0, radius = t;
    int i = 1;
    for (;; ++i) {
        weight *= ratio;
        radius /= eps;
        if (radius > 0.5 * R)
            break;
        if (weight < 1e-14 * std::max(sum, 1e-300) && i > 1)
            return sum;
        sum += weight * g(radius);
    }
    const double cap = g(0.5 * R);
    if (cap != 0.0)
        sum += cap * weight / (1.0 - ratio);
    return sum;
}

struct GeometricTail {
    double epsilon = 0.125;
    double alpha1 = 0.25;
    double q = 1.0;
    double R = 1.0;
};

inline double geometric_tail(const OscillationModulus& m, double eps, double alpha1, double q, double R, double t)
{
    return capped_geometric_sum([&](double r) { return std::pow(m(r), q); }, eps, alpha1, R, t);
}

inline double geometric_tail(const OscillationModulus& m, const GeometricTail& p, double t)
{
    return geometric_tail(m, p.epsilon, p.alpha1, p.q, p.R, t);
}

// Integral over (0, rho) of tail(t) / t by log-spaced composite Simpson.
template <class Tail>
double tail_dini(Tail&& tail, double rho, double t_min = 1e-8, int per_decade = 32)
{
    if (rho <= t_min)
        return 0.0;
    const double la = std::log(t_min), lb = std::log(rho);
    int n = static_cast<int>(std::ceil((lb - la) / std::log(10.0) * per_decade));
    n += n % 2;
    const double dl = (lb - la) / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double wk = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        acc += wk * tail(std::exp(la + k * dl));
    }
    return acc * dl / 3.0;
}

enum class CoefficientKind { constant, holder, dini_log, dmo_spiky, checkerboard };

inline CoefficientKind coefficient_kind_from_string(const std::string& s)
{
    if (s == "constant") return CoefficientKind::constant;
    if (s == "holder") return CoefficientKind::holder;
    if (s == "dini_log") return CoefficientKind::dini_log;
    if (s == "dmo_spiky") return CoefficientKind::dmo_spiky;
    if (s == "checkerboard") return CoefficientKind::checkerboard;
    throw Error(ErrorCode::parse, "unknown coefficient kind '" + s + "'");
}

inline const char* to_string(CoefficientKind k)
{
    switch (k) {
    case CoefficientKind::constant: return "constant";
    case CoefficientKind::holder: return "holder";
    case CoefficientKind::dini_log: return "dini_log";
    case CoefficientKind::dmo_spiky: return "dmo_spiky";
    case CoefficientKind::checkerboard: return "checkerboard";
    }
    return "constant";
}

struct CoefficientSpec {
    CoefficientKind kind = CoefficientKind::constant;
    double amplitude = 0.0;       // relative perturbation of the identity
    double beta = 0.5;            // holder exponent
    double gamma = 2.0;           // dini_log exponent
    double scale = 0.25;          // checkerboard cell size
    int generations = 3;          // dmo_spiky spike generations
    double spike_radius = 0.5;    // dmo_spiky radius of the first generation
    Mat2 base = Mat2::identity(); // constant kind
    std::uint64_t seed = 0;
};

// Spike k (1-based) of the dmo_spiky family: radius r0 * 2^(2 - 2^k) and
// height 1/k, so r = r0/2^0, r0/2^2, r0/2^6, ...
inline double spike_radius(double r0, int k) { return r0 * std::pow(2.0, 2.0 - std::pow(2.0, k)); }

struct Spike {
    Point center;
    double radius = 0.0;
    double height = 0.0;
};

// Conical spikes of the dmo_spiky family: generation k has height 1/k and
// radius r0 * 2^(2 - 2^k), i.e. r0, r0/4, r0/64, ... Centers sit on disjoint
// diagonal positions.
inline std::vector<Spike> spike_layout(const CoefficientSpec& spec)
{
    static const std::array<Point, 4> slots{Point{-0.35, -0.35}, Point{0.35, 0.35}, Point{0.35, -0.35}, Point{-0.35, 0.35}};
    std::vector<Spike> out;
    for (int k = 1; k <= spec.generations; ++k) {
        const Point base = slots[static_cast<std::size_t>((k - 1) % 4)];
        const double shift = 0.1 * ((k - 1) / 4);
        out.push_back({base + Vec2{shift, -shift}, spike_radius(spec.spike_radius, k), 1.0 / k});
    }
    return out;
}

// Scalar perturbation phi(x) in [-1, 1]; the field is (1 + amplitude phi) base.
inline std::function<double(const Point&)> coefficient_profile(const CoefficientSpec& spec)
{
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    const Point c{u(rng), u(rng)};
    switch (spec.kind) {
    case CoefficientKind::constant:
        return [](const Point&) { return 0.0; };
    case CoefficientKind::holder: {
        const double beta = spec.beta;
        // |x - c|^beta normalized on the unit-diameter scale.
        return [c, beta](const Point& x) { return std::min(1.0, std::pow(dist(x, c) / 2.0, beta)) * 2.0 - 1.0; };
    }
    case CoefficientKind::dini_log: {
        const double g = spec.gamma;
        return [c, g](const Point& x) {
            const double d = dist(x, c) / 4.0;
            if (d <= 0.0)
                return -1.0;
            return 2.0 * std::pow(std::log(std::exp(1.0) / d), -g) - 1.0;
        };
    }
    case CoefficientKind::checkerboard: {
        const double s = spec.scale;
        const Point off{0.5 * s * (u(rng) > 0 ? 1.0 : 0.0), 0.0};
        return [s, off](const Point& x) {
            const long ix = static_cast<long>(std::floor((x.x - off.x) / s));
            const long iy = static_cast<long>(std::floor((x.y - off.y) / s));
            return ((ix + iy) % 2 == 0) ? 1.0 : -1.0;
        };
    }
    case CoefficientKind::dmo_spiky: {
        const auto spikes = spike_layout(spec);
        return [spikes](const Point& x) {
            double v = 0.0;
            for (const Spike& sp : spikes) {
                const double d = dist(x, sp.center) / sp.radius;
                if (d < 1.0)
                    v = std::max(v, (1.0 - d) * sp.height);
            }
            return 2.0 * v - 1.0;
        };
    }
    }
    return [](const Point&) { return 0.0; };
}

inline CoefficientField make_coefficient(const CoefficientSpec& spec, DomainPtr dom, double lambda)
{
    if (!(lambda >= 1.0))
        throw Error(ErrorCode::invalid_parameter, "lambda must be at least 1");
    if (spec.kind == CoefficientKind::holder && !(spec.beta > 0.0 && spec.beta <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "holder exponent must lie in (0, 1]");
    if (spec.kind == CoefficientKind::dini_log && !(spec.gamma > 0.0))
        throw Error(ErrorCode::invalid_parameter, "dini_log exponent must be positive");
    if (spec.kind == CoefficientKind::checkerboard && !(spec.scale > 0.0))
        throw Error(ErrorCode::invalid_parameter, "checkerboard scale must be positive");
    if (!(std::abs(spec.amplitude) < 1.0))
        throw Error(ErrorCode::invalid_parameter, "amplitude must lie in (-1, 1)");
    const auto phi = coefficient_profile(spec);
    const double amp = spec.kind == CoefficientKind::constant ? 0.0 : spec.amplitude;
    CoefficientField c = sample_coefficient(std::move(dom), lambda, [&](const Point& x) { return (1.0 + amp * phi(x)) * spec.base; });
    ellipticity_check(c); // rejects specs outside [1/lambda, lambda]
    return c;
}

// ---------------------------------------------------------------------------
// CSV: `i,j,a11,a12,a21,a22` per active node; modulus reports `r,omega,flavor`.

inline void write_coefficient_csv(std::ostream& os, const CoefficientField& c)
{
    os << "nx,ny,h,kind\n" << c.domain->nx() << ',' << c.domain->ny() << ',' << detail::format_double(c.domain->h()) << ','
       << to_string(c.domain->kind()) << '\n';
    for (std::size_t k = 0; k < c.a.size(); ++k)
        if (c.domain->active(k)) {
            const Mat2& m = c.a[k];
            os << c.domain->grid().i_of(k) << ',' << c.domain->grid().j_of(k) << ',' << detail::format_double(m.xx) << ','
               << detail::format_double(m.xy) << ',' << detail::format_double(m.yx) << ',' << detail::format_double(m.yy) << '\n';
        }
}

inline CoefficientField read_coefficient_csv(std::istream& is, const DomainPtr& dom, double lambda)
{
    const detail::CsvRows csv = detail::read_rows(is);
    if (csv.grid.nx != dom->nx() || csv.grid.ny != dom->ny())
        throw Error(ErrorCode::parse, "coefficient lattice does not match domain");
    CoefficientField c;
    c.domain = dom;
    c.lambda = lambda;
    c.a.assign(dom->size(), Mat2::identity());
    for (const auto& r : csv.rows) {
        if (r.size() < 6)
            throw Error(ErrorCode::parse, "coefficient row needs i,j,a11,a12,a21,a22");
        const int i = std::stoi(r[0]), j = std::stoi(r[1]);
        if (!dom->grid().in_bounds(i, j))
            throw Error(ErrorCode::parse, "coefficient row index out of range");
        c.a[dom->grid().index(i, j)] = {detail::parse_double(r[2]), detail::parse_double(r[3]), detail::parse_double(r[4]),
                                        detail::parse_double(r[5])};
    }
    return c;
}

inline void write_modulus_csv(std::ostream& os, const OscillationModulus& m)
{
    os << "r,omega,flavor\n";
    for (std::size_t k = 0; k < m.radii.size(); ++k)
        os << detail::format_double(m.radii[k]) << ',' << detail::format_double(m.values[k]) << ',' << to_string(m.flavor) << '\n';
}

} // namespace wolfflab
