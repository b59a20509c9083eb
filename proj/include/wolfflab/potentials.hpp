#pragma once

// Truncated Wolff, Riesz and P_gamma potentials, their geometric-tail
// variants, dyadic sums and the Lorentz quasinorm.
//
// Every potential is a radial integral  int_0^R (M(t) t^-a)^e dt/t  with
// M(t) = |mu|(B_t(x)). Atomic measures are integrated exactly between ball
// mass breakpoints; density measures use log-spaced composite Simpson.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "measures.hpp"

namespace wolfflab {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

struct PotentialQuery {
    double beta = 0.5;
    double p = 2.0;
    double gamma = 1.0;
    double R = 1.0;
    int n = 2;

    static PotentialQuery wolff_1p(double p, double R = 1.0, int n = 2) { return {1.0 / p, p, 1.0, R, n}; }

    void validate() const
    {
        if (!(p > 1.0) || !std::isfinite(p))
            throw Error(ErrorCode::invalid_exponent, "p must exceed 1");
        if (n < 1)
            throw Error(ErrorCode::invalid_parameter, "dimension must be positive");
        if (!(beta > 0.0) || beta * p > n * (1.0 + 1e-14))
            throw Error(ErrorCode::invalid_exponent, "beta must lie in (0, n/p]");
        if (!(gamma > 0.0))
            throw Error(ErrorCode::invalid_exponent, "gamma must be positive");
        if (!(R > 0.0) || !std::isfinite(R))
            throw Error(ErrorCode::invalid_parameter, "R must be positive");
    }
};

struct QuadratureSettings {
    int per_decade = 64;
    double rel_tol = 1e-8;
    int max_per_decade = 4096;
};

namespace detail {

// int_lo^hi t^(-ae - 1) dt with c = -ae.
inline double power_segment(double lo, double hi, double c)
{
    if (hi <= lo)
        return 0.0;
    if (c == 0.0)
        return std::log(hi / lo);
    return (std::pow(hi, c) - std::pow(lo, c)) / c;
}

// Exact integral for purely atomic mu, evaluated at every radius in `Rs`
// (sorted ascending); returns cumulative values.
inline std::vector<double> atomic_radial(const RadonMeasure& mu, const Point& x, double a, double e,
                                         const std::vector<double>& Rs)
{
    const auto prof = mu.atom_profile(x);
    const double c = -a * e;
    std::vector<double> out(Rs.size(), 0.0);
    double mass = 0.0, acc = 0.0, t_prev = 0.0;
    std::size_t k = 0;
    for (std::size_t r = 0; r < Rs.size(); ++r) {
        const double R = Rs[r];
        // Advance through breakpoints below R.
        while (k < prof.size() && prof[k].first < R) {
            if (mass > 0.0)
                acc += std::pow(mass, e) * power_segment(t_prev, prof[k].first, c);
            t_prev = prof[k].first;
            mass += prof[k].second;
            if (t_prev == 0.0 && mass > 0.0)
                acc = infinity; // atom at x: t^(c-1) is not integrable at 0 for c <= 0
            ++k;
        }
        double v = acc;
        if (mass > 0.0 && std::isfinite(v))
            v += std::pow(mass, e) * power_segment(t_prev, R, c);
        out[r] = v;
        // Keep t_prev / acc at the last breakpoint; R values only sample.
    }
    return out;
}

inline double simpson_log(const RadonMeasure& mu, const Point& x, double a, double e, double lo, double hi, int per_decade)
{
    const double la = std::log(lo), lb = std::log(hi);
    int n = std::max(2, static_cast<int>(std::ceil((lb - la) / std::log(10.0) * per_decade)));
    n += n % 2;
    const double dl = (lb - la) / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = std::exp(la + k * dl);
        const double m = mu.cell_ball_mass(x, t);
        const double f = m > 0.0 ? std::pow(m * std::pow(t, -a), e) : 0.0;
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        acc += w * f;
    }
    return acc * dl / 3.0;
}

inline std::vector<double> density_radial(const RadonMeasure& mu, const Point& x, double a, double e,
                                          const std::vector<double>& Rs, const QuadratureSettings& qs)
{
    const int dim = 2;
    std::vector<double> out(Rs.size(), 0.0);
    for (const Atom& at : mu.atoms())
        if (at.weight != 0.0 && dist(at.at, x) == 0.0) {
            std::fill(out.begin(), out.end(), infinity);
            return out;
        }
    // Piece cuts: atom distances and the requested radii.
    std::vector<double> cuts;
    for (const auto& pr : mu.atom_profile(x))
        cuts.push_back(pr.first);
    const double R_max = Rs.back();
    double ts = std::min(mu.density_quadratic_radius(x), R_max);
    for (double cdist : cuts)
        ts = std::min(ts, cdist);
    // Below ts the mass is exactly K t^2.
    double acc = 0.0;
    if (ts > 0.0) {
        const double K = mu.cell_ball_mass(x, ts) / (ts * ts);
        const double expo = (dim - a) * e;
        if (K > 0.0)
            acc = expo > 0.0 ? std::pow(K, e) * std::pow(ts, expo) / expo : infinity;
    }
    cuts.insert(cuts.end(), Rs.begin(), Rs.end());
    cuts.push_back(ts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double t_prev = ts;
    std::size_t r = 0;
    while (r < Rs.size() && Rs[r] <= ts) {
        // Radius inside the quadratic piece.
        const double K = ts > 0.0 ? mu.cell_ball_mass(x, ts) / (ts * ts) : 0.0;
        const double expo = (dim - a) * e;
        out[r] = K > 0.0 ? std::pow(K, e) * std::pow(Rs[r], expo) / expo : 0.0;
        ++r;
    }
    for (double cut : cuts) {
        if (cut <= t_prev)
            continue;
        if (std::isfinite(acc)) {
            double coarse = simpson_log(mu, x, a, e, t_prev, cut, qs.per_decade);
            for (int pd = 2 * qs.per_decade; pd <= qs.max_per_decade; pd *= 2) {
                const double fine = simpson_log(mu, x, a, e, t_prev, cut, pd);
                const bool done = std::abs(fine - coarse) <= qs.rel_tol * std::max(std::abs(fine), 1e-300);
                coarse = fine;
                if (done)
                    break;
            }
            acc += coarse;
        }
        t_prev = cut;
        while (r < Rs.size() && Rs[r] <= cut) {
            out[r] = acc;
            ++r;
        }
    }
    return out;
}

} // namespace detail

// int_0^R_k (|mu|(B_t(x)) t^-a)^e dt/t for every R_k in Rs (any order).
inline std::vector<double> radial_potential(const RadonMeasure& mu, const Point& x, double a, double e,
                                            std::vector<double> Rs, const QuadratureSettings& qs = {})
{
    if (Rs.empty())
        return {};
    std::vector<std::size_t> order(Rs.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return Rs[i] < Rs[j]; });
    std::vector<double> sorted;
    for (std::size_t k : order)
        sorted.push_back(Rs[k]);
    for (double R : sorted)
        if (!(R > 0.0))
            throw Error(ErrorCode::invalid_parameter, "potential radius must be positive");
    const std::vector<double> vals =
        mu.is_atomic() ? detail::atomic_radial(mu, x, a, e, sorted) : detail::density_radial(mu, x, a, e, sorted, qs);
    std::vector<double> out(Rs.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        out[order[k]] = vals[k];
    return out;
}

inline double radial_potential(const RadonMeasure& mu, const Point& x, double a, double e, double R,
                               const QuadratureSettings& qs = {})
{
    return radial_potential(mu, x, a, e, std::vector<double>{R}, qs).front();
}

inline double wolff(const RadonMeasure& mu, const Point& x, const PotentialQuery& q)
{
    q.validate();
    return radial_potential(mu, x, q.n - q.beta * q.p, 1.0 / (q.p - 1.0), q.R);
}

inline double riesz(const RadonMeasure& mu, const Point& x, double R, int n = 2)
{
    if (!(R > 0.0))
        throw Error(ErrorCode::invalid_parameter, "R must be positive");
    return radial_potential(mu, x, n - 1.0, 1.0, R);
}

inline double p_gamma(const RadonMeasure& mu, const Point& x, double gamma, double R, int n = 2)
{
    if (!(gamma > 0.0))
        throw Error(ErrorCode::invalid_exponent, "gamma must be positive");
    if (!(R > 0.0))
        throw Error(ErrorCode::invalid_parameter, "R must be positive");
    return radial_potential(mu, x, n - 1.0, gamma, R);
}

namespace detail {

// Radii eps^-i rho (i >= 1) up to the first one above R/2, plus R/2 itself.
inline std::vector<double> tail_radii(double rho, double eps, double R)
{
    std::vector<double> r;
    double t = rho;
    for (int i = 1; i < 4096; ++i) {
        t /= eps;
        if (t > 0.5 * R)
            break;
        r.push_back(t);
    }
    r.push_back(0.5 * R);
    return r;
}

inline void check_tail_parameters(double rho, double eps, double alpha1, double R)
{
    if (!(eps > 0.0 && eps < 1.0) || !(alpha1 > 0.0 && alpha1 < 1.0))
        throw Error(ErrorCode::invalid_parameter, "need eps, alpha1 in (0, 1)");
    if (!(R > 0.0) || !(rho > 0.0) || rho > R)
        throw Error(ErrorCode::invalid_parameter, "need 0 < rho <= R");
}

template <class Pot>
double tilde_sum(Pot&& values_at, double rho, double eps, double alpha1, double R)
{
    check_tail_parameters(rho, eps, alpha1, R);
    const auto radii = tail_radii(rho, eps, R);
    const std::vector<double> v = values_at(radii);
    // v[k] = potential at radius eps^-(k+1) rho, last entry at R/2.
    return capped_geometric_sum(
        [&](double r) {
            if (r >= 0.5 * R)
                return v.back();
            const auto it = std::lower_bound(radii.begin(), radii.end(), r * (1.0 - 1e-12));
            return v[static_cast<std::size_t>(it - radii.begin())];
        },
        eps, alpha1, R, rho);
}

} // namespace detail

// sum_{i>=1} eps^(a1 i) W^{min(eps^-i rho, R/2)}_{beta,p}(x), capped tail in closed form.
inline double tilde_wolff(const RadonMeasure& mu, const Point& x, double rho, double eps, double alpha1, double R,
                          const PotentialQuery& q)
{
    q.validate();
    return detail::tilde_sum(
        [&](const std::vector<double>& radii) { return radial_potential(mu, x, q.n - q.beta * q.p, 1.0 / (q.p - 1.0), radii); },
        rho, eps, alpha1, R);
}

inline double tilde_riesz(const RadonMeasure& mu, const Point& x, double rho, double eps, double alpha1, double R, int n = 2)
{
    return detail::tilde_sum([&](const std::vector<double>& radii) { return radial_potential(mu, x, n - 1.0, 1.0, radii); },
                             rho, eps, alpha1, R);
}

struct DyadicComparison {
    double sum = 0.0;
    double integral = 0.0;
    double ratio = 0.0; // sum / integral, 0 when both vanish
};

// sum_{j=j0}^{d} (|mu|(B_{2 eps^j R}(x)) / (eps^j R)^(n-1))^(1/(p-1)) against
// W^{2 eps^(j0-1) R}_{1/p,p}(x).
inline DyadicComparison dyadic_sum(const RadonMeasure& mu, const Point& x, double eps, double R, int j0, int d, double p,
                                   int n = 2)
{
    if (j0 > d)
        throw Error(ErrorCode::invalid_parameter, "need j0 <= d");
    if (!(eps > 0.0 && eps < 1.0) || !(R > 0.0) || !(p > 1.0))
        throw Error(ErrorCode::invalid_parameter, "need eps in (0, 1), R > 0, p > 1");
    DyadicComparison out;
    for (int j = j0; j <= d; ++j) {
        const double r = std::pow(eps, j) * R;
        const double m = mu.ball_mass(x, 2.0 * r);
        if (m > 0.0)
            out.sum += std::pow(m / std::pow(r, n - 1.0), 1.0 / (p - 1.0));
    }
    out.integral = wolff(mu, x, {1.0 / p, p, 1.0, 2.0 * std::pow(eps, j0 - 1) * R, n});
    if (out.sum == 0.0)
        out.ratio = 0.0;
    else
        out.ratio = out.integral > 0.0 ? out.sum / out.integral : infinity;
    return out;
}

struct Domination {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 1.0;
};

// W^rho_{1/p,p}(x) against (I_1^{2 rho}(x))^(1/(p-1)) for 1 < p < 2.
inline Domination wolff_riesz_domination(const RadonMeasure& mu, const Point& x, double rho, double p, int n = 2)
{
    if (!(p > 1.0 && p < 2.0))
        throw Error(ErrorCode::invalid_exponent, "domination needs 1 < p < 2");
    Domination d;
    d.lhs = wolff(mu, x, {1.0 / p, p, 1.0, rho, n});
    d.rhs = std::pow(riesz(mu, x, 2.0 * rho, n), 1.0 / (p - 1.0));
    if (d.lhs == 0.0 && d.rhs == 0.0)
        d.ratio = 1.0;
    else if (std::isinf(d.lhs) && std::isinf(d.rhs))
        d.ratio = 1.0;
    else
        d.ratio = d.rhs > 0.0 ? d.lhs / d.rhs : infinity;
    return d;
}

// ( int_0^inf (t^n |{|f| > t}|)^(gamma/n) dt/t )^(1/gamma), level sets measured
// as node count * h^2; exact for the piecewise-constant distribution function.
inline double lorentz_quasinorm(const ScalarField& f, int n, double gamma)
{
    if (!(gamma > 0.0))
        throw Error(ErrorCode::invalid_exponent, "gamma must be positive");
    const double h2 = f.domain->h() * f.domain->h();
    std::vector<double> v;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (f.domain->active(k) && f.values[k] != 0.0)
            v.push_back(std::abs(f.values[k]));
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const double top = v.back();
    double acc = 0.0, prev = 0.0;
    std::size_t k = 0;
    while (k < v.size()) {
        const double level = v[k];
        // For t in [prev, level) the level set {|f| > t} has v.size() - k nodes.
        const double m = static_cast<double>(v.size() - k) * h2;
        acc += std::pow(m, gamma / n) * (std::pow(level / top, gamma) - std::pow(prev / top, gamma)) / gamma;
        prev = level;
        while (k < v.size() && v[k] == level)
            ++k;
    }
    return top * std::pow(acc, 1.0 / gamma);
}

} // namespace wolfflab
