#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "numerics.hpp"
#include "solver.hpp"

namespace wolfflab {

struct ExcessResult {
    double value = 0.0;
    Vec2 q{};             // minimizing vector
    double theta = 0.0;   // minimizing normal offset (boundary flavor)
    bool certified = true; // false when the minimizer is a heuristic best-found
    std::size_t nodes = 0;
};

enum class ExcessFlavor { l1, lgamma, boundary };

inline const char* to_string(ExcessFlavor f)
{
    switch (f) {
    case ExcessFlavor::l1: return "phi";
    case ExcessFlavor::lgamma: return "psi";
    case ExcessFlavor::boundary: return "boundary";
    }
    return "?";
}

namespace detail {

inline Region excess_region(const VectorField& g, const Point& x, double r, double min_radius_in_h = 4.0)
{
    const double h = g.domain->h();
    if (!(r > 0.0))
        throw Error(ErrorCode::invalid_parameter, "radius must be positive");
    if (r < min_radius_in_h * h * (1.0 - 1e-12))
        throw Error(ErrorCode::under_resolved_radius, "radius " + format_double(r) + " is below " +
                                                          format_double(min_radius_in_h) + "h");
    Region reg = ball_region(*g.domain, x, r);
    if (reg.empty())
        throw Error(ErrorCode::empty_region, "ball contains no domain nodes");
    return reg;
}

inline double median_of(std::vector<double> v)
{
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean_distance(const std::vector<Vec2>& pts, const Vec2& q)
{
    double acc = 0.0;
    for (const Vec2& p : pts)
        acc += norm(p - q);
    return acc / static_cast<double>(pts.size());
}

inline double power_mean_distance(const std::vector<Vec2>& pts, const Vec2& q, double gamma)
{
    double acc = 0.0;
    for (const Vec2& p : pts)
        acc += std::pow(norm(p - q), gamma);
    return std::pow(acc / static_cast<double>(pts.size()), 1.0 / gamma);
}

// Geometric median (Weiszfeld with the Vardi-Zhang step at data points).
inline Vec2 geometric_median(const std::vector<Vec2>& pts, double tol = 1e-10)
{
    std::vector<double> xs, ys;
    double scale = 0.0;
    for (const Vec2& p : pts) {
        xs.push_back(p.x);
        ys.push_back(p.y);
        scale = std::max(scale, std::max(std::abs(p.x), std::abs(p.y)));
    }
    Vec2 q{median_of(xs), median_of(ys)};
    const double step_tol = tol * 1e-3 * std::max(scale, 1.0);
    const double coincide = 1e-15 * std::max(scale, 1.0);
    for (int it = 0; it < 20000; ++it) {
        Vec2 num{0.0, 0.0}, pull{0.0, 0.0};
        double den = 0.0;
        int hits = 0;
        for (const Vec2& p : pts) {
            const double d = norm(p - q);
            if (d <= coincide) {
                ++hits;
                continue;
            }
            num = num + (1.0 / d) * p;
            pull = pull + (1.0 / d) * (p - q);
            den += 1.0 / d;
        }
        if (den == 0.0)
            break;
        const Vec2 T = (1.0 / den) * num;
        Vec2 next = T;
        if (hits > 0) {
            const double rn = norm(pull);
            if (rn <= static_cast<double>(hits))
                break; // q is a data point satisfying the optimality condition
            const double beta = static_cast<double>(hits) / rn;
            next = (1.0 - beta) * T + beta * q;
        }
        const double move = norm(next - q);
        q = next;
        if (move <= step_tol)
            break;
    }
    return q;
}

// Derivative-free compass descent of f from q with initial step `step`.
template <class F>
Vec2 compass_descent(F&& f, Vec2 q, double step, double min_step)
{
    static const Vec2 dirs[8] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                 {M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, -M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2}, {-M_SQRT1_2, M_SQRT1_2}};
    double best = f(q);
    int guard = 0;
    while (step > min_step && guard++ < 4000) {
        bool moved = false;
        for (const Vec2& d : dirs) {
            const Vec2 c = q + step * d;
            const double v = f(c);
            if (v < best) {
                best = v;
                q = c;
                moved = true;
                break;
            }
        }
        if (!moved)
            step *= 0.5;
    }
    return q;
}

inline std::vector<Vec2> gather(const VectorField& g, const Region& reg)
{
    std::vector<Vec2> pts;
    pts.reserve(reg.size());
    for (std::size_t k : reg.nodes)
        pts.push_back(g.values[k]);
    return pts;
}

inline ExcessResult l1_excess_of(const std::vector<Vec2>& pts)
{
    ExcessResult res;
    res.q = geometric_median(pts);
    res.value = mean_distance(pts, res.q);
    res.nodes = pts.size();
    return res;
}

inline constexpr std::size_t max_point_candidates = 512;

inline ExcessResult lgamma_excess_of(const std::vector<Vec2>& pts, double gamma)
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw Error(ErrorCode::invalid_exponent, "gamma0 must lie in (0, 1]");
    ExcessResult l1 = l1_excess_of(pts);
    if (gamma == 1.0)
        return l1;
    auto obj = [&](const Vec2& q) { return power_mean_distance(pts, q, gamma); };
    std::vector<Vec2> cand{l1.q};
    {
        std::vector<double> xs, ys;
        for (const Vec2& p : pts) {
            xs.push_back(p.x);
            ys.push_back(p.y);
        }
        cand.push_back({median_of(xs), median_of(ys)});
    }
    const std::size_t stride = std::max<std::size_t>(1, (pts.size() + max_point_candidates - 1) / max_point_candidates);
    for (std::size_t k = 0; k < pts.size(); k += stride)
        cand.push_back(pts[k]);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t c = 0; c < cand.size(); ++c)
        scored.emplace_back(obj(cand[c]), c);
    std::sort(scored.begin(), scored.end());
    double spread = 0.0;
    for (const Vec2& p : pts)
        spread = std::max(spread, norm(p - l1.q));
    ExcessResult res;
    res.nodes = pts.size();
    res.certified = false;
    res.value = scored.front().first;
    res.q = cand[scored.front().second];
    const std::size_t refine = std::min<std::size_t>(4, scored.size());
    for (std::size_t c = 0; c < refine; ++c) {
        const Vec2 q = compass_descent(obj, cand[scored[c].second], 0.25 * std::max(spread, 1e-300),
                                       1e-10 * std::max(spread, 1e-300));
        const double v = obj(q);
        if (v < res.value) {
            res.value = v;
            res.q = q;
        }
    }
    return res;
}

} // namespace detail

// phi(x, r) = min_q mean_{B_r(x)} |g - q|
inline ExcessResult excess_l1(const VectorField& g, const Point& x, double r)
{
    return detail::l1_excess_of(detail::gather(g, detail::excess_region(g, x, r)));
}

// psi(x, r) = min_q (mean_{B_r(x)} |g - q|^gamma0)^(1/gamma0); heuristic for gamma0 < 1
inline ExcessResult excess_lgamma(const VectorField& g, const Point& x, double r, double gamma0)
{
    if (!(gamma0 > 0.0 && gamma0 <= 1.0))
        throw Error(ErrorCode::invalid_exponent, "gamma0 must lie in (0, 1]");
    return detail::lgamma_excess_of(detail::gather(g, detail::excess_region(g, x, r)), gamma0);
}

namespace detail {

// Boundary excess over already-projected components: gn normal, gt tangential magnitudes.
inline ExcessResult boundary_excess_of(std::vector<double> gn, const std::vector<double>& gt, double gamma)
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw Error(ErrorCode::invalid_exponent, "gamma0 must lie in (0, 1]");
    const double n = static_cast<double>(gn.size());
    ExcessResult res;
    res.nodes = gn.size();
    if (gamma == 1.0) {
        double tang = 0.0;
        for (double t : gt)
            tang += t;
        res.theta = median_of(gn); // midpoint of the median interval
        double acc = 0.0;
        for (double v : gn)
            acc += std::abs(v - res.theta);
        res.value = (acc + tang) / n;
        return res;
    }
    // For gamma < 1 the objective is concave between consecutive values of
    // gn, so its minimum is attained at one of them.
    double tang = 0.0;
    for (double t : gt)
        tang += std::pow(t, gamma);
    std::vector<double> vals = gn;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    double best = std::numeric_limits<double>::infinity();
    for (double th : vals) {
        double acc = 0.0;
        for (double v : gn)
            acc += std::pow(std::abs(v - th), gamma);
        if (acc < best) {
            best = acc;
            res.theta = th;
        }
    }
    res.value = std::pow((best + tang) / n, 1.0 / gamma);
    return res;
}

} // namespace detail

// Boundary excess over Omega_r(x) with normal direction `normal` (unit).
inline ExcessResult boundary_excess(const VectorField& g, const Point& x, double r, double gamma0 = 1.0,
                                    const Vec2& normal = {0.0, 1.0})
{
    const Region reg = detail::excess_region(g, x, r, 2.0);
    const double nn = norm(normal);
    if (!(nn > 0.0))
        throw Error(ErrorCode::invalid_parameter, "normal must be nonzero");
    const Vec2 nu = (1.0 / nn) * normal;
    std::vector<double> gn, gt;
    for (std::size_t k : reg.nodes) {
        const Vec2& v = g.values[k];
        const double c = dot(v, nu);
        gn.push_back(c);
        gt.push_back(norm(v - c * nu));
    }
    return detail::boundary_excess_of(std::move(gn), gt, gamma0);
}

struct ExcessProfile {
    Point center{};
    double R = 0.0;
    double eps = 0.5;
    double gamma0 = 1.0;
    ExcessFlavor flavor = ExcessFlavor::l1;
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<Vec2> q;
    std::vector<double> theta;
    std::vector<std::size_t> nodes;
    bool truncated = false; // levels below 4h were dropped

    std::size_t levels() const { return values.size(); }
    // |q_{j+1} - q_j| and the bound phi_{j+1} + (N_j / N_{j+1}) phi_j from the
    // triangle inequality on the nested node sets.
    double jump(std::size_t j) const { return norm(q[j + 1] - q[j]); }
    double jump_bound(std::size_t j) const
    {
        return values[j + 1] + static_cast<double>(nodes[j]) / static_cast<double>(nodes[j + 1]) * values[j];
    }
};

inline ExcessProfile profile(const VectorField& g, const Point& x, double R, double eps, int J,
                             ExcessFlavor flavor = ExcessFlavor::l1, double gamma0 = 1.0,
                             const Vec2& normal = {0.0, 1.0})
{
    if (!(eps > 0.0 && eps < 1.0))
        throw Error(ErrorCode::invalid_parameter, "eps must lie in (0, 1)");
    if (J < 0)
        throw Error(ErrorCode::invalid_parameter, "J must be nonnegative");
    ExcessProfile prof;
    prof.center = x;
    prof.R = R;
    prof.eps = eps;
    prof.gamma0 = gamma0;
    prof.flavor = flavor;
    const double h = g.domain->h();
    const double floor_r = (flavor == ExcessFlavor::boundary ? 2.0 : 4.0) * h;
    double r = R;
    for (int j = 0; j <= J; ++j, r *= eps) {
        if (r < floor_r * (1.0 - 1e-12)) {
            prof.truncated = true;
            break;
        }
        ExcessResult e;
        switch (flavor) {
        case ExcessFlavor::l1: e = excess_l1(g, x, r); break;
        case ExcessFlavor::lgamma: e = excess_lgamma(g, x, r, gamma0); break;
        case ExcessFlavor::boundary: e = boundary_excess(g, x, r, gamma0, normal); break;
        }
        prof.radii.push_back(r);
        prof.values.push_back(e.value);
        prof.q.push_back(e.q);
        prof.theta.push_back(e.theta);
        prof.nodes.push_back(e.nodes);
    }
    if (prof.values.empty())
        throw Error(ErrorCode::under_resolved_radius, "base radius is below the resolution floor");
    return prof;
}

struct DecayFit {
    double slope = 0.0;     // raw least-squares slope of log phi_j against log r_j
    double alpha_hat = 0.0; // slope clipped to [0, 1]
    double r_min = 0.0, r_max = 0.0;
    double residual = 0.0;
    double slope_stderr = 0.0;
    int levels = 0;
    double alpha1() const { return alpha_hat / 2.0; }
    double alpha2() const { return 3.0 * alpha_hat / 4.0; }
    bool positive() const { return slope > 0.0; }
};

inline constexpr double default_noise_floor = 10.0 * SolverConfig{}.tol;

inline DecayFit decay_fit(const ExcessProfile& prof, double noise_floor = default_noise_floor)
{
    std::vector<double> lx, ly;
    for (std::size_t j = 0; j < prof.levels(); ++j)
        if (prof.values[j] > noise_floor) {
            lx.push_back(std::log(prof.radii[j]));
            ly.push_back(std::log(prof.values[j]));
        }
    if (lx.size() < 3)
        throw Error(ErrorCode::degenerate_fit, "fewer than 3 levels above the noise floor");
    const LinearFit f = least_squares(lx, ly);
    DecayFit d;
    d.slope = f.slope;
    d.alpha_hat = std::clamp(f.slope, 0.0, 1.0);
    d.residual = f.residual;
    d.slope_stderr = f.slope_stderr;
    d.levels = static_cast<int>(lx.size());
    d.r_min = std::exp(*std::min_element(lx.begin(), lx.end()));
    d.r_max = std::exp(*std::max_element(lx.begin(), lx.end()));
    return d;
}

enum class EstimateCase { i, ii, iii };

inline EstimateCase estimate_case(double p)
{
    if (!(p > 1.0)) throw Error(ErrorCode::invalid_exponent, "p must exceed 1");
    if (p >= 2.0) return EstimateCase::i;
    if (p >= 1.5) return EstimateCase::ii;
    return EstimateCase::iii;
}

inline const char* to_string(EstimateCase c)
{
    switch (c) {
    case EstimateCase::i: return "i";
    case EstimateCase::ii: return "ii";
    case EstimateCase::iii: return "iii";
    }
    return "?";
}

// Power-mean exponent of each case: 1, 2 - p, (p - 1)^2 / 2.
inline double case_gamma0(double p)
{
    switch (estimate_case(p)) {
    case EstimateCase::i: return 1.0;
    case EstimateCase::ii: return 2.0 - p;
    case EstimateCase::iii: return (p - 1.0) * (p - 1.0) / 2.0;
    }
    return 1.0;
}

struct StepReport {
    EstimateCase which = EstimateCase::i;
    double gamma0 = 1.0;
    double lhs = 0.0;
    double decay_term = 0.0;       // eps^alpha phi(r)
    double measure_term = 0.0;     // eps^(-n/gamma0) (|mu|(B_2r) / r^(n-1))^(1/(p-1))
    double mixed_term = 0.0;       // p < 2: measure times the average term
    double coefficient_term = 0.0; // modulus times the average term
    double rhs = 0.0;
    double C_fit = 0.0;
};

// One-step excess inequality at x0: lhs = phi_u(x0, eps r) (psi for p < 2),
// rhs = sum of the case terms with unit constants; C_fit = lhs / rhs.
inline StepReport excess_step_check(const Solution& u, const RadonMeasure& mu, double omega_r, double p, double s,
                                    const Point& x0, double r, double eps, double alpha, int n = 2)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw Error(ErrorCode::invalid_parameter, "eps must lie in (0, 1)");
    detail::require_compact_ball(*u.domain(), x0, 2.0 * r);
    StepReport rep;
    rep.which = estimate_case(p);
    rep.gamma0 = case_gamma0(p);
    const double g0 = rep.gamma0;
    const VectorField& g = u.grad;
    auto exc = [&](double rad) {
        return rep.which == EstimateCase::i ? excess_l1(g, x0, rad).value : excess_lgamma(g, x0, rad, g0).value;
    };
    rep.lhs = exc(eps * r);
    rep.decay_term = std::pow(eps, alpha) * exc(r);
    const double M = mu.ball_mass(x0, 2.0 * r) / std::pow(r, n - 1);
    const double pre = std::pow(eps, -static_cast<double>(n) / g0);
    rep.measure_term = pre * std::pow(M, 1.0 / (p - 1.0));
    const Region big = ball_region(*u.domain(), x0, 2.0 * r);
    auto shifted_mean = [&](double q) {
        double acc = 0.0;
        for (std::size_t k : big.nodes)
            acc += std::pow(norm(g.values[k]) + s, q);
        return acc / static_cast<double>(big.size());
    };
    switch (rep.which) {
    case EstimateCase::i:
        rep.coefficient_term = pre * std::pow(omega_r, 2.0 / p) * shifted_mean(1.0);
        break;
    case EstimateCase::ii: {
        const double m = shifted_mean(2.0 - p);
        rep.mixed_term = pre * M * m;
        rep.coefficient_term = pre * omega_r * std::pow(m, 1.0 / (2.0 - p));
        break;
    }
    case EstimateCase::iii: {
        const double m = shifted_mean(g0);
        rep.mixed_term = pre * M * std::pow(m, (2.0 - p) / g0);
        rep.coefficient_term = pre * omega_r * std::pow(m, 1.0 / g0);
        break;
    }
    }
    rep.rhs = rep.decay_term + rep.measure_term + rep.mixed_term + rep.coefficient_term;
    rep.C_fit = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

inline void write_profile_csv(std::ostream& os, const ExcessProfile& prof)
{
    const bool boundary = prof.flavor == ExcessFlavor::boundary;
    os << (boundary ? "j,r_j,excess,theta,flavor\n" : "j,r_j,excess,q1,q2,flavor\n");
    for (std::size_t j = 0; j < prof.levels(); ++j) {
        os << j << ',' << detail::format_double(prof.radii[j]) << ',' << detail::format_double(prof.values[j]) << ',';
        if (boundary)
            os << detail::format_double(prof.theta[j]);
        else
            os << detail::format_double(prof.q[j].x) << ',' << detail::format_double(prof.q[j].y);
        os << ',' << to_string(prof.flavor) << '\n';
    }
}

} // namespace wolfflab
