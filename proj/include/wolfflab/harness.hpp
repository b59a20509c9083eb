#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "excess.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "potentials.hpp"
#include "solver.hpp"
#include "vec2.hpp"

namespace wolfflab {

// ---------------------------------------------------------------------------
// Radial oracle: the fundamental solution of the p-Laplacian with a unit
// atom at the origin, vanishing on |x| = R.

struct RadialOracle {
    double u = 0.0;
    double grad = 0.0;
    double wolff = 0.0; // W^R_{1/p,p}(delta_0)(x)
    double riesz = 0.0; // I_1^R(delta_0)(x)
    bool pole = false;
};

inline double sphere_area(int n) { return 2.0 * std::pow(std::acos(-1.0), 0.5 * n) / std::tgamma(0.5 * n); }

inline RadialOracle oracle_radial(int n, double p, double r, double R)
{
    if (n < 2)
        throw Error(ErrorCode::invalid_parameter, "dimension must be at least 2");
    if (!(p > 1.0) || !std::isfinite(p))
        throw Error(ErrorCode::invalid_exponent, "p must exceed 1");
    if (!(R > 0.0) || !(r >= 0.0))
        throw Error(ErrorCode::invalid_parameter, "need R > 0 and r >= 0");
    RadialOracle o;
    if (r == 0.0) {
        o.u = o.grad = o.wolff = o.riesz = infinity;
        o.pole = true;
        return o;
    }
    const double area = sphere_area(n);
    const double e = 1.0 / (p - 1.0);
    o.grad = std::pow(area * std::pow(r, n - 1), -e);
    const double k = 1.0 - (n - 1.0) * e; // exponent of the antiderivative
    if (p == static_cast<double>(n))
        o.u = std::pow(area, -e) * std::log(R / r);
    else
        o.u = std::pow(area, -e) * (std::pow(R, k) - std::pow(r, k)) / k;
    if (r < R) {
        const double c = (n - 1.0) * e;
        o.wolff = (std::pow(r, -c) - std::pow(R, -c)) / c;
        o.riesz = (std::pow(r, 1.0 - n) - std::pow(R, 1.0 - n)) / (n - 1.0);
    }
    return o;
}

inline RadialOracle oracle_radial(int n, double p, const Point& x, double R) { return oracle_radial(n, p, norm(x), R); }

// ---------------------------------------------------------------------------
// Constant fitting.

struct ConstantFit {
    double C_fit = 0.0;
    double nonvacuous = 0.0; // fraction of pairs with rhs > 10 tol
    std::size_t counted = 0; // pairs entering the max
};

inline constexpr double default_fit_tol = 1e-6;

inline ConstantFit fit_constant(const std::vector<std::pair<double, double>>& pairs, double tol = default_fit_tol)
{
    ConstantFit f;
    std::size_t big = 0;
    for (const auto& [lhs, rhs] : pairs) {
        if (!std::isfinite(lhs) || !(lhs >= 0.0) || std::isnan(rhs) || rhs < 0.0)
            throw Error(ErrorCode::invalid_parameter, "fit pairs need finite lhs >= 0 and rhs >= 0");
        if (rhs > 10.0 * tol)
            ++big;
        if (rhs == 0.0) {
            if (lhs > tol)
                throw Error(ErrorCode::hard_failure,
                            "rhs vanishes where lhs = " + detail::format_double(lhs) + " exceeds the tolerance");
            continue;
        }
        ++f.counted;
        f.C_fit = std::max(f.C_fit, lhs / rhs);
    }
    f.nonvacuous = pairs.empty() ? 0.0 : static_cast<double>(big) / static_cast<double>(pairs.size());
    return f;
}

// Refinement ratio of two fitted constants, >= 1; 1 when both vanish.
inline double mesh_stability(double c_coarse, double c_fine)
{
    if (c_coarse == 0.0 && c_fine == 0.0)
        return 1.0;
    if (c_coarse == 0.0 || c_fine == 0.0)
        return infinity;
    return std::max(c_fine / c_coarse, c_coarse / c_fine);
}

// ---------------------------------------------------------------------------
// Scenarios.

enum class MeasureKind { zero, delta, two_atom, uniform_density };

inline const char* to_string(MeasureKind k)
{
    switch (k) {
    case MeasureKind::zero: return "zero";
    case MeasureKind::delta: return "delta";
    case MeasureKind::two_atom: return "two_atom";
    case MeasureKind::uniform_density: return "uniform_density";
    }
    return "zero";
}

inline MeasureKind measure_kind_from_string(const std::string& s)
{
    if (s == "zero") return MeasureKind::zero;
    if (s == "delta") return MeasureKind::delta;
    if (s == "two_atom") return MeasureKind::two_atom;
    if (s == "uniform_density") return MeasureKind::uniform_density;
    throw Error(ErrorCode::parse, "unknown measure kind '" + s + "'");
}

struct MeasureSpec {
    MeasureKind kind = MeasureKind::zero;
    double mass = 1.0;
    std::vector<Point> atoms; // delta / two_atom: equal shares of the mass
    Point center{};           // uniform_density: disk center
    double radius = 0.5;      // uniform_density: disk radius
};

enum class BoundaryKind { zero, affine, quadratic, flat_zero };

inline const char* to_string(BoundaryKind k)
{
    switch (k) {
    case BoundaryKind::zero: return "zero";
    case BoundaryKind::affine: return "affine";
    case BoundaryKind::quadratic: return "quadratic";
    case BoundaryKind::flat_zero: return "flat_zero";
    }
    return "zero";
}

inline BoundaryKind boundary_kind_from_string(const std::string& s)
{
    if (s == "zero") return BoundaryKind::zero;
    if (s == "affine") return BoundaryKind::affine;
    if (s == "quadratic") return BoundaryKind::quadratic;
    if (s == "flat_zero") return BoundaryKind::flat_zero;
    throw Error(ErrorCode::parse, "unknown boundary kind '" + s + "'");
}

// g = offset + slope . x (+ curvature (x1^2 - x2^2) for quadratic);
// flat_zero multiplies by x2 so g vanishes on the flat side of a half disk.
struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::zero;
    Vec2 slope{1.0, 0.0};
    double offset = 0.0;
    double curvature = 0.0;

    double operator()(const Point& x) const
    {
        const double lin = offset + dot(slope, x);
        switch (kind) {
        case BoundaryKind::zero: return 0.0;
        case BoundaryKind::affine: return lin;
        case BoundaryKind::quadratic: return lin + curvature * (x.x * x.x - x.y * x.y);
        case BoundaryKind::flat_zero: return x.y * (1.0 + lin);
        }
        return 0.0;
    }
};

struct DomainSpec {
    DomainKind kind = DomainKind::square;
    double half_width = 1.0;
    double chi_amplitude = 0.2; // graph_domain: chi(x) = A sin(k x)
    double chi_frequency = 3.0;

    std::function<double(double)> chi() const
    {
        const double a = chi_amplitude, k = chi_frequency;
        return [a, k](double t) { return a * std::sin(k * t); };
    }
};

inline DomainPtr make_domain(const DomainSpec& spec, int mesh)
{
    switch (spec.kind) {
    case DomainKind::square: return share(Domain::square(spec.half_width, mesh));
    case DomainKind::disk: return share(Domain::disk(spec.half_width, mesh));
    case DomainKind::half_disk: return share(Domain::half_disk(spec.half_width, mesh));
    case DomainKind::graph_domain: return share(Domain::graph(spec.half_width, mesh, spec.chi()));
    default: break;
    }
    throw Error(ErrorCode::invalid_domain, std::string("scenario domains cannot be of kind ") + to_string(spec.kind));
}

struct Scenario {
    std::string id = "scenario";
    std::uint64_t seed = 0;
    double p = 2.0;
    double s = 0.0;
    double lambda = 2.0;
    CoefficientSpec coefficient;
    MeasureSpec measure;
    DomainSpec domain;
    BoundarySpec boundary;
    int coarse = 129;
    int fine = 257;
    double R = 0.25;
    std::vector<std::string> targets{"interior"};
    SolverConfig solver;

    void validate() const
    {
        if (!(p > 1.0) || !std::isfinite(p))
            throw Error(ErrorCode::invalid_exponent, "p must exceed 1");
        if (!(s >= 0.0))
            throw Error(ErrorCode::invalid_parameter, "s must be nonnegative");
        if (coarse < 9 || fine < coarse || (fine - 1) != 2 * (coarse - 1))
            throw Error(ErrorCode::invalid_parameter, "fine mesh must halve the coarse spacing");
        if (!(R > 0.0) || R > 1.0)
            throw Error(ErrorCode::invalid_parameter, "R must lie in (0, 1]");
        solver.validate();
    }
};

inline RadonMeasure make_measure(const MeasureSpec& spec, const DomainPtr& dom)
{
    switch (spec.kind) {
    case MeasureKind::zero: return RadonMeasure{};
    case MeasureKind::delta:
    case MeasureKind::two_atom: {
        std::vector<Atom> atoms;
        for (const Point& x : spec.atoms)
            atoms.push_back({x, spec.mass / static_cast<double>(spec.atoms.size())});
        return RadonMeasure(std::move(atoms));
    }
    case MeasureKind::uniform_density: {
        const double rho = spec.mass / (std::acos(-1.0) * spec.radius * spec.radius);
        const double r2 = spec.radius * spec.radius;
        return RadonMeasure({}, ScalarField::sample(dom, [&](const Point& x) { return dist2(x, spec.center) < r2 ? rho : 0.0; }));
    }
    }
    return RadonMeasure{};
}

struct Instance {
    DomainPtr domain;
    PDEProblem problem;
};

inline Instance instantiate(const Scenario& sc, int mesh)
{
    sc.validate();
    Instance in;
    in.domain = make_domain(sc.domain, mesh);
    CoefficientSpec cs = sc.coefficient;
    in.problem = make_problem(make_coefficient(cs, in.domain, sc.lambda), sc.p, sc.s, make_measure(sc.measure, in.domain),
                              boundary_data(in.domain, [&](const Point& x) { return sc.boundary(x); }));
    return in;
}

// Deterministic battery entry i: p cycles through 5 values, coefficients
// through 4 families, measures change every 5 entries.
inline Scenario battery_scenario(int index, std::uint64_t seed = 1)
{
    static const double P[] = {1.4, 1.6, 2.0, 2.5, 3.0};
    static const CoefficientKind C[] = {CoefficientKind::constant, CoefficientKind::holder, CoefficientKind::checkerboard,
                                        CoefficientKind::dmo_spiky};
    static const MeasureKind M[] = {MeasureKind::zero, MeasureKind::delta, MeasureKind::two_atom,
                                    MeasureKind::uniform_density};
    if (index < 0)
        throw Error(ErrorCode::invalid_parameter, "battery index must be nonnegative");
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> pos(-0.4, 0.4), unit(-1.0, 1.0);

    Scenario sc;
    sc.id = "battery-" + std::to_string(index);
    sc.seed = seed;
    sc.p = P[index % 5];
    sc.s = ((index + index / 5) % 2) ? 0.1 : 0.0;
    sc.coefficient.kind = C[index % 4];
    sc.coefficient.amplitude = 0.3;
    sc.coefficient.beta = 0.5;
    sc.coefficient.seed = rng();
    sc.measure.kind = M[(index / 5) % 4];
    const Point a{pos(rng), pos(rng)}, b{pos(rng), pos(rng)};
    if (sc.measure.kind == MeasureKind::delta)
        sc.measure.atoms = {a};
    else if (sc.measure.kind == MeasureKind::two_atom)
        sc.measure.atoms = {a, b};
    sc.measure.center = 0.5 * a;
    sc.measure.radius = 0.4;
    sc.boundary.kind = BoundaryKind::quadratic;
    sc.boundary.slope = {unit(rng), unit(rng)};
    sc.boundary.offset = 0.0;
    sc.boundary.curvature = 0.25 * unit(rng);
    sc.R = 0.25 * sc.domain.half_width;
    return sc;
}

inline std::vector<Scenario> default_battery(std::uint64_t seed = 1, int count = 20)
{
    std::vector<Scenario> out;
    for (int i = 0; i < count; ++i)
        out.push_back(battery_scenario(i, seed));
    return out;
}

// ---------------------------------------------------------------------------
// Reports.

struct PointRecord {
    Point x{};
    Point y{}; // second point of a pair, equal to x for pointwise checks
    double lhs = 0.0;
    double rhs = 0.0;
    std::vector<double> terms;
    double ratio() const { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? infinity : 0.0); }
};

struct VerificationReport {
    std::string scenario;
    std::string theorem;
    std::vector<std::string> term_names;
    std::vector<PointRecord> records; // fine mesh
    double C_fit = 0.0;               // fine mesh
    double C_fit_coarse = 0.0;
    double mesh_stability_ratio = 1.0;
    double nonvacuous = 0.0;
    bool converged = true;
    bool hard_failure = false;
    bool pass = false;
    double runtime = 0.0; // seconds
    std::map<std::string, double> extras;
    std::string note;

    bool inconclusive() const { return !converged; }
};

struct MeshCheck {
    std::vector<PointRecord> records;
    bool converged = true;
    std::map<std::string, double> extras;
};

inline std::vector<std::pair<double, double>> pairs_of(const std::vector<PointRecord>& rs)
{
    std::vector<std::pair<double, double>> out;
    out.reserve(rs.size());
    for (const PointRecord& r : rs)
        out.emplace_back(r.lhs, r.rhs);
    return out;
}

inline void finalize(VerificationReport& rep, const MeshCheck& coarse, const MeshCheck& fine, double tol = default_fit_tol)
{
    rep.records = fine.records;
    rep.converged = coarse.converged && fine.converged;
    for (const auto& [k, v] : fine.extras)
        rep.extras[k] = v;
    for (const auto& [k, v] : coarse.extras)
        rep.extras[k + "_coarse"] = v;
    try {
        const ConstantFit fc = fit_constant(pairs_of(coarse.records), tol);
        const ConstantFit ff = fit_constant(pairs_of(fine.records), tol);
        rep.C_fit_coarse = fc.C_fit;
        rep.C_fit = ff.C_fit;
        rep.nonvacuous = std::min(fc.nonvacuous, ff.nonvacuous);
        rep.mesh_stability_ratio = mesh_stability(fc.C_fit, ff.C_fit);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::hard_failure)
            throw;
        rep.hard_failure = true;
        rep.C_fit = infinity;
        rep.mesh_stability_ratio = infinity;
        rep.note = e.what();
    }
    rep.pass = rep.converged && !rep.hard_failure && std::isfinite(rep.C_fit) && rep.mesh_stability_ratio <= 2.0 &&
               rep.nonvacuous >= 0.5;
    if (!rep.converged && rep.note.empty())
        rep.note = "solver did not converge";
}

template <class Check>
VerificationReport run_two_mesh(const Scenario& sc, const std::string& theorem, std::vector<std::string> term_names,
                                Check&& check)
{
    const auto t0 = std::chrono::steady_clock::now();
    VerificationReport rep;
    rep.scenario = sc.id;
    rep.theorem = theorem;
    rep.term_names = std::move(term_names);
    const MeshCheck coarse = check(sc.coarse);
    const MeshCheck fine = check(sc.fine);
    finalize(rep, coarse, fine);
    rep.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Sampling helpers.

namespace detail {

inline bool node_at(const Domain& d, const Point& x, std::size_t& k)
{
    const Lattice& g = d.grid();
    const long gi = std::lround((x.x - g.origin_x) / g.h), gj = std::lround((x.y - g.origin_y) / g.h);
    return d.locate_global(static_cast<int>(gi), static_cast<int>(gj), k) && d.active(k);
}

inline const Vec2& grad_at(const Solution& sol, const Point& x)
{
    std::size_t k = 0;
    if (!node_at(*sol.domain(), x, k))
        throw Error(ErrorCode::geometry, "sample point is not a node of the solution lattice");
    return sol.grad.values[k];
}

// |grad u| + s as a scalar field.
inline ScalarField grad_plus_s(const Solution& sol, double s)
{
    ScalarField f(sol.domain(), 0.0);
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (f.domain->active(k))
            f.values[k] = norm(sol.grad.values[k]) + s;
    return f;
}

// B_R(x) inside the open domain: every lattice node strictly inside the ball
// is interior and the ball fits in the lattice box.
inline bool ball_inside(const Domain& d, const Point& x, double R)
{
    const Lattice& g = d.grid();
    if (x.x - R < g.x(0) || x.x + R > g.x(g.nx - 1) || x.y - R < g.y(0) || x.y + R > g.y(g.ny - 1))
        return false;
    const double R2 = R * R;
    const int span = static_cast<int>(std::ceil(R / g.h)) + 1;
    const long ci = std::lround((x.x - g.x(0)) / g.h), cj = std::lround((x.y - g.y(0)) / g.h);
    for (long j = cj - span; j <= cj + span; ++j)
        for (long i = ci - span; i <= ci + span; ++i) {
            if (!g.in_bounds(static_cast<int>(i), static_cast<int>(j)))
                continue;
            const Point q = g.node(static_cast<int>(i), static_cast<int>(j));
            const double d2 = dist2(q, x);
            if (d2 < R2 && d.type(static_cast<int>(i), static_cast<int>(j)) != NodeType::interior)
                return false;
        }
    return true;
}

inline bool outside_collar(const RadonMeasure& mu, const Point& x, double collar)
{
    for (const Atom& a : mu.atoms())
        if (dist(a.at, x) <= collar)
            return false;
    return true;
}

inline double integral_norm(const ScalarField& f, const Region& reg, double q)
{
    const double h2 = f.domain->h() * f.domain->h();
    double acc = 0.0;
    for (std::size_t k : reg.nodes)
        acc += std::pow(std::abs(f.values[k]), q);
    return std::pow(acc * h2, 1.0 / q);
}

inline double power_mean(const ScalarField& f, const Region& reg, double q) { return region_seminorm(f, reg, q); }

} // namespace detail

// Interior nodes of the coarse lattice with even spacing `stride` (in coarse
// nodes) that satisfy `keep`. The same points are nodes of the fine lattice.
template <class Keep>
std::vector<Point> lattice_samples(const Domain& coarse, int stride, Keep&& keep)
{
    std::vector<Point> out;
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        if (coarse.type(k) != NodeType::interior)
            continue;
        if (coarse.global_i(k) % stride != 0 || coarse.global_j(k) % stride != 0)
            continue;
        const Point x = coarse.node(k);
        if (keep(x))
            out.push_back(x);
    }
    return out;
}

inline int default_stride(int coarse_mesh) { return std::max(1, (coarse_mesh - 1) / 16); }

// Sample points x with B_R(x) in the domain, at least 2h (coarse) from atoms.
inline std::vector<Point> interior_samples(const Scenario& sc)
{
    const DomainPtr d = make_domain(sc.domain, sc.coarse);
    const RadonMeasure mu = make_measure(sc.measure, d);
    const double collar = 2.0 * d->h();
    return lattice_samples(*d, default_stride(sc.coarse), [&](const Point& x) {
        return detail::ball_inside(*d, x, sc.R) && detail::outside_collar(mu, x, collar);
    });
}

// The potential term of the pointwise estimates: W^R_{1/p,p} for p >= 2,
// (I_1^R)^{1/(p-1)} below.
inline double pointwise_potential(const RadonMeasure& mu, const Point& x, double p, double R, int n = 2)
{
    if (mu.is_zero())
        return 0.0;
    if (p >= 2.0)
        return wolff(mu, x, PotentialQuery::wolff_1p(p, R, n));
    return std::pow(riesz(mu, x, R, n), 1.0 / (p - 1.0));
}

// ---------------------------------------------------------------------------
// Pointwise estimates.

namespace detail {

inline MeshCheck pointwise_check(const Scenario& sc, int mesh, const std::vector<Point>& samples)
{
    MeshCheck mc;
    const Instance in = instantiate(sc, mesh);
    const Solution sol = solve(in.problem, sc.solver);
    mc.converged = sol.converged;
    mc.extras["residual"] = sol.residual_norm;
    mc.extras["iterations"] = sol.iterations;
    const ScalarField f = grad_plus_s(sol, sc.s);
    const double q = case_gamma0(sc.p);
    for (const Point& x : samples) {
        PointRecord r;
        r.x = r.y = x;
        r.lhs = norm(grad_at(sol, x));
        const double pot = pointwise_potential(in.problem.rhs, x, sc.p, sc.R);
        const Region reg = ball_region(*in.domain, x, sc.R);
        const double avg = power_mean(f, reg, q);
        r.terms = {pot, avg};
        r.rhs = pot + avg;
        mc.records.push_back(std::move(r));
    }
    return mc;
}

} // namespace detail

inline VerificationReport verify_interior_pointwise(const Scenario& sc)
{
    const std::vector<Point> samples = interior_samples(sc);
    if (samples.empty())
        throw Error(ErrorCode::insufficient_samples, "no sample point admits B_R(x) inside the domain");
    return run_two_mesh(sc, "interior_pointwise", {"potential", "average"},
                        [&](int mesh) { return detail::pointwise_check(sc, mesh, samples); });
}

// Omega_R(x) averages replace ball averages; every interior sample node
// outside the atom collar is used.
inline VerificationReport verify_boundary_pointwise(const Scenario& sc)
{
    if (sc.boundary.kind != BoundaryKind::zero)
        throw Error(ErrorCode::invalid_parameter, "boundary estimates need zero boundary data");
    const DomainPtr d = make_domain(sc.domain, sc.coarse);
    const RadonMeasure mu = make_measure(sc.measure, d);
    const double collar = 2.0 * d->h();
    const std::vector<Point> samples =
        lattice_samples(*d, default_stride(sc.coarse), [&](const Point& x) { return detail::outside_collar(mu, x, collar); });
    return run_two_mesh(sc, "boundary_pointwise", {"potential", "average"},
                        [&](int mesh) { return detail::pointwise_check(sc, mesh, samples); });
}

// max |grad u| against sup W^1_{1/p,p} + s (p >= 2) or sup (I_1^1)^{1/(p-1)} + s,
// both sups over the interior coarse nodes outside the atom collar.
inline VerificationReport verify_global_lipschitz(const Scenario& sc, int stride = 2)
{
    if (sc.boundary.kind != BoundaryKind::zero)
        throw Error(ErrorCode::invalid_parameter, "the global estimate needs zero boundary data");
    const DomainPtr d = make_domain(sc.domain, sc.coarse);
    const RadonMeasure mu = make_measure(sc.measure, d);
    const double collar = 2.0 * d->h();
    const std::vector<Point> samples =
        lattice_samples(*d, stride, [&](const Point& x) { return detail::outside_collar(mu, x, collar); });
    double pot_sup = 0.0;
    for (const Point& x : samples)
        pot_sup = std::max(pot_sup, pointwise_potential(mu, x, sc.p, 1.0));
    return run_two_mesh(sc, "global_lipschitz", {"potential_sup", "s"}, [&](int mesh) {
        MeshCheck mc;
        const Instance in = instantiate(sc, mesh);
        const Solution sol = solve(in.problem, sc.solver);
        mc.converged = sol.converged;
        mc.extras["residual"] = sol.residual_norm;
        PointRecord r;
        for (const Point& x : samples) {
            const double g = norm(detail::grad_at(sol, x));
            if (g > r.lhs) {
                r.lhs = g;
                r.x = r.y = x;
            }
        }
        r.terms = {pot_sup, sc.s};
        r.rhs = pot_sup + sc.s;
        mc.records.push_back(r);
        return mc;
    });
}

// ---------------------------------------------------------------------------
// Comparison estimates on B_r(x0) / B_2r(x0).

namespace detail {

// Nodes of B_r(x0) in `inner` paired with the same global nodes of `outer`.
inline std::vector<std::pair<std::size_t, std::size_t>> matched_nodes(const Domain& inner, const Domain& outer,
                                                                      const Point& x0, double r)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t k : ball_region(inner, x0, r).nodes) {
        std::size_t ko = 0;
        if (outer.locate_global(inner.global_i(k), inner.global_j(k), ko) && outer.active(ko))
            out.emplace_back(k, ko);
    }
    if (out.empty())
        throw Error(ErrorCode::empty_region, "no common nodes in the comparison ball");
    return out;
}

inline double mean_power_diff(const VectorField& a, const VectorField& b,
                              const std::vector<std::pair<std::size_t, std::size_t>>& nodes, double q)
{
    double acc = 0.0;
    for (const auto& [ka, kb] : nodes)
        acc += std::pow(norm(a.values[ka] - b.values[kb]), q);
    return std::pow(acc / static_cast<double>(nodes.size()), 1.0 / q);
}

inline double modulus_at(const CoefficientField& c, double r)
{
    return oscillation_modulus(c, {r}).values.front();
}

} // namespace detail

struct ComparisonSample {
    double omega = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double w_max = 0.0;
    bool converged = true;
};

// lhs = mean |grad v - grad w| over B_r (p >= 2) or the gamma0 power mean with
// gamma0 = 1/2 (p < 2); rhs = omega(r)^{2/p} (||grad w||_inf + s), with the
// exponent 1 for p < 2 after taking the 1/gamma0 root.
inline ComparisonSample comparison_vw_sample(const Scenario& sc, int mesh, const Point& x0, double r,
                                             double gamma0 = 0.5)
{
    ComparisonSample cs;
    const Instance in = instantiate(sc, mesh);
    const Solution u = solve(in.problem, sc.solver);
    const Solution w = solve_companion(in.problem, u, x0, r, sc.solver);
    const Solution v = solve_frozen(in.problem, w, x0, r, sc.solver);
    cs.converged = u.converged && w.converged && v.converged;
    const auto nodes = detail::matched_nodes(*v.domain(), *w.domain(), x0, r);
    const double q = sc.p >= 2.0 ? 1.0 : gamma0;
    cs.lhs = detail::mean_power_diff(v.grad, w.grad, nodes, q);
    for (const auto& pr : nodes)
        cs.w_max = std::max(cs.w_max, norm(w.grad.values[pr.second]));
    cs.omega = detail::modulus_at(in.problem.coeff, r);
    const double e = sc.p >= 2.0 ? 2.0 / sc.p : 1.0;
    cs.rhs = std::pow(cs.omega, e) * (cs.w_max + sc.s);
    return cs;
}

inline VerificationReport verify_comparison_vw(const Scenario& sc, const Point& x0, double r, double gamma0 = 0.5)
{
    return run_two_mesh(sc, "comparison_vw", {"omega", "w_max"}, [&](int mesh) {
        MeshCheck mc;
        const ComparisonSample cs = comparison_vw_sample(sc, mesh, x0, r, gamma0);
        mc.converged = cs.converged;
        mc.records.push_back({x0, x0, cs.lhs, cs.rhs, {cs.omega, cs.w_max}});
        return mc;
    });
}

struct SlopeFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::vector<ComparisonSample> samples;
    std::vector<double> amplitudes;
    bool converged = true;
};

// Log-log slope of the comparison lhs against omega(r) over a sweep of
// coefficient amplitudes, on the fine mesh.
inline SlopeFit comparison_slope(const Scenario& sc, const Point& x0, double r, const std::vector<double>& amplitudes,
                                 double gamma0 = 0.5)
{
    if (amplitudes.size() < 2)
        throw Error(ErrorCode::insufficient_samples, "a slope needs at least two amplitudes");
    SlopeFit sf;
    sf.amplitudes = amplitudes;
    std::vector<double> lx, ly;
    for (double a : amplitudes) {
        Scenario s2 = sc;
        s2.coefficient.amplitude = a;
        const ComparisonSample cs = comparison_vw_sample(s2, sc.fine, x0, r, gamma0);
        sf.converged = sf.converged && cs.converged;
        sf.samples.push_back(cs);
        if (!(cs.omega > 0.0) || !(cs.lhs > 0.0))
            throw Error(ErrorCode::degenerate_fit, "comparison sweep produced a zero modulus or difference");
        lx.push_back(std::log(cs.omega));
        ly.push_back(std::log(cs.lhs));
    }
    const LinearFit f = least_squares(lx, ly);
    sf.slope = f.slope;
    sf.slope_stderr = f.slope_stderr;
    return sf;
}

// u against the companion w on B_2r(x0), per case.
inline VerificationReport verify_comparison_uw(const Scenario& sc, const Point& x0, double r)
{
    return run_two_mesh(sc, "comparison_uw", {"measure", "mixed"}, [&](int mesh) {
        MeshCheck mc;
        const Instance in = instantiate(sc, mesh);
        const Solution u = solve(in.problem, sc.solver);
        const Solution w = solve_companion(in.problem, u, x0, r, sc.solver);
        mc.converged = u.converged && w.converged;
        const auto nodes = detail::matched_nodes(*w.domain(), *u.domain(), x0, 2.0 * r);
        const double g0 = case_gamma0(sc.p);
        PointRecord rec;
        rec.x = rec.y = x0;
        rec.lhs = detail::mean_power_diff(w.grad, u.grad, nodes, g0);
        const double M = in.problem.rhs.is_zero() ? 0.0 : in.problem.rhs.ball_mass(x0, 2.0 * r) / r;
        const double measure = std::pow(M, 1.0 / (sc.p - 1.0));
        double mixed = 0.0;
        if (sc.p < 2.0 && M > 0.0) {
            const ScalarField f = detail::grad_plus_s(u, sc.s);
            const Region reg = ball_region(*u.domain(), x0, 2.0 * r);
            const double pm = detail::power_mean(f, reg, g0);
            // case (ii): mean (|grad u| + s)^{2-p}; case (iii): power mean^{2-p}
            mixed = M * std::pow(pm, 2.0 - sc.p);
        }
        rec.terms = {measure, mixed};
        rec.rhs = measure + mixed;
        mc.records.push_back(rec);
        return mc;
    });
}

// ||grad w||_{L^inf(B_{R/2})} against R^{-n} || |grad w| + s ||_{L^1(B_R)}
// (p >= 2) or R^{-n/gamma0} || . ||_{L^gamma0(B_R)} (p < 2); w is the
// companion solution on B_R(x0).
inline VerificationReport verify_lipschitz_w(const Scenario& sc, const Point& x0, double R, double gamma0 = 0.5)
{
    return run_two_mesh(sc, "lipschitz_w", {"norm"}, [&](int mesh) {
        MeshCheck mc;
        const Instance in = instantiate(sc, mesh);
        const Solution u = solve(in.problem, sc.solver);
        const Solution w = solve_companion(in.problem, u, x0, 0.5 * R, sc.solver);
        mc.converged = u.converged && w.converged;
        PointRecord rec;
        rec.x = rec.y = x0;
        rec.lhs = region_max(w.grad, ball_region(*w.domain(), x0, 0.5 * R));
        const double q = sc.p >= 2.0 ? 1.0 : gamma0;
        const ScalarField f = detail::grad_plus_s(w, sc.s);
        const double nrm = detail::integral_norm(f, ball_region(*w.domain(), x0, R), q);
        rec.rhs = std::pow(R, -2.0 / q) * nrm;
        rec.terms = {nrm};
        mc.records.push_back(rec);
        return mc;
    });
}

// ---------------------------------------------------------------------------
// Continuity budgets and the gradient modulus.

struct ContinuityBudget {
    int index = 1; // 1..3 interior, 4..6 boundary
    double potential = 0.0;
    double average = 0.0;
    double value() const { return potential + average; }
};

// Interior (M1..M3): potential sup over sample points in B_R(x0), average
// R^{-n/q} || |grad u| + s ||_{L^q(B_R)}. Boundary (M4..M6): sups over
// Omega_R (p >= 2) or Omega_{R/4} (p < 2) and power means over Omega_R.
inline ContinuityBudget continuity_budget(const Solution& sol, const RadonMeasure& mu, const Point& x0, double R,
                                          double p, double s, const std::vector<Point>& sup_points, bool boundary = false)
{
    ContinuityBudget b;
    const EstimateCase c = estimate_case(p);
    b.index = (c == EstimateCase::i ? 1 : c == EstimateCase::ii ? 2 : 3) + (boundary ? 3 : 0);
    const double q = case_gamma0(p);
    const double sup_radius = boundary && p < 2.0 ? 0.25 * R : R;
    for (const Point& x : sup_points)
        if (dist(x, x0) <= sup_radius)
            b.potential = std::max(b.potential, pointwise_potential(mu, x, p, R));
    const ScalarField f = detail::grad_plus_s(sol, s);
    const Region reg = ball_region(*sol.domain(), x0, R);
    if (reg.empty())
        throw Error(ErrorCode::empty_region, "budget ball contains no nodes");
    b.average = boundary ? detail::power_mean(f, reg, q) : std::pow(R, -2.0 / q) * detail::integral_norm(f, reg, q);
    return b;
}

// tilde omega (p >= 2, power 2/p) or overline omega (p < 2, power 1): the
// i = 0 term plus the capped geometric tail from i = 1.
inline double tilde_omega(const OscillationModulus& m, double eps, double alpha1, double q, double R, double t)
{
    const double head = std::pow(m(std::min(t, 0.5 * R)), q);
    return head + geometric_tail(m, eps, alpha1, q, R, t);
}

// sup over points of tilde W^rho_{1/p,p}, and of tilde I_1^rho.
inline double tilde_wolff_sup(const RadonMeasure& mu, const std::vector<Point>& pts, double rho, double eps, double alpha1,
                              double R, double p)
{
    if (mu.is_zero())
        return 0.0;
    double m = 0.0;
    for (const Point& x : pts)
        m = std::max(m, tilde_wolff(mu, x, rho, eps, alpha1, R, PotentialQuery::wolff_1p(p, R)));
    return m;
}

inline double tilde_riesz_sup(const RadonMeasure& mu, const std::vector<Point>& pts, double rho, double eps, double alpha1,
                              double R)
{
    if (mu.is_zero())
        return 0.0;
    double m = 0.0;
    for (const Point& x : pts)
        m = std::max(m, tilde_riesz(mu, x, rho, eps, alpha1, R));
    return m;
}

struct ModulusOptions {
    double eps = 0.125;
    double alpha1 = 0.0; // 0: half the decay rate fitted at x0 on the coarse mesh
    double alpha1_floor = 0.05;
    int stride = 2; // coarse nodes between pair points
};

inline VerificationReport verify_gradient_modulus(const Scenario& sc, const Point& x0, const ModulusOptions& opt = {})
{
    const DomainPtr dc = make_domain(sc.domain, sc.coarse);
    const RadonMeasure mu_c = make_measure(sc.measure, dc);
    const double collar = 2.0 * dc->h();
    if (!detail::ball_inside(*dc, x0, sc.R))
        throw Error(ErrorCode::geometry, "B_R(x0) must lie inside the domain");
    const std::vector<Point> pts = lattice_samples(*dc, opt.stride, [&](const Point& x) {
        return dist(x, x0) <= 0.25 * sc.R && detail::outside_collar(mu_c, x, collar);
    });
    if (pts.size() < 2)
        throw Error(ErrorCode::insufficient_samples, "fewer than two sample points in B_{R/4}(x0)");
    const std::vector<Point> sup_pts = lattice_samples(*dc, default_stride(sc.coarse), [&](const Point& x) {
        return dist(x, x0) <= sc.R && detail::outside_collar(mu_c, x, collar);
    });
    double alpha1 = opt.alpha1;
    const double q = sc.p >= 2.0 ? 2.0 / sc.p : 1.0;

    return run_two_mesh(sc, "gradient_modulus", {"budget_decay", "budget_dini", "tilde_wolff", "tilde_riesz"}, [&](int mesh) {
        MeshCheck mc;
        const Instance in = instantiate(sc, mesh);
        const Solution sol = solve(in.problem, sc.solver);
        mc.converged = sol.converged;
        if (!(alpha1 > 0.0)) {
            double a = 0.0;
            try {
                a = decay_fit(profile(sol.grad, x0, 0.5 * sc.R, 0.5, 6)).alpha1();
            } catch (const Error& e) {
                if (e.code() != ErrorCode::degenerate_fit)
                    throw;
            }
            alpha1 = std::clamp(a, opt.alpha1_floor, 0.5);
        }
        mc.extras["alpha1"] = alpha1;
        const double h = in.domain->h();
        const OscillationModulus m =
            oscillation_modulus(in.problem.coeff, geometric_radii(2.0 * h, std::min(1.0, sc.R), 10));
        const ContinuityBudget B = continuity_budget(sol, in.problem.rhs, x0, sc.R, sc.p, sc.s, sup_pts);
        mc.extras["budget"] = B.value();
        std::map<double, std::array<double, 3>> cache; // rho -> dini, tilde W, tilde I
        auto terms_at = [&](double rho) {
            auto it = cache.find(rho);
            if (it != cache.end())
                return it->second;
            std::array<double, 3> t{};
            t[0] = tail_dini([&](double s) { return tilde_omega(m, opt.eps, alpha1, q, sc.R, s); }, rho);
            t[1] = tilde_wolff_sup(in.problem.rhs, pts, rho, opt.eps, alpha1, sc.R, sc.p);
            t[2] = sc.p < 2.0 ? tilde_riesz_sup(in.problem.rhs, pts, rho, opt.eps, alpha1, sc.R) : 0.0;
            cache.emplace(rho, t);
            return t;
        };
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                const double rho = dist(pts[a], pts[b]);
                const auto t = terms_at(rho);
                PointRecord r;
                r.x = pts[a];
                r.y = pts[b];
                r.lhs = norm(detail::grad_at(sol, pts[a]) - detail::grad_at(sol, pts[b]));
                const double decay = B.value() * std::pow(rho / sc.R, alpha1);
                const double dini = B.value() * t[0];
                const double tri = sc.p < 2.0 ? std::pow(B.value(), 2.0 - sc.p) * t[2] : 0.0;
                r.terms = {decay, dini, t[1], tri};
                r.rhs = decay + dini + t[1] + tri;
                mc.records.push_back(std::move(r));
            }
        return mc;
    });
}

// ---------------------------------------------------------------------------
// Boundary charts: x_n = chi(x') flattened by Lambda(x) = (x', x_n - chi(x')),
// inverted by Gamma(y) = (y', y_n + chi(y')).

struct Chart {
    std::function<double(double)> chi;
    std::function<double(double)> dchi;
    double center = 0.0; // x' of the base point
    double radius = 0.0; // chart radius R'

    Point base() const { return {center, chi(center)}; }
};

inline constexpr double chart_slope_bound = 0.5;

// Largest radius around `center` (up to `limit`) on which |chi'| <= 1/2,
// scanned on `samples` points per side.
inline double chart_radius(const std::function<double(double)>& dchi, double center, double limit, int samples = 4000)
{
    if (!(std::abs(dchi(center)) <= chart_slope_bound))
        return 0.0;
    for (int k = 1; k <= samples; ++k) {
        const double t = limit * k / samples;
        if (std::abs(dchi(center + t)) > chart_slope_bound || std::abs(dchi(center - t)) > chart_slope_bound)
            return limit * (k - 1) / samples;
    }
    return limit;
}

inline Chart make_chart(std::function<double(double)> chi, std::function<double(double)> dchi, double center, double radius)
{
    if (!(radius > 0.0))
        throw Error(ErrorCode::invalid_parameter, "chart radius must be positive");
    if (chart_radius(dchi, center, radius) < radius)
        throw Error(ErrorCode::chart_radius_exceeded, "|chi'| exceeds 1/2 inside the chart radius");
    return {std::move(chi), std::move(dchi), center, radius};
}

inline Point flatten_chart(const Chart& c, const Point& x)
{
    if (std::abs(x.x - c.center) > c.radius)
        throw Error(ErrorCode::chart_radius_exceeded, "point lies outside the chart radius");
    return {x.x, x.y - c.chi(x.x)};
}

inline Point unflatten(const Chart& c, const Point& y)
{
    if (std::abs(y.x - c.center) > c.radius)
        throw Error(ErrorCode::chart_radius_exceeded, "point lies outside the chart radius");
    return {y.x, y.y + c.chi(y.x)};
}

struct SandwichReport {
    std::size_t inner_checked = 0; // nodes of Omega_{r/2}
    std::size_t inner_violations = 0;
    std::size_t outer_checked = 0; // nodes of Gamma(B_r^+)
    std::size_t outer_violations = 0;
    bool holds() const { return inner_violations == 0 && outer_violations == 0; }
};

// Omega_{r/2} in Gamma(B_r^+) in Omega_{2r}, node-wise on the lattice of `d`,
// with Omega = {x_n > chi(x')} and balls centred at the base point.
inline SandwichReport verify_sandwich(const Chart& c, const Lattice& g, double r)
{
    if (!(r > 0.0) || 2.0 * r > c.radius)
        throw Error(ErrorCode::chart_radius_exceeded, "sandwich radius must satisfy 0 < r <= R'/2");
    SandwichReport rep;
    const Point b = c.base();
    const Point yb{c.center, 0.0};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Point x = g.node(i, j);
            if (std::abs(x.x - c.center) > c.radius)
                continue;
            const bool in_omega = x.y > c.chi(x.x);
            const Point y = flatten_chart(c, x);
            const bool in_half_ball = y.y > 0.0 && dist(y, yb) < r;
            if (in_omega && dist(x, b) < 0.5 * r) {
                ++rep.inner_checked;
                if (!in_half_ball)
                    ++rep.inner_violations;
            }
            if (in_half_ball) {
                ++rep.outer_checked;
                if (!(in_omega && dist(x, b) < 2.0 * r))
                    ++rep.outer_violations;
            }
        }
    return rep;
}

// ---------------------------------------------------------------------------
// Reverse Hoelder on half balls: w solves the homogeneous problem on a half
// disk with zero data on the flat side; for y0 on the flat side,
// power-mean_{B+_{rho/2}} (|grad w| + s)^{p + 0.1} against mean_{B+_rho}.

inline VerificationReport verify_reverse_holder(const Scenario& sc, const Point& y0, const std::vector<double>& rhos)
{
    if (sc.domain.kind != DomainKind::half_disk)
        throw Error(ErrorCode::invalid_parameter, "reverse Hoelder check runs on a half disk");
    Scenario hom = sc;
    hom.measure = MeasureSpec{};
    const double q_hi = sc.p + 0.1;
    return run_two_mesh(hom, "reverse_holder", {"q_lo_mean"}, [&](int mesh) {
        MeshCheck mc;
        const Instance in = instantiate(hom, mesh);
        const Solution w = solve(in.problem, hom.solver);
        mc.converged = w.converged;
        const ScalarField f = detail::grad_plus_s(w, hom.s);
        for (double rho : rhos) {
            PointRecord r;
            r.x = r.y = y0;
            r.lhs = detail::power_mean(f, ball_region(*in.domain, y0, 0.5 * rho), q_hi);
            r.rhs = detail::power_mean(f, ball_region(*in.domain, y0, rho), 1.0);
            r.terms = {rho};
            mc.records.push_back(r);
        }
        return mc;
    });
}

// ---------------------------------------------------------------------------
// Frozen-coefficient decay: constant coefficient, no measure, quadratic data
// on a disk; the excess profile at the centre and its fitted rate.

inline DecayFit frozen_decay(double p, double s, int mesh, std::uint64_t seed = 1, int levels = 5)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Scenario sc;
    sc.p = p;
    sc.s = s;
    sc.domain.kind = DomainKind::disk;
    sc.boundary.kind = BoundaryKind::quadratic;
    sc.boundary.slope = {unit(rng), unit(rng)};
    sc.boundary.curvature = 0.5 + 0.25 * unit(rng);
    sc.coefficient.kind = CoefficientKind::constant;
    const Instance in = instantiate(sc, mesh);
    const Solution sol = solve(in.problem, sc.solver);
    if (!sol.converged)
        throw Error(ErrorCode::hard_failure, "frozen homogeneous solve did not converge");
    return decay_fit(profile(sol.grad, {0.0, 0.0}, 0.5, 0.5, levels));
}

// ---------------------------------------------------------------------------
// V-map sandwich constant: the ratio
// |V(b) - V(a)|^2 / (|b - a|^2 (|a|^2 + |b|^2 + s^2)^{(p-2)/2}) is invariant
// under joint scaling and rotation, so a sweep over a = (cos t cos f, 0),
// b = cos t sin f (cos g, sin g), s = sin t covers it.

inline double v_map_ratio(const Vec2& a, const Vec2& b, double p, double s)
{
    const double num = norm2(v_map(b, p, s) - v_map(a, p, s));
    const double den = norm2(b - a) * std::pow(norm2(a) + norm2(b) + s * s, (p - 2.0) / 2.0);
    return num / den;
}

struct SandwichConstant {
    double lo = infinity;
    double hi = 0.0;
    double c() const { return std::max(hi, 1.0 / lo); }
};

inline SandwichConstant v_map_sweep(double p, int n = 64)
{
    const double half_pi = 0.5 * std::acos(-1.0);
    SandwichConstant sc;
    for (int it = 0; it <= n; ++it) {
        const double t = half_pi * it / n * (1.0 - 1e-9);
        for (int jf = 0; jf <= n; ++jf) {
            const double f = half_pi * jf / n;
            for (int jg = 0; jg <= 2 * n; ++jg) {
                const double gg = 2.0 * half_pi * jg / (2 * n);
                const Vec2 a{std::cos(t) * std::cos(f), 0.0};
                const Vec2 b = std::cos(t) * std::sin(f) * Vec2{std::cos(gg), std::sin(gg)};
                if (norm2(b - a) < 1e-24)
                    continue;
                const double r = v_map_ratio(a, b, p, std::sin(t));
                if (!std::isfinite(r))
                    continue;
                sc.lo = std::min(sc.lo, r);
                sc.hi = std::max(sc.hi, r);
            }
        }
    }
    return sc;
}

} // namespace wolfflab
