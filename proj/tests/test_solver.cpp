#include <gtest/gtest.h>

#include <random>

#include "wolfflab/solver.hpp"

using namespace wolfflab;

namespace {

CoefficientField identity_on(const DomainPtr& d)
{
    return sample_coefficient(d, 1.0, [](const Point&) { return Mat2::identity(); });
}

double max_error(const ScalarField& f, const std::function<double(const Point&)>& exact)
{
    double e = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (f.domain->active(k))
            e = std::max(e, std::abs(f.values[k] - exact(f.domain->node(k))));
    return e;
}

double radial_gradient_error(const Solution& sol, double p)
{
    double worst = 0.0;
    const Domain& d = *sol.domain();
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!d.active(k))
            continue;
        const double r = norm(d.node(k));
        if (r < 0.1 || r > 0.4)
            continue;
        const double exact = std::pow(2.0 * M_PI * r, -1.0 / (p - 1.0));
        worst = std::max(worst, std::abs(norm(sol.grad[k]) - exact) / exact);
    }
    return worst;
}

} // namespace

TEST(VMap, Examples)
{
    EXPECT_EQ(v_map({0.0, 0.0}, 3.0, 0.0), (Vec2{0.0, 0.0}));
    EXPECT_EQ(v_map({1.5, -2.0}, 2.0, 0.3), (Vec2{1.5, -2.0}));
    const Vec2 v = v_map({3.0, 4.0}, 4.0, 0.0);
    // |xi|^2 = 25 raised to (p - 2) / 4 = 1/2 gives the factor 5.
    EXPECT_NEAR(v.x, 15.0, 1e-12);
    EXPECT_NEAR(v.y, 20.0, 1e-12);
}

TEST(VMap, TwoSidedBoundOnRandomPairs)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0), su(0.0, 2.0);
    for (double p : {1.2, 1.5, 2.0, 3.0, 4.0}) {
        double lo = 1e300, hi = 0.0;
        for (int k = 0; k < 20000; ++k) {
            const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
            const double s = su(rng);
            const double num = norm2(v_map(b, p, s) - v_map(a, p, s));
            const double den = norm2(b - a) * std::pow(norm2(a) + norm2(b) + s * s, (p - 2.0) / 2.0);
            lo = std::min(lo, num / den);
            hi = std::max(hi, num / den);
        }
        EXPECT_GT(lo, 0.05) << p;
        EXPECT_LT(hi, 5.0) << p;
    }
}

TEST(Solver, AffineDataIsReproduced)
{
    auto d = share(Domain::square(1.0, 33));
    for (double p : {1.5, 2.0, 3.0}) {
        auto prob = make_problem(identity_on(d), p, 0.0, RadonMeasure{},
                                 boundary_data(d, [](const Point& x) { return x.x; }));
        const Solution sol = solve(prob);
        EXPECT_TRUE(sol.converged) << p;
        EXPECT_LT(max_error(sol.u, [](const Point& x) { return x.x; }), 1e-9) << p;
    }
}

TEST(Solver, AffineWithNonSymmetricConstantCoefficient)
{
    auto d = share(Domain::disk(1.0, 41));
    const Mat2 a{1.0, 0.3, -0.1, 1.2};
    auto c = sample_coefficient(d, 2.0, [&](const Point&) { return a; });
    auto lin = [](const Point& x) { return 0.7 * x.x - 0.4 * x.y + 1.0; };
    for (double p : {1.6, 2.0, 2.5}) {
        const Solution sol = solve(make_problem(c, p, 0.1, RadonMeasure{}, boundary_data(d, lin)));
        EXPECT_TRUE(sol.converged) << p;
        EXPECT_LT(max_error(sol.u, lin), 1e-8) << p;
    }
}

TEST(Solver, GreenFunctionOracleP2)
{
    auto d = share(Domain::disk(1.0, 129));
    const Solution sol = solve(make_problem(identity_on(d), 2.0, 0.0, RadonMeasure::dirac({0.0, 0.0})));
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(radial_gradient_error(sol, 2.0), 0.05);
    // u = log(1/|x|) / (2 pi) away from the atom.
    double worst = 0.0;
    for (std::size_t k = 0; k < d->size(); ++k) {
        const double r = norm(d->node(k));
        if (d->active(k) && r >= 0.1 && r <= 0.9)
            worst = std::max(worst, std::abs(sol.u.values[k] - std::log(1.0 / r) / (2.0 * M_PI)));
    }
    EXPECT_LT(worst, 0.01);
}

TEST(Solver, RadialFluxOracleDegenerateP3)
{
    auto d = share(Domain::disk(1.0, 129));
    const Solution sol = solve(make_problem(identity_on(d), 3.0, 0.0, RadonMeasure::dirac({0.0, 0.0})));
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(radial_gradient_error(sol, 3.0), 0.07);
}

TEST(Solver, RadialFluxOracleSingularP16)
{
    auto d = share(Domain::disk(1.0, 129));
    const Solution sol = solve(make_problem(identity_on(d), 1.6, 0.0, RadonMeasure::dirac({0.0, 0.0})));
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(radial_gradient_error(sol, 1.6), 0.07);
}

TEST(Solver, DeterministicAndContinuousInS)
{
    auto d = share(Domain::disk(1.0, 65));
    auto c = identity_on(d);
    const auto a = solve(make_problem(c, 3.0, 0.0, RadonMeasure::dirac({0.0, 0.0})));
    const auto b = solve(make_problem(c, 3.0, 0.0, RadonMeasure::dirac({0.0, 0.0})));
    const auto e = solve(make_problem(c, 3.0, 1e-8, RadonMeasure::dirac({0.0, 0.0})));
    ASSERT_TRUE(a.converged && e.converged);
    for (std::size_t k = 0; k < d->size(); ++k) {
        if (!d->active(k))
            continue;
        EXPECT_EQ(a.u.values[k], b.u.values[k]);
        EXPECT_NEAR(a.u.values[k], e.u.values[k], 1e-5);
    }
}

TEST(Solver, EllipticityViolationPropagates)
{
    auto d = share(Domain::square(1.0, 17));
    auto c = sample_coefficient(d, 1.0, [](const Point& x) { return x.x > 0.5 ? Mat2::scalar(0.1) : Mat2::identity(); });
    PDEProblem prob;
    prob.coeff = c;
    prob.boundary = ScalarField(d, 0.0);
    EXPECT_THROW(solve(prob), Error);
}

TEST(Residual, DetectsPerturbation)
{
    auto d = share(Domain::square(1.0, 33));
    auto prob = make_problem(identity_on(d), 2.5, 0.0, RadonMeasure::dirac({0.0, 0.0}),
                             boundary_data(d, [](const Point& x) { return x.y; }));
    const Solution sol = solve(prob);
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(residual(prob, sol.u), SolverConfig{}.tol);
    ScalarField bumped = sol.u;
    bumped.values[d->grid().index(10, 20)] += 1e-3;
    EXPECT_GT(residual(prob, bumped), 10.0 * residual(prob, sol.u));
}

TEST(Residual, ManufacturedSolutionConverges)
{
    // p = 3, u = (x1 + 2)^2: flux 4 (x1 + 2)^2 e1, load density -8 (x1 + 2).
    auto exact = [](const Point& x) { return (x.x + 2.0) * (x.x + 2.0); };
    double prev = 0.0;
    for (int n : {17, 33, 65}) {
        auto d = share(Domain::square(1.0, n));
        const RadonMeasure mu({}, ScalarField::sample(d, [](const Point& x) { return -8.0 * (x.x + 2.0); }));
        auto prob = make_problem(identity_on(d), 3.0, 0.0, mu, boundary_data(d, exact));
        const double r = residual(prob, ScalarField::sample(d, exact));
        if (prev > 0.0) {
            EXPECT_LT(r, prev / 3.5) << n;
        }
        prev = r;
    }
}

TEST(Companion, ReproducesHomogeneousSolution)
{
    auto d = share(Domain::square(1.0, 65));
    auto c = make_coefficient({CoefficientKind::holder, 0.3}, d, 2.0);
    auto prob = make_problem(c, 2.5, 0.1, RadonMeasure{},
                             boundary_data(d, [](const Point& x) { return std::sin(2.0 * x.x) + x.y * x.y; }));
    SolverConfig tight;
    tight.tol = 1e-12;
    const Solution u = solve(prob, tight);
    ASSERT_TRUE(u.converged);
    const Point x0{0.1, -0.05};
    const Solution w = solve_companion(prob, u, x0, 0.2, tight);
    ASSERT_TRUE(w.converged);
    for (std::size_t k = 0; k < w.domain()->size(); ++k) {
        if (!w.domain()->active(k))
            continue;
        std::size_t pk = 0;
        ASSERT_TRUE(d->locate_global(w.domain()->global_i(k), w.domain()->global_j(k), pk));
        EXPECT_NEAR(w.u.values[k], u.u.values[pk], 1e-9);
    }
}

TEST(Companion, AffineDataGivesAffineSolution)
{
    auto d = share(Domain::square(1.0, 65));
    auto prob = make_problem(identity_on(d), 1.6, 0.0, RadonMeasure::dirac({0.5, 0.5}),
                             boundary_data(d, [](const Point& x) { return 2.0 * x.x + x.y; }));
    Solution u = solve(prob);
    // Replace u by an affine field: the companion sees only its trace.
    u.u = ScalarField::sample(d, [](const Point& x) { return 2.0 * x.x + x.y; });
    const Solution w = solve_companion(prob, u, {-0.3, -0.3}, 0.15);
    ASSERT_TRUE(w.converged);
    EXPECT_LT(max_error(w.u, [](const Point& x) { return 2.0 * x.x + x.y; }), 1e-9);
}

TEST(Companion, BallEscapingDomainIsGeometryError)
{
    auto d = share(Domain::disk(1.0, 33));
    auto prob = make_problem(identity_on(d), 2.0, 0.0, RadonMeasure{});
    const Solution u = solve(prob);
    try {
        solve_companion(prob, u, {0.6, 0.0}, 0.25);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::geometry);
    }
}

TEST(Frozen, ConstantCoefficientGivesV_equals_W)
{
    auto d = share(Domain::square(1.0, 65));
    auto c = sample_coefficient(d, 2.0, [](const Point&) { return Mat2::diagonal(1.5, 1.0); });
    auto prob = make_problem(c, 3.0, 0.0, RadonMeasure::dirac({0.6, 0.6}),
                             boundary_data(d, [](const Point& x) { return x.x * x.y + x.x; }));
    const Solution u = solve(prob);
    const Point x0{-0.2, 0.1};
    const Solution w = solve_companion(prob, u, x0, 0.2);
    const Solution v = solve_frozen(prob, w, x0, 0.2);
    ASSERT_TRUE(v.converged);
    for (std::size_t k = 0; k < v.domain()->size(); ++k) {
        if (!v.domain()->active(k))
            continue;
        std::size_t wk = 0;
        ASSERT_TRUE(w.domain()->locate_global(v.domain()->global_i(k), v.domain()->global_j(k), wk));
        EXPECT_NEAR(v.u.values[k], w.u.values[wk], 1e-7);
    }
}

TEST(Frozen, UsesBallAverageOfCoefficient)
{
    auto d = share(Domain::square(1.0, 65));
    CoefficientSpec spec{CoefficientKind::checkerboard, 0.2};
    auto c = make_coefficient(spec, d, 2.0);
    auto prob = make_problem(c, 2.0, 0.0, RadonMeasure{},
                             boundary_data(d, [](const Point& x) { return x.x * x.x - x.y * x.y + x.y; }));
    const Solution u = solve(prob);
    const Point x0{0.05, 0.0};
    const Solution w = solve_companion(prob, u, x0, 0.25);
    const Solution v = solve_frozen(prob, w, x0, 0.25);
    ASSERT_TRUE(v.converged);
    // The frozen solve is a constant-coefficient problem: v equals a solve with
    // that constant set directly.
    const Mat2 avg = ball_average(c, x0, 0.25);
    PDEProblem direct;
    direct.coeff = sample_coefficient(v.domain(), 2.0, [&](const Point&) { return avg; });
    direct.p = 2.0;
    direct.boundary = v.u;
    const Solution v2 = solve(direct);
    EXPECT_LT(max_error(v.u, [&](const Point& x) {
        std::size_t k = 0;
        const Lattice& g = v2.domain()->grid();
        const int i = static_cast<int>(std::lround((x.x - g.x(0)) / g.h));
        const int j = static_cast<int>(std::lround((x.y - g.y(0)) / g.h));
        k = g.index(i, j);
        return v2.u.values[k];
    }), 1e-12);
}
