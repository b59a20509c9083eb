#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "wolfflab/coefficients.hpp"

using namespace wolfflab;

namespace {

OscillationModulus power_modulus(double beta, double r_lo, int n)
{
    OscillationModulus m;
    m.radii = geometric_radii(r_lo, 1.0, n);
    for (double r : m.radii)
        m.values.push_back(std::pow(r, beta));
    return m;
}

// L^2 mean oscillation over one ball, by direct enumeration.
double ball_oscillation(const CoefficientField& c, const Point& x, double r)
{
    const Region reg = ball_region(*c.domain, x, r);
    Mat2 mean{0, 0, 0, 0};
    for (auto k : reg.nodes)
        mean = mean + c.a[k];
    mean = (1.0 / reg.size()) * mean;
    double acc = 0.0;
    for (auto k : reg.nodes)
        acc += (c.a[k] - mean).frobenius2();
    return std::sqrt(acc / reg.size());
}

} // namespace

TEST(Ellipticity, IdentityAndDiagonal)
{
    auto d = share(Domain::square(1.0, 9));
    const auto id = sample_coefficient(d, 1.0, [](const Point&) { return Mat2::identity(); });
    const auto r1 = ellipticity_check(id);
    EXPECT_EQ(r1.lambda_min, 1.0);
    EXPECT_EQ(r1.lambda_max, 1.0);
    const auto diag = sample_coefficient(d, 2.0, [](const Point&) { return Mat2::diagonal(0.5, 2.0); });
    const auto r2 = ellipticity_check(diag);
    EXPECT_EQ(r2.lambda_min, 0.5);
    EXPECT_EQ(r2.lambda_max, 2.0);
}

TEST(Ellipticity, RandomSymmetricAgainstClosedForm)
{
    auto d = share(Domain::square(1.0, 17));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = 3.0;
    const auto c = sample_coefficient(d, lambda, [&](const Point&) {
        const double th = 2.0 * M_PI * u(rng);
        const double e1 = 1.0 / lambda + u(rng) * (1.0 - 1.0 / lambda), e2 = 1.0 + u(rng) * (lambda - 1.0) * 0.5;
        const double cs = std::cos(th), sn = std::sin(th);
        return Mat2{e1 * cs * cs + e2 * sn * sn, (e1 - e2) * cs * sn, (e1 - e2) * cs * sn, e1 * sn * sn + e2 * cs * cs};
    });
    double lo = 1e300, hi = -1e300;
    for (std::size_t k = 0; k < d->size(); ++k) {
        const Mat2& m = c.a[k];
        const double tr = m.xx + m.yy, det = m.xx * m.yy - m.xy * m.yx;
        const double disc = std::sqrt(tr * tr / 4.0 - det);
        lo = std::min(lo, tr / 2.0 - disc);
        hi = std::max(hi, tr / 2.0 + disc);
    }
    const auto rep = ellipticity_check(c);
    EXPECT_NEAR(rep.lambda_min, lo, 1e-12);
    EXPECT_NEAR(rep.lambda_max, hi, 1e-12);
}

TEST(Ellipticity, ViolationNamesNode)
{
    auto d = share(Domain::square(1.0, 9));
    auto c = sample_coefficient(d, 2.0, [](const Point&) { return Mat2::identity(); });
    c.a[d->grid().index(3, 4)] = Mat2::diagonal(0.1, 1.0);
    try {
        ellipticity_check(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ellipticity_violation);
        EXPECT_NE(std::string(e.what()).find("(3, 4)"), std::string::npos);
    }
}

TEST(Oscillation, ConstantIsZero)
{
    auto d = share(Domain::square(1.0, 65));
    const auto c = sample_coefficient(d, 2.0, [](const Point&) { return Mat2{1.3, 0.2, 0.1, 0.9}; });
    const auto m = oscillation_modulus(c, geometric_radii(0.1, 1.0, 6));
    for (double v : m.values)
        EXPECT_EQ(v, 0.0);
}

TEST(Oscillation, InterfaceHalfSplit)
{
    // Interface between node columns so balls centred on it split evenly.
    auto d = share(Domain::square(1.0, 129));
    const double h = d->h();
    const auto c = sample_coefficient(d, 2.0, [&](const Point& p) { return (1.0 + 0.1 * (p.x > h / 2 ? 1.0 : -1.0)) * Mat2::identity(); });
    // Deviation is +-0.1 Id, whose Frobenius norm is 0.1 sqrt(2).
    for (double r : {0.05, 0.1, 0.3})
        EXPECT_NEAR(ball_oscillation(c, {h / 2, 0.0}, r), 0.1 * std::sqrt(2.0), 1e-12);
    // Centers are nodes, h/2 off the interface: the split is even up to O(h/r).
    const std::vector<double> radii{0.05, 0.1, 0.3};
    const auto m = oscillation_modulus(c, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        EXPECT_LE(m.values[k], 0.1 * std::sqrt(2.0) + 1e-12);
        EXPECT_GE(m.values[k], 0.1 * std::sqrt(2.0) * (1.0 - h / radii[k]));
    }
}

TEST(Oscillation, LinearEntriesScaleWithRadius)
{
    auto d = share(Domain::square(1.0, 129));
    const double cc = 0.4;
    const auto c = sample_coefficient(d, 2.0, [&](const Point& p) { return (1.0 + cc * p.x) * Mat2::identity(); });
    const auto radii = geometric_radii(0.05, 0.4, 5);
    const auto m = oscillation_modulus(c, radii);
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        lx.push_back(std::log(radii[k]));
        ly.push_back(std::log(m.values[k]));
        // Brute-force sup over the same centers.
        double sup = 0.0;
        for (std::size_t n = 0; n < d->size(); ++n)
            if (d->global_i(n) % 2 == 0 && d->global_j(n) % 2 == 0)
                sup = std::max(sup, ball_oscillation(c, d->node(n), radii[k]));
        EXPECT_NEAR(m.values[k], sup, 1e-12);
        // Continuum value sqrt(2) c r / 2 (variance of x over a disk is r^2/4),
        // up to the discrete edge-row weighting of clipped balls.
        if (radii[k] >= 8 * d->h()) {
            EXPECT_NEAR(m.values[k], std::sqrt(2.0) * cc * radii[k] / 2.0, 0.06 * m.values[k]);
        }
    }
    EXPECT_NEAR(least_squares(lx, ly).slope, 1.0, 0.05);
    // One ball against direct enumeration.
    const double direct = ball_oscillation(c, {0.0, 0.0}, 0.2);
    EXPECT_NEAR(direct, std::sqrt(2.0) * cc * 0.1, 0.02 * direct);
}

TEST(Oscillation, UnderResolvedRadius)
{
    auto d = share(Domain::square(1.0, 33));
    const auto c = sample_coefficient(d, 1.0, [](const Point&) { return Mat2::identity(); });
    try {
        oscillation_modulus(c, {d->h()});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::under_resolved_radius);
    }
}

TEST(Oscillation, CoarselyMonotoneInRadius)
{
    auto d = share(Domain::square(1.0, 65));
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        CoefficientSpec spec;
        spec.kind = seed % 2 ? CoefficientKind::checkerboard : CoefficientKind::holder;
        spec.amplitude = 0.3;
        spec.seed = seed;
        const auto c = make_coefficient(spec, d, 2.0);
        const auto radii = geometric_radii(4 * d->h(), 1.0, 10);
        const auto m = oscillation_modulus(c, radii);
        for (std::size_t k = 0; k + 1 < radii.size(); ++k)
            EXPECT_GE(m.values[k + 1], m.values[k] * (1.0 - 2.0 * d->h() / radii[k]));
    }
}

TEST(Dini, PowerLawIsExact)
{
    const auto m = power_modulus(0.5, 1e-3, 13);
    const auto res = dini_integral(m, 2.0 / 2.0, 1e-3);
    EXPECT_FALSE(res.dini_fails);
    EXPECT_NEAR(res.extrapolated, 2.0, 1e-6);
    // p / (2 beta) for p = 3: q = 2/3.
    EXPECT_NEAR(dini_integral(m, 2.0 / 3.0, 1e-3).extrapolated, 3.0, 1e-6);
    // Without extrapolation: integral over [r_min, 1] of r^(1/2) / r.
    EXPECT_NEAR(res.value, 2.0 * (1.0 - std::sqrt(1e-3)), 1e-12);
}

TEST(Dini, ZeroModulus)
{
    OscillationModulus m;
    m.radii = geometric_radii(1e-3, 1.0, 5);
    m.values.assign(5, 0.0);
    const auto res = dini_integral(m, 1.0, 1e-3);
    EXPECT_EQ(res.value, 0.0);
    EXPECT_EQ(res.extrapolated, 0.0);
    EXPECT_FALSE(res.dini_fails);
}

TEST(Dini, LogModulusDiverges)
{
    auto make = [](double r_lo) {
        OscillationModulus m;
        m.radii = geometric_radii(r_lo, 1.0, 1 + static_cast<int>(std::lround(-10.0 * std::log10(r_lo))));
        for (double r : m.radii)
            m.values.push_back(1.0 / std::log(std::exp(1.0) / r));
        return m;
    };
    const auto res = dini_integral(make(1e-6), 1.0, 1e-6);
    EXPECT_TRUE(res.dini_fails);
    EXPECT_TRUE(std::isinf(res.extrapolated));
    // Oracle: the integral over [r, 1] is ln(1 - ln r), unbounded as r -> 0.
    double prev = 0.0;
    for (double r_min : {1e-2, 1e-4, 1e-8, 1e-16}) {
        const auto v = dini_integral(make(r_min), 1.0, r_min).value;
        EXPECT_NEAR(v, std::log(1.0 - std::log(r_min)), 2e-3 * v);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Dini, Preconditions)
{
    OscillationModulus m;
    m.radii = {0.1, 1.0};
    m.values = {0.1, 0.2};
    try {
        dini_integral(m, 1.0, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::insufficient_samples);
    }
}

TEST(GeometricTail, ZeroAndConstant)
{
    OscillationModulus zero;
    zero.radii = {0.01, 0.1, 1.0};
    zero.values = {0.0, 0.0, 0.0};
    EXPECT_EQ(geometric_tail(zero, 0.125, 0.3, 1.0, 1.0, 0.01), 0.0);
    OscillationModulus one = zero;
    one.values = {1.0, 1.0, 1.0};
    const double r = std::pow(0.125, 0.3);
    // t > eps R / 2: every term is capped.
    EXPECT_NEAR(geometric_tail(one, 0.125, 0.3, 1.0, 1.0, 0.1), r / (1.0 - r), 1e-10);
    EXPECT_NEAR(r / (1.0 - r), 1.1548, 2e-4);
    // Constant modulus: capping does not change any term.
    EXPECT_NEAR(geometric_tail(one, 0.125, 0.3, 1.0, 1.0, 1e-5), r / (1.0 - r), 1e-10);
}

TEST(GeometricTail, DirectSummationOracle)
{
    const auto m = power_modulus(0.5, 1e-4, 20);
    const double eps = 0.125, a1 = 0.25, R = 1.0, t = 1.0 / 64.0;
    double oracle = 0.0;
    for (int i = 1; i <= 200; ++i) {
        const double rad = t * std::pow(eps, -i);
        oracle += std::pow(eps, a1 * i) * (rad <= R / 2 ? std::sqrt(rad) : std::sqrt(R / 2));
    }
    EXPECT_NEAR(geometric_tail(m, eps, a1, 1.0, R, t), oracle, 1e-12);
}

TEST(GeometricTail, FirstTermBoundAndSummability)
{
    const auto m = power_modulus(0.5, 1e-6, 30);
    const double eps = 0.125, a1 = 0.25;
    for (double t : {1e-5, 1e-3, 0.1, 0.4})
        EXPECT_GE(geometric_tail(m, eps, a1, 1.0, 1.0, t), std::pow(eps, a1) * m(t));
    // Dini modulus gives a Dini tail.
    const double I = tail_dini([&](double t) { return geometric_tail(m, eps, a1, 1.0, 1.0, t); }, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(I));
    EXPECT_LT(I, 50.0);
}

TEST(GeometricTail, InvalidParameters)
{
    const auto m = power_modulus(0.5, 1e-3, 5);
    EXPECT_THROW(geometric_tail(m, 1.5, 0.3, 1.0, 1.0, 0.1), Error);
    EXPECT_THROW(geometric_tail(m, 0.1, 0.0, 1.0, 1.0, 0.1), Error);
    EXPECT_THROW(geometric_tail(m, 0.1, 0.3, 1.0, 1.0, 2.0), Error);
}

TEST(MakeCoefficient, ConstantHasZeroModulus)
{
    auto d = share(Domain::square(1.0, 65));
    const auto c = make_coefficient({}, d, 1.0);
    const auto m = oscillation_modulus(c, geometric_radii(0.1, 1.0, 4));
    for (double v : m.values)
        EXPECT_EQ(v, 0.0);
    EXPECT_EQ(dini_integral(m, 1.0, 0.1).extrapolated, 0.0);
}

TEST(MakeCoefficient, HolderSlope)
{
    auto d = share(Domain::square(1.0, 129));
    CoefficientSpec spec;
    spec.kind = CoefficientKind::holder;
    spec.beta = 0.5;
    spec.amplitude = 0.4;
    spec.seed = 3;
    const auto c = make_coefficient(spec, d, 2.0);
    const auto radii = geometric_radii(4 * d->h(), 0.25, 6);
    const auto m = oscillation_modulus(c, radii);
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        lx.push_back(std::log(radii[k]));
        ly.push_back(std::log(m.values[k]));
    }
    const double slope = least_squares(lx, ly).slope;
    EXPECT_GE(slope, 0.4);
    EXPECT_LE(slope, 0.6);
}

TEST(MakeCoefficient, RejectsEllipticityViolation)
{
    auto d = share(Domain::square(1.0, 17));
    CoefficientSpec spec;
    spec.kind = CoefficientKind::checkerboard;
    spec.amplitude = 0.8;
    EXPECT_THROW(make_coefficient(spec, d, 1.5), Error);
}

TEST(MakeCoefficient, SpikyAudit)
{
    // Three spike generations at radii 1/2, 1/8, 1/128; the smallest is 2h.
    auto d = share(Domain::square(1.0, 513));
    CoefficientSpec spec;
    spec.kind = CoefficientKind::dmo_spiky;
    spec.amplitude = 0.4;
    spec.spike_radius = 0.5;
    const auto c = make_coefficient(spec, d, 2.0);
    const auto spikes = spike_layout(spec);
    ASSERT_EQ(spikes.size(), 3u);
    EXPECT_EQ(spikes[2].radius, 2.0 * d->h());
    const auto radii = geometric_radii(2.0 * d->h(), 1.0, 19);
    const auto m = oscillation_modulus(c, radii);
    // Pointwise modulus from the continuous profile: each cone rises by its
    // full height over its radius.
    const auto phi = coefficient_profile(spec);
    auto pointwise = [&](double r) {
        double best = 0.0;
        for (const Spike& sp : spikes)
            best = std::max(best, std::abs(phi(sp.center) - phi(sp.center + Vec2{std::min(r, sp.radius), 0.0})));
        return spec.amplitude * std::sqrt(2.0) * best;
    };
    // Contribution of each generation window [r_k, r_{k-1}] to both Dini integrals.
    std::vector<double> mean_part, point_part;
    for (int k = 2; k <= 3; ++k) {
        const double lo = spikes[static_cast<std::size_t>(k - 1)].radius, hi = spikes[static_cast<std::size_t>(k - 2)].radius;
        mean_part.push_back(gauss_integrate([&](double l) { return m(std::exp(l)); }, std::log(lo), std::log(hi), 64));
        point_part.push_back(gauss_integrate([&](double l) { return pointwise(std::exp(l)); }, std::log(lo), std::log(hi), 64));
    }
    // Pointwise windows carry height/k times 2^(k-1) ln 2, which grows; the
    // mean-oscillation windows shrink.
    EXPECT_GT(point_part[1], point_part[0]);
    EXPECT_LT(mean_part[1], mean_part[0]);
    EXPECT_TRUE(std::isfinite(dini_integral(m, 1.0, radii.front()).value));
}

TEST(Chart, CombinedModulusDominatedByParts)
{
    auto chi = [](double x) { return 0.2 * std::sin(3.0 * x); };
    auto d = share(Domain::graph(1.0, 129, chi));
    CoefficientSpec spec;
    spec.kind = CoefficientKind::holder;
    spec.amplitude = 0.2;
    const auto c = make_coefficient(spec, d, 2.0);
    const std::vector<double> radii{0.05, 0.1, 0.2};
    const auto rho = oscillation_modulus(c, radii, ModulusFlavor::boundary);
    const auto rho0 = chart_modulus(chi, *d, 1.0, radii);
    const auto rho1 = combined_modulus(c, chi, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        EXPECT_GT(rho1.values[k], 0.0);
        EXPECT_LE(rho1.values[k], 2.0 * (rho.values[k] + rho0.values[k]));
    }
}

TEST(Chart, FlatChartHasZeroChartModulus)
{
    auto d = share(Domain::graph(1.0, 65, [](double) { return 0.0; }));
    const auto m = chart_modulus([](double) { return 0.0; }, *d, 1.0, {0.1, 0.2, 0.4});
    for (double v : m.values)
        EXPECT_EQ(v, 0.0);
}

TEST(CoefficientCsv, RoundTrip)
{
    auto d = share(Domain::disk(1.0, 17));
    CoefficientSpec spec;
    spec.kind = CoefficientKind::holder;
    spec.amplitude = 0.3;
    const auto c = make_coefficient(spec, d, 2.0);
    std::stringstream ss;
    write_coefficient_csv(ss, c);
    const auto back = read_coefficient_csv(ss, d, 2.0);
    for (std::size_t k = 0; k < d->size(); ++k)
        if (d->active(k)) {
            EXPECT_EQ(back.a[k], c.a[k]);
        }
    std::stringstream ms;
    write_modulus_csv(ms, oscillation_modulus(c, {0.3, 0.6}));
    EXPECT_EQ(ms.str().substr(0, 15), "r,omega,flavor\n");
}
