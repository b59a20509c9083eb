#include <gtest/gtest.h>

#include <random>

#include "wolfflab/potentials.hpp"

using namespace wolfflab;

namespace {

const RadonMeasure zero_measure;

RadonMeasure random_atoms(std::mt19937_64& rng, int count, double spread = 0.5)
{
    std::uniform_real_distribution<double> u(-spread, spread), w(0.1, 2.0);
    std::vector<Atom> atoms;
    for (int k = 0; k < count; ++k)
        atoms.push_back({{u(rng), u(rng)}, w(rng)});
    return RadonMeasure(atoms);
}

} // namespace

TEST(Wolff, Examples)
{
    EXPECT_EQ(wolff(zero_measure, {0.1, 0.0}, {0.5, 2.0, 1.0, 1.0, 2}), 0.0);
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    EXPECT_NEAR(wolff(delta, {0.1, 0.0}, {0.5, 2.0, 1.0, 1.0, 2}), 9.0, 1e-12);
    EXPECT_NEAR(wolff(delta, {0.0, 0.2}, {1.0 / 3.0, 3.0, 1.0, 1.0, 2}), 2.0 * (1.0 / std::sqrt(0.2) - 1.0), 1e-12);
    EXPECT_NEAR(2.0 * (1.0 / std::sqrt(0.2) - 1.0), 2.47213595, 1e-8);
    EXPECT_TRUE(std::isinf(wolff(delta, {0.0, 0.0}, {0.5, 2.0, 1.0, 1.0, 2})));
}

TEST(Wolff, RejectsInvalidQuery)
{
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    EXPECT_THROW(wolff(delta, {0.1, 0.0}, {0.5, 1.0, 1.0, 1.0, 2}), Error);
    EXPECT_THROW(wolff(delta, {0.1, 0.0}, {1.5, 2.0, 1.0, 1.0, 2}), Error);
    EXPECT_THROW(wolff(delta, {0.1, 0.0}, {0.5, 2.0, 1.0, 0.0, 2}), Error);
}

TEST(Riesz, Examples)
{
    EXPECT_EQ(riesz(zero_measure, {0.3, 0.3}, 1.0), 0.0);
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    EXPECT_NEAR(riesz(delta, {0.1, 0.0}, 1.0), 9.0, 1e-12);
    EXPECT_TRUE(std::isinf(riesz(delta, {0.0, 0.0}, 1.0)));
}

TEST(PGamma, Examples)
{
    EXPECT_EQ(p_gamma(zero_measure, {0.3, 0.3}, 0.7, 1.0), 0.0);
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    EXPECT_EQ(p_gamma(delta, {0.2, 0.1}, 1.0, 1.0), riesz(delta, {0.2, 0.1}, 1.0));
    const double v = p_gamma(delta, {0.5, 0.0}, 0.7, 1.0);
    EXPECT_NEAR(v, (std::pow(0.5, -0.7) - 1.0) / 0.7, 1e-12);
    EXPECT_NEAR(v, 0.892150, 1e-6);
    // Trapezoid oracle on 1e6 nodes over [0.5, 1] of t^-1.7.
    const int n = 1000000;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = 0.5 + 0.5 * k / n;
        acc += (k == 0 || k == n ? 0.5 : 1.0) * std::pow(t, -1.7);
    }
    EXPECT_NEAR(v, acc * 0.5 / n, 1e-10);
}

TEST(Potentials, ExactForRandomAtomicMeasures)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-0.5, 0.5), pp(1.1, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto mu = random_atoms(rng, 1 + trial % 7);
        const Point x{u(rng), u(rng)};
        const double p = pp(rng), beta = 1.0 / p, R = 0.3 + 0.7 * (u(rng) + 0.5);
        // Oracle: sum over sorted distances in long double.
        std::vector<std::pair<long double, long double>> d;
        for (const Atom& a : mu.atoms())
            d.emplace_back(std::hypot(static_cast<long double>(a.at.x - x.x), static_cast<long double>(a.at.y - x.y)),
                           std::abs(static_cast<long double>(a.weight)));
        std::sort(d.begin(), d.end());
        const long double a_exp = 2.0L - beta * p, e = 1.0L / (p - 1.0L), c = -a_exp * e;
        long double acc = 0.0L, mass = 0.0L;
        for (std::size_t k = 0; k < d.size() && d[k].first < R; ++k) {
            mass += d[k].second;
            const long double hi = (k + 1 < d.size()) ? std::min<long double>(d[k + 1].first, R) : R;
            acc += std::pow(mass, e) * (std::pow(hi, c) - std::pow(d[k].first, c)) / c;
        }
        const double w = wolff(mu, x, {beta, p, 1.0, R, 2});
        EXPECT_NEAR(w, static_cast<double>(acc), 1e-12 * std::max(1.0, static_cast<double>(acc)));
    }
}

TEST(Potentials, MonotoneInRadius)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mu = random_atoms(rng, 5);
        const Point x{0.05, -0.1};
        double pw = 0.0, pr = 0.0, pg = 0.0;
        for (double R = 0.05; R <= 1.0; R += 0.05) {
            const double w = wolff(mu, x, PotentialQuery::wolff_1p(2.5, R));
            const double r = riesz(mu, x, R);
            const double g = p_gamma(mu, x, 0.8, R);
            EXPECT_GE(w, pw);
            EXPECT_GE(r, pr);
            EXPECT_GE(g, pg);
            pw = w;
            pr = r;
            pg = g;
        }
    }
}

TEST(Potentials, AdditiveDomination)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Atom> a1, a2;
        for (int k = 0; k < 4; ++k) {
            const Point at{u(rng), u(rng)};
            a1.push_back({at, u(rng)});
            a2.push_back({k % 2 ? at : Point{u(rng), u(rng)}, u(rng)});
        }
        std::vector<Atom> sum = a1, abs_sum;
        sum.insert(sum.end(), a2.begin(), a2.end());
        for (const auto& a : sum)
            abs_sum.push_back({a.at, std::abs(a.weight)});
        const Point x{0.05, 0.07};
        const auto q = PotentialQuery::wolff_1p(1.6);
        EXPECT_LE(wolff(RadonMeasure(sum), x, q), wolff(RadonMeasure(abs_sum), x, q) * (1 + 1e-12));
    }
}

TEST(Potentials, TranslationEquivariance)
{
    const auto q = PotentialQuery::wolff_1p(3.0);
    const double ref = wolff(RadonMeasure::dirac({0.0, 0.0}), {0.3, 0.0}, q);
    for (double th = 0.1; th < 6.0; th += 0.7) {
        const Point y{0.1, -0.2};
        const Point x = y + Vec2{0.3 * std::cos(th), 0.3 * std::sin(th)};
        EXPECT_NEAR(wolff(RadonMeasure::dirac(y), x, q), ref, 1e-12 * ref);
    }
}

TEST(Potentials, UniformDensityQuadrature)
{
    // Interior disks see |mu|(B_t) = pi t^2, so W_{1/2,2}^R = pi R and I_1^R = pi R.
    auto d = share(Domain::square(1.0, 129));
    const RadonMeasure mu({}, ScalarField(d, 1.0));
    for (Point x : {Point{0.0, 0.0}, Point{0.013, -0.2}}) {
        EXPECT_NEAR(wolff(mu, x, {0.5, 2.0, 1.0, 0.5, 2}), M_PI * 0.5, 1e-8 * M_PI);
        EXPECT_NEAR(riesz(mu, x, 0.5), M_PI * 0.5, 1e-8 * M_PI);
        // p = 3, beta = 1/3: int (pi t^2 / t)^(1/2) dt/t = sqrt(pi) 2 sqrt(R).
        EXPECT_NEAR(wolff(mu, x, {1.0 / 3.0, 3.0, 1.0, 0.5, 2}), std::sqrt(M_PI) * 2.0 * std::sqrt(0.5), 1e-8);
    }
}

TEST(Potentials, RandomDensityAgainstFineQuadrature)
{
    auto d = share(Domain::square(1.0, 33));
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const RadonMeasure mu({{{0.2, 0.1}, 0.3}}, ScalarField::sample(d, [&](const Point&) { return u(rng); }));
    const Point x{0.031, -0.047};
    const double R = 0.6, a = 1.0, e = 1.0 / 0.6;
    // Oracle: Gauss-Legendre on 2000 uniform sub-intervals on each side of the atom.
    const double jump = dist(Point{0.2, 0.1}, x);
    auto integrand = [&](double t) { return std::pow(mu.cell_ball_mass(x, t) / t, e) / t; };
    double oracle = 0.0;
    const int pieces = 2000;
    for (auto [a0, b0] : {std::pair{1e-9, jump}, std::pair{jump, R}})
        for (int k = 0; k < pieces; ++k)
            oracle += gauss_integrate(integrand, a0 + (b0 - a0) * k / pieces, a0 + (b0 - a0) * (k + 1) / pieces, 8);
    const double v = radial_potential(mu, x, a, e, R);
    EXPECT_NEAR(v, oracle, 1e-6 * oracle);
}

TEST(Tilde, ZeroAndCappedClosedForm)
{
    const auto q = PotentialQuery::wolff_1p(2.0);
    EXPECT_EQ(tilde_wolff(zero_measure, {0.1, 0.1}, 0.1, 0.125, 0.25, 1.0, q), 0.0);
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    const Point x{0.2, 0.0};
    const double eps = 0.125, a1 = 0.25, R = 1.0, rho = 0.1; // rho > eps R / 2
    const double r = std::pow(eps, a1);
    const double w_half = wolff(delta, x, PotentialQuery::wolff_1p(2.0, R / 2));
    EXPECT_NEAR(tilde_wolff(delta, x, rho, eps, a1, R, q), w_half * r / (1.0 - r), 1e-12);
    EXPECT_NEAR(tilde_riesz(delta, x, rho, eps, a1, R), riesz(delta, x, R / 2) * r / (1.0 - r), 1e-12);
}

TEST(Tilde, DirectSummationOracle)
{
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    const Point x{0.01, 0.0};
    const double eps = 0.125, a1 = 0.25, R = 1.0, rho = R / 64.0;
    const auto q = PotentialQuery::wolff_1p(2.0);
    // W^r_{1/2,2} of a unit atom at distance 0.01: (1/0.01 - 1/r) for r > 0.01.
    auto w = [](double r) { return r > 0.01 ? 1.0 / 0.01 - 1.0 / r : 0.0; };
    double oracle = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double rad = rho * std::pow(eps, -i);
        oracle += std::pow(eps, a1 * i) * (rad <= R / 2 ? w(rad) : w(R / 2));
    }
    EXPECT_NEAR(tilde_wolff(delta, x, rho, eps, a1, R, q), oracle, 1e-10);
    EXPECT_THROW(tilde_wolff(delta, x, rho, 1.5, a1, R, q), Error);
    EXPECT_THROW(tilde_riesz(delta, x, 2.0, eps, a1, R), Error);
}

TEST(Dyadic, ZeroAndDirectEvaluation)
{
    const auto z = dyadic_sum(zero_measure, {0.1, 0.0}, 0.5, 1.0, 0, 5, 2.0);
    EXPECT_EQ(z.sum, 0.0);
    EXPECT_EQ(z.ratio, 0.0);
    const double eps = 0.5, R = 0.5;
    const int dmax = 4;
    const Point x{std::pow(eps, dmax) * R, 0.0};
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    const auto res = dyadic_sum(delta, x, eps, R, 0, dmax, 2.0);
    double direct = 0.0;
    for (int j = 0; j <= dmax; ++j) {
        const double r = std::pow(eps, j) * R;
        if (2.0 * r >= x.x)
            direct += 1.0 / r;
    }
    EXPECT_NEAR(res.sum, direct, 1e-12 * direct);
    EXPECT_NEAR(res.integral, wolff(delta, x, PotentialQuery::wolff_1p(2.0, 2.0 * R / eps)), 1e-12);
}

TEST(Dyadic, UniformDensityRatioBounded)
{
    auto d = share(Domain::square(1.0, 65));
    const RadonMeasure mu({}, ScalarField(d, 1.0));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int k = 0; k < 20; ++k) {
        const auto res = dyadic_sum(mu, {u(rng), u(rng)}, 0.5, 0.25, 1, 4, 2.0);
        EXPECT_GT(res.ratio, 0.0);
        EXPECT_LE(res.ratio, 10.0);
    }
}

TEST(Domination, Examples)
{
    const auto z = wolff_riesz_domination(zero_measure, {0.1, 0.0}, 0.2, 1.5);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    EXPECT_EQ(z.ratio, 1.0);
    const auto delta = RadonMeasure::dirac({0.0, 0.0});
    const double rho = 0.2, p = 1.5;
    const auto res = wolff_riesz_domination(delta, {rho / 2, 0.0}, rho, p);
    // W^rho_{2/3,3/2}: int_{rho/2}^rho t^(-1) (t^-1)^2 dt = ((rho/2)^-2 - rho^-2) / 2.
    const double lhs = (std::pow(rho / 2, -2.0) - std::pow(rho, -2.0)) / 2.0;
    // I_1^{2 rho} = 2/rho - 1/(2 rho), raised to 1/(p-1) = 2.
    const double rhs = std::pow(2.0 / rho - 1.0 / (2.0 * rho), 2.0);
    EXPECT_NEAR(res.lhs, lhs, 1e-12 * lhs);
    EXPECT_NEAR(res.rhs, rhs, 1e-12 * rhs);
    EXPECT_NEAR(res.ratio, lhs / rhs, 1e-12);
    EXPECT_THROW(wolff_riesz_domination(delta, {0.1, 0.0}, rho, 2.5), Error);
}

TEST(Domination, RandomSweepStableUnderHalving)
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (double p : {1.2, 1.5, 1.9}) {
        double worst = 0.0, worst_half = 0.0;
        for (int m = 0; m < 50; ++m) {
            const auto mu = random_atoms(rng, 1 + m % 5, 0.4);
            for (int s = 0; s < 5; ++s) {
                const Point x{u(rng), u(rng)};
                worst = std::max(worst, wolff_riesz_domination(mu, x, 0.2, p).ratio);
                worst_half = std::max(worst_half, wolff_riesz_domination(mu, x, 0.1, p).ratio);
            }
        }
        EXPECT_TRUE(std::isfinite(worst));
        EXPECT_LE(std::max(worst / worst_half, worst_half / worst), 2.0);
    }
}

TEST(Lorentz, Examples)
{
    auto d = share(Domain::square(1.0, 33));
    EXPECT_EQ(lorentz_quasinorm(ScalarField(d, 0.0), 2, 1.0), 0.0);
    // Indicator with value 2 on 0.25 / h^2 nodes: c m^(1/n) gamma^(-1/gamma).
    ScalarField f(d, 0.0);
    const double h = d->h();
    const int count = static_cast<int>(std::lround(0.25 / (h * h)));
    for (int k = 0; k < count; ++k)
        f.values[static_cast<std::size_t>(k)] = 2.0;
    EXPECT_NEAR(lorentz_quasinorm(f, 2, 1.0), 1.0, 1e-12);
    EXPECT_NEAR(lorentz_quasinorm(f, 2, 0.5), 2.0 * 0.5 * std::pow(0.5, -2.0), 1e-12);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto g = ScalarField::sample(d, [&](const Point&) { return n(rng); });
    auto g3 = g;
    for (auto& v : g3.values)
        v *= 3.0;
    EXPECT_NEAR(lorentz_quasinorm(g3, 2, 0.7), 3.0 * lorentz_quasinorm(g, 2, 0.7), 1e-12);
    EXPECT_THROW(lorentz_quasinorm(g, 2, 0.0), Error);
}

TEST(Lorentz, TwoLevelAgainstDirectIntegral)
{
    auto d = share(Domain::square(1.0, 17));
    ScalarField f(d, 0.0);
    const double h2 = d->h() * d->h();
    // 10 nodes at 3, 30 nodes at 1.
    for (std::size_t k = 0; k < 40; ++k)
        f.values[k] = k < 10 ? 3.0 : 1.0;
    const double m_low = 40 * h2, m_high = 10 * h2;
    const double gamma = 1.5;
    const double direct = std::pow(m_low, gamma / 2) * 1.0 / gamma + std::pow(m_high, gamma / 2) * (std::pow(3.0, gamma) - 1.0) / gamma;
    EXPECT_NEAR(lorentz_quasinorm(f, 2, gamma), std::pow(direct, 1.0 / gamma), 1e-12);
}
