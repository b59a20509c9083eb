#pragma once

// Small numerical helpers shared across modules.

#include <cmath>
#include <utility>
#include <vector>

namespace wolfflab {

struct QuadratureRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes and weights by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n)
{
    QuadratureRule q;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes[static_cast<std::size_t>(i)] = -x;
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        q.weights[static_cast<std::size_t>(i)] = w;
        q.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return q;
}

// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double gauss_integrate(F&& f, double a, double b, int n = 32)
{
    static thread_local std::vector<std::pair<int, QuadratureRule>> cache;
    const QuadratureRule* rule = nullptr;
    for (const auto& e : cache)
        if (e.first == n)
            rule = &e.second;
    if (!rule) {
        cache.emplace_back(n, gauss_legendre(n));
        rule = &cache.back().second;
    }
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule->nodes.size(); ++k)
        acc += rule->weights[k] * f(mid + half * rule->nodes[k]);
    return acc * half;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // root-mean-square residual
    double slope_stderr = 0.0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    LinearFit f;
    const std::size_t n = x.size();
    if (n == 0)
        return f;
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = y[k] - (f.intercept + f.slope * x[k]);
        ss += e * e;
    }
    f.residual = std::sqrt(ss / static_cast<double>(n));
    if (n > 2 && sxx > 0.0)
        f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    return f;
}

} // namespace wolfflab
