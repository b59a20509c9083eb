#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "lattice.hpp"
#include "measures.hpp"

namespace wolfflab {

enum class Scheme { automatic, kacanov, damped_newton };

inline const char* to_string(Scheme s)
{
    switch (s) {
    case Scheme::automatic: return "auto";
    case Scheme::kacanov: return "kacanov";
    case Scheme::damped_newton: return "newton";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s)
{
    if (s == "auto" || s == "automatic") return Scheme::automatic;
    if (s == "kacanov") return Scheme::kacanov;
    if (s == "newton" || s == "damped_newton") return Scheme::damped_newton;
    throw Error(ErrorCode::parse, "unknown scheme '" + s + "'");
}

struct SolverConfig {
    Scheme scheme = Scheme::automatic; // kacanov for p <= 2, damped Newton above
    double delta_reg = 0.1;            // first continuation value of the regularization
    double continuation_ratio = 0.1;
    int continuation_steps = 6;        // stages with delta > 0 before the final delta = 0 stage
    double tol = 1e-8;
    double stage_tol = 1e-4;           // target of the intermediate continuation stages
    int max_iter = 200;                // per stage
    double damping = 0.5;
    std::size_t direct_limit = 513 * 513;

    void validate() const
    {
        if (!(tol > 0.0)) throw Error(ErrorCode::invalid_parameter, "tol must be positive");
        if (max_iter < 1) throw Error(ErrorCode::invalid_parameter, "max_iter must be at least 1");
        if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorCode::invalid_parameter, "damping must lie in (0, 1]");
        if (!(delta_reg >= 0.0)) throw Error(ErrorCode::invalid_parameter, "delta_reg must be nonnegative");
        if (continuation_steps < 0) throw Error(ErrorCode::invalid_parameter, "continuation_steps must be nonnegative");
    }
};

struct PDEProblem {
    CoefficientField coeff;
    double p = 2.0;
    double s = 0.0;
    RadonMeasure rhs;
    ScalarField boundary; // read at boundary nodes only

    const DomainPtr& domain() const { return coeff.domain; }

    void validate() const
    {
        if (!coeff.domain) throw Error(ErrorCode::invalid_domain, "problem has no domain");
        if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::invalid_exponent, "p must exceed 1");
        if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::invalid_parameter, "s must be nonnegative");
        if (boundary.domain && boundary.domain->size() != coeff.domain->size())
            throw Error(ErrorCode::invalid_domain, "boundary data lives on a different lattice");
        const Domain& d = *coeff.domain;
        for (std::size_t k = 0; k < d.size(); ++k)
            if (d.type(k) == NodeType::boundary && boundary.domain && !std::isfinite(boundary.values[k]))
                throw Error(ErrorCode::invalid_parameter, "boundary data must be finite");
    }
};

template <class F>
ScalarField boundary_data(DomainPtr d, F&& f)
{
    return ScalarField::sample(std::move(d), std::forward<F>(f));
}

inline PDEProblem make_problem(CoefficientField coeff, double p, double s, RadonMeasure rhs,
                               std::optional<ScalarField> boundary = std::nullopt)
{
    PDEProblem prob;
    prob.p = p;
    prob.s = s;
    prob.rhs = std::move(rhs);
    prob.boundary = boundary ? std::move(*boundary) : ScalarField(coeff.domain, 0.0);
    prob.coeff = std::move(coeff);
    prob.validate();
    ellipticity_check(prob.coeff);
    return prob;
}

struct Solution {
    ScalarField u;
    VectorField grad;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;

    const DomainPtr& domain() const { return u.domain; }
};

// V(xi) = (|xi|^2 + s^2)^((p-2)/4) xi
inline Vec2 v_map(const Vec2& xi, double p, double s)
{
    const double m2 = norm2(xi) + s * s;
    if (m2 == 0.0)
        return {0.0, 0.0};
    return std::pow(m2, (p - 2.0) / 4.0) * xi;
}

namespace detail {

struct Edge {
    std::size_t a = 0, b = 0; // a is the west (south) end
    double cn = 0.0, ct = 0.0; // normal-normal and normal-tangential entries of the edge coefficient
    int ntan = 0;
    std::array<std::size_t, 6> tan_node{};
    std::array<double, 6> tan_w{}; // h times the tangential derivative is sum w u
};

// Stencil of h * d/d(axis) at node (i, j): central, else one-sided.
inline int axis_stencil(const Domain& d, int i, int j, int di, int dj, std::array<std::size_t, 3>& node,
                        std::array<double, 3>& w)
{
    const Lattice& g = d.grid();
    const bool p1 = d.active(i + di, j + dj), m1 = d.active(i - di, j - dj);
    if (p1 && m1) {
        node[0] = g.index(i + di, j + dj); w[0] = 0.5;
        node[1] = g.index(i - di, j - dj); w[1] = -0.5;
        return 2;
    }
    if (p1) {
        node[0] = g.index(i + di, j + dj); w[0] = 1.0;
        node[1] = g.index(i, j); w[1] = -1.0;
        return 2;
    }
    if (m1) {
        node[0] = g.index(i, j); w[0] = 1.0;
        node[1] = g.index(i - di, j - dj); w[1] = -1.0;
        return 2;
    }
    return 0;
}

struct Discretization {
    DomainPtr dom;
    double h = 0.0;
    std::vector<int> unknown; // node -> unknown index, -1 if fixed or exterior
    std::vector<std::size_t> nodes;
    std::vector<Edge> edges;
    std::vector<std::array<int, 4>> node_edges; // per unknown: incident edges, -1 if absent
    bool diagonal = true;

    explicit Discretization(const CoefficientField& c) : dom(c.domain), h(c.domain->h())
    {
        const Domain& d = *dom;
        const Lattice& g = d.grid();
        unknown.assign(d.size(), -1);
        for (std::size_t k = 0; k < d.size(); ++k)
            if (d.type(k) == NodeType::interior) {
                unknown[k] = static_cast<int>(nodes.size());
                nodes.push_back(k);
            }
        node_edges.assign(nodes.size(), {-1, -1, -1, -1});
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (!d.active(i, j))
                    continue;
                for (int dir = 0; dir < 2; ++dir) {
                    const int di = dir == 0 ? 1 : 0, dj = 1 - di;
                    if (!d.active(i + di, j + dj))
                        continue;
                    const std::size_t ka = g.index(i, j), kb = g.index(i + di, j + dj);
                    if (unknown[ka] < 0 && unknown[kb] < 0)
                        continue;
                    Edge e;
                    e.a = ka;
                    e.b = kb;
                    const Mat2 A = 0.5 * (c.a[ka] + c.a[kb]);
                    e.cn = dir == 0 ? A.xx : A.yy;
                    e.ct = dir == 0 ? A.xy : A.yx;
                    if (e.ct != 0.0)
                        diagonal = false;
                    std::array<std::array<std::size_t, 3>, 2> sn{};
                    std::array<std::array<double, 3>, 2> sw{};
                    std::array<int, 2> ms{};
                    for (int end = 0; end < 2; ++end)
                        ms[static_cast<std::size_t>(end)] = axis_stencil(d, i + end * di, j + end * dj, dj, di,
                                                                         sn[static_cast<std::size_t>(end)],
                                                                         sw[static_cast<std::size_t>(end)]);
                    // Average the two end stencils; an end without one defers to the other.
                    const double share_w = (ms[0] > 0 && ms[1] > 0) ? 0.5 : 1.0;
                    for (std::size_t end = 0; end < 2; ++end) {
                        for (int q = 0; q < ms[end]; ++q) {
                            const std::size_t node = sn[end][static_cast<std::size_t>(q)];
                            int slot = 0;
                            while (slot < e.ntan && e.tan_node[static_cast<std::size_t>(slot)] != node)
                                ++slot;
                            if (slot == e.ntan) {
                                e.tan_node[static_cast<std::size_t>(slot)] = node;
                                e.tan_w[static_cast<std::size_t>(slot)] = 0.0;
                                ++e.ntan;
                            }
                            e.tan_w[static_cast<std::size_t>(slot)] += share_w * sw[end][static_cast<std::size_t>(q)];
                        }
                    }
                    const int id = static_cast<int>(edges.size());
                    edges.push_back(e);
                    if (unknown[ka] >= 0) node_edges[static_cast<std::size_t>(unknown[ka])][dir == 0 ? 0 : 2] = id;
                    if (unknown[kb] >= 0) node_edges[static_cast<std::size_t>(unknown[kb])][dir == 0 ? 1 : 3] = id;
                }
            }
    }
};

struct EdgeState {
    double nh = 0.0, th = 0.0; // h times the normal and tangential derivatives
    double G2 = 0.0;           // |grad|^2 + s_eff^2
    double hF = 0.0;           // h times the normal flux
};

inline EdgeState edge_state(const Edge& e, const std::vector<double>& u, double h, double p, double s2)
{
    EdgeState st;
    st.nh = u[e.b] - u[e.a];
    for (int q = 0; q < e.ntan; ++q)
        st.th += e.tan_w[static_cast<std::size_t>(q)] * u[e.tan_node[static_cast<std::size_t>(q)]];
    st.G2 = (st.nh * st.nh + st.th * st.th) / (h * h) + s2;
    const double lin = e.cn * st.nh + e.ct * st.th;
    st.hF = st.G2 > 0.0 ? std::pow(st.G2, (p - 2.0) / 2.0) * lin : 0.0;
    return st;
}

struct ResidualEval {
    std::vector<double> R; // per unknown: operator minus load
    double max_abs = 0.0;
    double l2 = 0.0;
    double scale = 0.0;
    double relative() const { return scale > 0.0 ? max_abs / scale : 0.0; }
};

inline ResidualEval evaluate_residual(const Discretization& D, const std::vector<double>& u,
                                      const std::vector<double>& load_mass, double p, double s2)
{
    ResidualEval ev;
    ev.R.assign(D.nodes.size(), 0.0);
    double flux_max = 0.0;
    for (const Edge& e : D.edges) {
        const EdgeState st = edge_state(e, u, D.h, p, s2);
        flux_max = std::max(flux_max, std::abs(st.hF));
        if (D.unknown[e.a] >= 0) ev.R[static_cast<std::size_t>(D.unknown[e.a])] -= st.hF;
        if (D.unknown[e.b] >= 0) ev.R[static_cast<std::size_t>(D.unknown[e.b])] += st.hF;
    }
    double load_max = 0.0;
    for (std::size_t q = 0; q < D.nodes.size(); ++q) {
        ev.R[q] -= load_mass[q];
        load_max = std::max(load_max, std::abs(load_mass[q]));
        ev.max_abs = std::max(ev.max_abs, std::abs(ev.R[q]));
        ev.l2 += ev.R[q] * ev.R[q];
    }
    ev.l2 = std::sqrt(ev.l2);
    ev.scale = std::max(load_max, flux_max);
    return ev;
}

using SpMat = Eigen::SparseMatrix<double>;

class LinearSolver {
public:
    LinearSolver(bool symmetric, bool direct) : symmetric_(symmetric), direct_(direct) {}

    bool solve(const SpMat& A, const Eigen::VectorXd& b, Eigen::VectorXd& x)
    {
        if (!direct_) {
            if (symmetric_) {
                Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
                cg.setTolerance(1e-10);
                cg.compute(A);
                x = cg.solve(b);
                return cg.info() == Eigen::Success;
            }
            Eigen::BiCGSTAB<SpMat> bi;
            bi.setTolerance(1e-10);
            bi.compute(A);
            x = bi.solve(b);
            return bi.info() == Eigen::Success;
        }
        if (symmetric_) {
            if (!analyzed_) { ldlt_.analyzePattern(A); analyzed_ = true; }
            ldlt_.factorize(A);
            if (ldlt_.info() != Eigen::Success) return false;
            x = ldlt_.solve(b);
            return ldlt_.info() == Eigen::Success;
        }
        if (!analyzed_) { lu_.analyzePattern(A); analyzed_ = true; }
        lu_.factorize(A);
        if (lu_.info() != Eigen::Success) return false;
        x = lu_.solve(b);
        return lu_.info() == Eigen::Success;
    }

private:
    bool symmetric_, direct_;
    bool analyzed_ = false;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

// Floor for |grad|^2 + s_eff^2 inside linearizations, where the flux
// derivative blows up (p < 2) or vanishes (p > 2) at zero gradient.
inline double linearization_floor(const Discretization& D, const std::vector<double>& u)
{
    double gmax = 0.0;
    for (const Edge& e : D.edges)
        gmax = std::max(gmax, std::abs(u[e.b] - u[e.a]) / D.h);
    const double f = 1e-8 * std::max(gmax, 1e-6);
    return f * f;
}

// Frozen-nonlinearity operator: sum over edges of kappa_e (cn (u_b - u_a) + ct sum w u).
inline void assemble_kacanov(const Discretization& D, const std::vector<double>& u, double p, double s2,
                             const std::vector<double>& load_mass, SpMat& A, Eigen::VectorXd& rhs)
{
    const double floor2 = linearization_floor(D, u);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(D.edges.size() * 16);
    rhs = Eigen::Map<const Eigen::VectorXd>(load_mass.data(), static_cast<Eigen::Index>(load_mass.size()));
    for (const Edge& e : D.edges) {
        const EdgeState st = edge_state(e, u, D.h, p, s2);
        const double kappa = std::pow(std::max(st.G2, floor2), (p - 2.0) / 2.0);
        std::array<std::size_t, 8> col{};
        std::array<double, 8> val{};
        int nc = 0;
        col[nc] = e.b; val[nc++] = kappa * e.cn;
        col[nc] = e.a; val[nc++] = -kappa * e.cn;
        for (int q = 0; q < e.ntan && e.ct != 0.0; ++q) {
            col[nc] = e.tan_node[static_cast<std::size_t>(q)];
            val[nc++] = kappa * e.ct * e.tan_w[static_cast<std::size_t>(q)];
        }
        for (int end = 0; end < 2; ++end) {
            const std::size_t k = end == 0 ? e.a : e.b;
            const int row = D.unknown[k];
            if (row < 0)
                continue;
            const double tau = end == 0 ? -1.0 : 1.0;
            for (int q = 0; q < nc; ++q) {
                const int c = D.unknown[col[static_cast<std::size_t>(q)]];
                const double v = tau * val[static_cast<std::size_t>(q)];
                if (c >= 0)
                    trip.emplace_back(row, c, v);
                else
                    rhs[row] -= v * u[col[static_cast<std::size_t>(q)]];
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(D.nodes.size());
    A.resize(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
}

// Exact Jacobian of the discrete operator with respect to the unknowns.
inline void assemble_jacobian(const Discretization& D, const std::vector<double>& u, double p, double s2, SpMat& J)
{
    const double floor2 = linearization_floor(D, u);
    const double h2 = D.h * D.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(D.edges.size() * 16);
    for (const Edge& e : D.edges) {
        const EdgeState st = edge_state(e, u, D.h, p, s2);
        const double G2 = std::max(st.G2, floor2);
        const double kappa = std::pow(G2, (p - 2.0) / 2.0);
        const double dk = (p - 2.0) * kappa / G2 * (e.cn * st.nh + e.ct * st.th) / h2;
        std::array<std::size_t, 8> col{};
        std::array<double, 8> val{};
        int nc = 0;
        auto add = [&](std::size_t node, double v) {
            for (int q = 0; q < nc; ++q)
                if (col[static_cast<std::size_t>(q)] == node) {
                    val[static_cast<std::size_t>(q)] += v;
                    return;
                }
            col[static_cast<std::size_t>(nc)] = node;
            val[static_cast<std::size_t>(nc++)] = v;
        };
        add(e.b, kappa * e.cn + dk * st.nh);
        add(e.a, -kappa * e.cn - dk * st.nh);
        for (int q = 0; q < e.ntan; ++q) {
            const double w = e.tan_w[static_cast<std::size_t>(q)];
            add(e.tan_node[static_cast<std::size_t>(q)], kappa * e.ct * w + dk * st.th * w);
        }
        for (int end = 0; end < 2; ++end) {
            const int row = D.unknown[end == 0 ? e.a : e.b];
            if (row < 0)
                continue;
            const double tau = end == 0 ? -1.0 : 1.0;
            for (int q = 0; q < nc; ++q) {
                const int c = D.unknown[col[static_cast<std::size_t>(q)]];
                if (c >= 0)
                    trip.emplace_back(row, c, tau * val[static_cast<std::size_t>(q)]);
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(D.nodes.size());
    J.resize(n, n);
    J.setFromTriplets(trip.begin(), trip.end());
}

inline std::vector<double> load_masses(const Discretization& D, const RadonMeasure& mu)
{
    const ScalarField load = discretize(mu, D.dom);
    const double h2 = D.h * D.h;
    std::vector<double> m(D.nodes.size());
    for (std::size_t q = 0; q < D.nodes.size(); ++q)
        m[q] = load.values[D.nodes[q]] * h2;
    return m;
}

} // namespace detail

// Relative residual of the discrete weak form: max over interior nodes of
// |operator - load|, divided by the larger of the largest nodal load and the
// largest edge flux (both scaled by h).
inline double residual(const PDEProblem& prob, const ScalarField& u)
{
    const detail::Discretization D(prob.coeff);
    return detail::evaluate_residual(D, u.values, detail::load_masses(D, prob.rhs), prob.p, prob.s * prob.s).relative();
}

inline Solution solve(const PDEProblem& prob, const SolverConfig& cfg = {},
                      const std::optional<ScalarField>& initial = std::nullopt)
{
    prob.validate();
    cfg.validate();
    ellipticity_check(prob.coeff);
    const Domain& dom = *prob.domain();
    const detail::Discretization D(prob.coeff);
    const std::vector<double> mass = detail::load_masses(D, prob.rhs);

    std::vector<double> u(dom.size(), exterior_sentinel);
    for (std::size_t k = 0; k < dom.size(); ++k) {
        if (dom.type(k) == NodeType::boundary)
            u[k] = prob.boundary.domain ? prob.boundary.values[k] : 0.0;
        else if (dom.type(k) == NodeType::interior)
            u[k] = initial ? initial->values[k] : 0.0;
    }

    const bool newton = cfg.scheme == Scheme::damped_newton || (cfg.scheme == Scheme::automatic && prob.p > 2.0);
    const bool linear = prob.p == 2.0;
    std::vector<double> deltas;
    if (!linear && cfg.delta_reg > 0.0)
        for (int i = 0; i < cfg.continuation_steps; ++i)
            deltas.push_back(cfg.delta_reg * std::pow(cfg.continuation_ratio, i));
    deltas.push_back(0.0);

    const bool direct = D.nodes.size() <= cfg.direct_limit;
    detail::LinearSolver kac_solver(D.diagonal, direct);
    detail::LinearSolver newton_solver(false, direct);
    const auto n = static_cast<Eigen::Index>(D.nodes.size());
    detail::SpMat A;
    Eigen::VectorXd rhs, x(n);

    Solution sol;
    bool failed = false;
    for (std::size_t stage = 0; stage < deltas.size() && !failed; ++stage) {
        const double s2 = prob.s * prob.s + deltas[stage] * deltas[stage];
        const bool last = stage + 1 == deltas.size();
        const double target = last ? cfg.tol : std::max(cfg.tol, cfg.stage_tol);
        detail::ResidualEval ev = detail::evaluate_residual(D, u, mass, prob.p, s2);
        for (int it = 0; it < cfg.max_iter && ev.relative() > target; ++it) {
            ++sol.iterations;
            std::vector<double> trial = u;
            if (!newton) {
                detail::assemble_kacanov(D, u, prob.p, s2, mass, A, rhs);
                if (!kac_solver.solve(A, rhs, x)) { failed = true; break; }
                for (Eigen::Index q = 0; q < n; ++q)
                    trial[D.nodes[static_cast<std::size_t>(q)]] = x[q];
                detail::ResidualEval tev = detail::evaluate_residual(D, trial, mass, prob.p, s2);
                if (!(tev.relative() < ev.relative())) {
                    for (std::size_t q = 0; q < D.nodes.size(); ++q) {
                        const std::size_t k = D.nodes[q];
                        trial[k] = u[k] + cfg.damping * (trial[k] - u[k]);
                    }
                    tev = detail::evaluate_residual(D, trial, mass, prob.p, s2);
                }
                u.swap(trial);
                ev = std::move(tev);
            } else {
                detail::assemble_jacobian(D, u, prob.p, s2, A);
                Eigen::VectorXd mR = -Eigen::Map<const Eigen::VectorXd>(ev.R.data(), n);
                if (!newton_solver.solve(A, mR, x)) { failed = true; break; }
                double theta = 1.0;
                bool accepted = false;
                detail::ResidualEval tev;
                while (theta >= 1.0 / 64.0) {
                    for (Eigen::Index q = 0; q < n; ++q) {
                        const std::size_t k = D.nodes[static_cast<std::size_t>(q)];
                        trial[k] = u[k] + theta * x[q];
                    }
                    tev = detail::evaluate_residual(D, trial, mass, prob.p, s2);
                    if (tev.l2 < (1.0 - 1e-4 * theta) * ev.l2) { accepted = true; break; }
                    theta *= 0.5;
                }
                if (!accepted) {
                    for (Eigen::Index q = 0; q < n; ++q) {
                        const std::size_t k = D.nodes[static_cast<std::size_t>(q)];
                        trial[k] = u[k] + cfg.damping * x[q];
                    }
                    tev = detail::evaluate_residual(D, trial, mass, prob.p, s2);
                }
                u.swap(trial);
                ev = std::move(tev);
            }
            if (!std::isfinite(ev.l2)) { failed = true; break; }
        }
        if (last)
            sol.residual_norm = ev.relative();
    }
    sol.u = ScalarField(prob.domain(), 0.0);
    sol.u.values = std::move(u);
    sol.grad = gradient(sol.u);
    sol.converged = !failed && sol.residual_norm <= cfg.tol;
    if (failed)
        sol.residual_norm = std::numeric_limits<double>::infinity();
    return sol;
}

namespace detail {

// Thickness of the fixed shell around companion and frozen balls: every
// stencil touching an unknown then reads the same nodes as in the parent.
inline double shell_width(double h) { return 1.5 * h; }

// Every node within distance r of x is an interior node of d and every node
// within r + shell is active.
inline void require_compact_ball(const Domain& d, const Point& x, double r)
{
    const Lattice& g = d.grid();
    const double ro = r + shell_width(g.h);
    if (x.x - ro <= g.x(0) || x.x + ro >= g.x(g.nx - 1) || x.y - ro <= g.y(0) || x.y + ro >= g.y(g.ny - 1))
        throw Error(ErrorCode::geometry, "ball leaves the lattice");
    for (std::size_t k : ball_region(d, x, r).nodes)
        if (d.type(k) != NodeType::interior)
            throw Error(ErrorCode::geometry, "ball is not compactly contained in the domain");
    const int i0 = std::max(0, static_cast<int>(std::floor((x.x - ro - g.x(0)) / g.h)));
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::ceil((x.x + ro - g.x(0)) / g.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((x.y - ro - g.y(0)) / g.h)));
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::ceil((x.y + ro - g.y(0)) / g.h)));
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            if (!d.active(i, j) && dist2(g.node(i, j), x) <= ro * ro)
                throw Error(ErrorCode::geometry, "ball is not compactly contained in the domain");
}

inline ScalarField transfer(const ScalarField& f, const DomainPtr& target)
{
    ScalarField out(target, 0.0);
    for (std::size_t k = 0; k < target->size(); ++k) {
        if (!target->active(k))
            continue;
        std::size_t pk = 0;
        if (!f.domain->locate_global(target->global_i(k), target->global_j(k), pk) || !f.domain->active(pk))
            throw Error(ErrorCode::geometry, "window node outside the source field");
        out.values[k] = f.values[pk];
    }
    return out;
}

} // namespace detail

// w: homogeneous problem on B_2r(x0) with the full coefficient and boundary
// values taken from u.
inline Solution solve_companion(const PDEProblem& prob, const Solution& u, const Point& x0, double r,
                                const SolverConfig& cfg = {})
{
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_parameter, "radius must be positive");
    const Domain& parent = *prob.domain();
    detail::require_compact_ball(parent, x0, 2.0 * r);
    auto window = share(Domain::ball_window(parent, x0, 2.0 * r, {}, detail::shell_width(parent.h())));
    PDEProblem sub;
    sub.coeff = restrict_to(prob.coeff, window);
    sub.p = prob.p;
    sub.s = prob.s;
    const ScalarField trace = detail::transfer(u.u, window);
    sub.boundary = trace;
    return solve(sub, cfg, trace);
}

// v: problem on B_r(x0) with the constant averaged coefficient (a)_{B_r(x0)}
// and boundary values taken from w.
inline Solution solve_frozen(const PDEProblem& prob, const Solution& w, const Point& x0, double r,
                             const SolverConfig& cfg = {})
{
    if (!(r > 0.0)) throw Error(ErrorCode::invalid_parameter, "radius must be positive");
    const Domain& wd = *w.domain();
    if (dist(x0, wd.center()) + r > wd.half_width() * (1.0 + 1e-12))
        throw Error(ErrorCode::geometry, "frozen ball leaves the companion ball");
    detail::require_compact_ball(wd, x0, r);
    auto window = share(Domain::ball_window(wd, x0, r, {}, detail::shell_width(wd.h())));
    const Mat2 avg = ball_average(prob.coeff, x0, r);
    PDEProblem sub;
    sub.coeff = sample_coefficient(window, prob.coeff.lambda, [&](const Point&) { return avg; });
    sub.p = prob.p;
    sub.s = prob.s;
    const ScalarField trace = detail::transfer(w.u, window);
    sub.boundary = trace;
    return solve(sub, cfg, trace);
}

} // namespace wolfflab
